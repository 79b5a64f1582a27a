use clap::{Args, Parser, Subcommand};
use spacetime_tasks::engine::{execute, run_transfer, validate_plan, Outcome, Scenario};
use spacetime_tasks::feasibility::{check_access_structure, check_task, Verdict};
use spacetime_tasks::model::{embed_access_structure, parse_task, serialize_task, set_label, AccessStructure, CallPattern, SummoningVariant, TaskKind, TaskSpec};
use spacetime_tasks::planner::{plan_pit, plan_task, scheme_cost, PAD_KEY_BYTES};
use spacetime_tasks::render::render_svg;
use spacetime_tasks::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "stq", version, about = "Check, plan and simulate quantum tasks in Minkowski space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TaskArg {
    /// Task file (.stq), or an access-structure file (.acc) for `check`.
    #[arg(value_name = "FILE", required_unless_present = "task")]
    file: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "file")]
    task: Option<PathBuf>,
    /// Override the summoning variant.
    #[arg(long, value_name = "V")]
    variant: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide feasibility.
    Check {
        #[command(flatten)]
        task: TaskArg,
    },
    /// Print the protocol event log.
    Plan {
        #[command(flatten)]
        task: TaskArg,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Execute a plan under an access or call scenario.
    Simulate {
        #[command(flatten)]
        task: TaskArg,
        /// Region name or set label (e.g. U1, D1+D2).
        #[arg(long, conflicts_with = "calls")]
        access: Option<String>,
        /// Comma-separated called diamonds.
        #[arg(long)]
        calls: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Embed an access structure as a localize-exclude task.
    Embed {
        #[arg(value_name = "FILE")]
        file: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        spacing: f64,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
    /// Resource counts for the edge code with padded keys.
    Cost {
        #[arg(value_name = "FILE")]
        file: Option<PathBuf>,
        #[arg(short = 'n', long)]
        n: Option<usize>,
        #[arg(short = 'm', long)]
        m: Option<usize>,
        /// Key length in bits per share.
        #[arg(long, default_value_t = 8 * PAD_KEY_BYTES)]
        bits: usize,
    },
    /// Draw the task as SVG.
    Render {
        #[command(flatten)]
        task: TaskArg,
        /// Overlay the plan's worldlines when the task is plannable.
        #[arg(long)]
        plan: bool,
        #[arg(short = 'o', value_name = "OUT")]
        out: Option<PathBuf>,
    },
}

enum Fail {
    Usage(String),
    Negative(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused(_) | Error::Audit { .. } => Fail::Negative(e.to_string()),
            _ => Fail::Usage(e.to_string()),
        }
    }
}

type Out = Result<(String, bool), Fail>;

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| Fail::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load(arg: &TaskArg) -> Result<TaskSpec, Fail> {
    let path = arg.file.as_ref().or(arg.task.as_ref()).ok_or_else(|| Fail::Usage("no task file".into()))?;
    let mut t = parse_task(&read(path)?)?;
    if let Some(v) = &arg.variant {
        let variant = SummoningVariant::from_keyword(v).ok_or_else(|| Fail::Usage(format!("unknown variant {v}")))?;
        if !matches!(t.kind, TaskKind::Summoning(_)) {
            return Err(Fail::Usage("--variant applies to summoning tasks".into()));
        }
        t.kind = TaskKind::Summoning(variant);
    }
    Ok(t)
}

fn verdict_report(v: &Verdict) -> String {
    let mut s = format!("{v}\n---\nfeasible={}\n", v.feasible);
    for x in &v.violations {
        s.push_str(&format!("violation={}:{}\n", x.condition, x.witness.join(",")));
    }
    s
}

fn check(arg: &TaskArg) -> Out {
    let path = arg.file.as_ref().or(arg.task.as_ref()).ok_or_else(|| Fail::Usage("no task file".into()))?;
    if path.extension().is_some_and(|e| e == "acc") {
        let v = check_access_structure(&AccessStructure::parse(&read(path)?)?)?;
        return Ok((verdict_report(&v), v.feasible));
    }
    let t = load(arg)?;
    if t.kind == TaskKind::PartyIndependentTransfer {
        // no criterion beyond the protocol's own topology requirements
        return Ok(match plan_pit(&t) {
            Ok(_) => ("transfer topology holds\n---\nfeasible=true\n".to_string(), true),
            Err(Error::Refused(msg)) => (format!("{msg}\n---\nfeasible=false\n"), false),
            Err(e) => return Err(e.into()),
        });
    }
    let v = check_task(&t, None)?;
    Ok((verdict_report(&v), v.feasible))
}

fn outcome_report(o: &Outcome) -> String {
    let mut s = String::new();
    let num = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.12}"));
    s.push_str(&format!("fidelity={}\n", num(o.fidelity)));
    s.push_str(&format!("factorization_distance={}\n", num(o.factorization_distance)));
    s.push_str(&format!("reconstructing=[{}]\n", o.reconstructing.join(",")));
    s.push_str(&format!("disjoint_copies={}\n", o.disjoint_copies));
    s.push_str(&format!("symbolic={}\n", o.symbolic));
    s.push_str(&format!("collected=[{}]\n", o.collected.join(",")));
    let handed: Vec<String> = o.handed.iter().map(|(d, t)| format!("{d}:{t}")).collect();
    s.push_str(&format!("handed=[{}]\n", handed.join(",")));
    s.push_str("events:\n");
    for l in &o.log {
        s.push_str(&format!("  {l}\n"));
    }
    s
}

fn simulate(arg: &TaskArg, access: &Option<String>, calls: &Option<String>, seed: u64, tol: f64) -> Out {
    let t = load(arg)?;
    let plan = plan_task(&t)?;
    let audit = validate_plan(&plan, &t);
    let mut report = format!("audit:\n{audit}");
    if !audit.passed() {
        return Ok((report, false));
    }
    if t.kind == TaskKind::PartyIndependentTransfer {
        let rep = run_transfer(&plan, &t, seed)?;
        report.push_str(&format!(
            "receiver={}\ncalled=[{}]\nreceived={:?}\nfidelity={:.12}\ntest_pass={:.12}\n",
            rep.receiver,
            rep.calls.called().join(","),
            rep.received,
            rep.fidelity,
            rep.test_pass
        ));
        report.push_str(&outcome_report(&rep.outcome));
        let pass = rep.fidelity >= 1.0 - tol && (rep.test_pass - 1.0).abs() <= tol;
        return Ok((report, pass));
    }
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    let mut cases: Vec<(String, Scenario, bool, bool)> = Vec::new();
    match (access, calls) {
        (Some(name), None) => {
            let auth = t.authorized.iter().any(|s| set_label(s) == *name);
            let unauth = t.unauthorized.iter().any(|s| set_label(s) == *name);
            cases.push((format!("access {name}"), Scenario::access(name, seed), auth, unauth));
        }
        (None, Some(list)) => {
            let called: Vec<String> = list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            let refs: Vec<&str> = called.iter().map(|s| s.as_str()).collect();
            let pattern = CallPattern::from_called(&t, &refs)?;
            let c = sorted(&called);
            let auth = t.authorized_sets().iter().any(|s| sorted(s) == c);
            let unauth = t.unauthorized.iter().any(|s| sorted(s) == c);
            cases.push((format!("calls {}", c.join(",")), Scenario::calls(pattern, seed), auth, unauth));
        }
        (None, None) => {
            let le = t.kind == TaskKind::LocalizeExclude;
            let auth = if le { t.authorized.clone() } else { t.authorized_sets() };
            for (sets, is_auth) in [(&auth, true), (&t.unauthorized, false)] {
                for s in sets.iter() {
                    let label = set_label(s);
                    let scenario = if le {
                        Scenario::access(&label, seed)
                    } else {
                        let refs: Vec<&str> = s.iter().map(|x| x.as_str()).collect();
                        Scenario::calls(CallPattern::from_called(&t, &refs)?, seed)
                    };
                    let what = if le { "access" } else { "calls" };
                    cases.push((format!("{what} {label}"), scenario, is_auth, !is_auth));
                }
            }
        }
        _ => return Err(Fail::Usage("--access and --calls are exclusive".into())),
    }
    let mut all = true;
    for (title, scenario, expect_auth, expect_excl) in cases {
        let o = execute(&plan, &t, &scenario)?;
        let mut pass = !o.disjoint_copies;
        if expect_auth {
            pass &= o.fidelity.map_or(o.symbolic && !o.reconstructing.is_empty(), |f| f >= 1.0 - tol);
        }
        if expect_excl {
            pass &= o.reconstructing.is_empty() && o.factorization_distance.is_none_or(|d| d <= tol);
        }
        all &= pass;
        report.push_str(&format!("== {title}\n"));
        report.push_str(&outcome_report(&o));
        report.push_str(&format!("result={}\n", if pass { "pass" } else { "fail" }));
    }
    Ok((report, all))
}

fn cost(file: &Option<PathBuf>, n: Option<usize>, m: Option<usize>, bits: usize) -> Out {
    let (n, m) = match (file, n) {
        (Some(p), _) => {
            let t = parse_task(&read(p)?)?;
            (n.unwrap_or(t.authorized.len()), m.unwrap_or(t.unauthorized.len()))
        }
        (None, Some(n)) => (n, m.unwrap_or(0)),
        (None, None) => return Err(Fail::Usage("cost needs a task file or -n".into())),
    };
    Ok((format!("{}\n", scheme_cost(n, m, bits)?), true))
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<String, Fail> {
    match out {
        Some(p) => {
            std::fs::write(p, &text).map_err(|e| Fail::Usage(format!("cannot write {}: {e}", p.display())))?;
            Ok(format!("wrote {}\n", p.display()))
        }
        None => Ok(text),
    }
}

fn run(cli: Cli) -> Out {
    match cli.command {
        Command::Check { task } => check(&task),
        Command::Plan { task, out } => {
            let t = load(&task)?;
            let plan = plan_task(&t)?;
            Ok((emit(plan.to_log(), &out)?, true))
        }
        Command::Simulate { task, access, calls, seed, tol } => simulate(&task, &access, &calls, seed, tol),
        Command::Embed { file, spacing, out } => {
            let a = AccessStructure::parse(&read(&file)?)?;
            let t = embed_access_structure(&a, spacing)?;
            Ok((emit(serialize_task(&t), &out)?, true))
        }
        Command::Cost { file, n, m, bits } => cost(&file, n, m, bits),
        Command::Render { task, plan, out } => {
            let t = load(&task)?;
            let p = if plan { plan_task(&t).ok() } else { None };
            Ok((emit(render_svg(&t, p.as_ref()), &out)?, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok((text, ok)) => {
            print!("{text}");
            ExitCode::from(if ok { 0 } else { 2 })
        }
        Err(Fail::Negative(msg)) => {
            println!("{msg}");
            ExitCode::from(2)
        }
        Err(Fail::Usage(msg)) => {
            eprintln!("stq: {msg}");
            ExitCode::from(1)
        }
    }
}
