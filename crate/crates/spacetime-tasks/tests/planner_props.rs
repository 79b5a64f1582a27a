use proptest::prelude::*;
use spacetime_tasks::engine::{execute, validate_plan, Scenario};
use spacetime_tasks::feasibility::{check_assembly, check_localize_exclude};
use spacetime_tasks::geometry::{Diamond, Point, Region};
use spacetime_tasks::model::{parse_task, set_label, CallPattern, NamedDiamond, TaskKind, TaskSpec};
use spacetime_tasks::planner::{plan_task, Event};
use spacetime_tasks::Error;

const TOL: f64 = 1e-9;

fn boxed(b: [i32; 4]) -> Diamond {
    Diamond::from_box((b[0] as f64, b[1] as f64), (b[2] as f64, b[3] as f64)).unwrap()
}

fn ibox() -> impl Strategy<Value = [i32; 4]> {
    (-4i32..8, 0i32..4, -4i32..8, 0i32..4).prop_map(|(u, du, v, dv)| [u, u + du, v, v + dv])
}

fn le_task(auth: &[Vec<[i32; 4]>], unauth: &[[i32; 4]]) -> TaskSpec {
    let mut regions = Vec::new();
    let mut authorized = Vec::new();
    let mut unauthorized = Vec::new();
    for (i, bs) in auth.iter().enumerate() {
        regions.push(Region::new(format!("A{}", i + 1), bs.iter().map(|b| boxed(*b)).collect()).unwrap());
        authorized.push(vec![format!("A{}", i + 1)]);
    }
    for (i, b) in unauth.iter().enumerate() {
        regions.push(Region::new(format!("U{}", i + 1), vec![boxed(*b)]).unwrap());
        unauthorized.push(vec![format!("U{}", i + 1)]);
    }
    TaskSpec {
        kind: TaskKind::LocalizeExclude,
        dim: 1,
        start: Point::from_uv(0.0, 0.0),
        regions,
        diamonds: vec![],
        authorized,
        unauthorized,
        secret_dim: 3,
    }
}

/// Plans a feasible localize-exclude task and checks every access.
fn verify_le(t: &TaskSpec, seed: u64) -> Result<(), TestCaseError> {
    let plan = plan_task(t).map_err(|e| TestCaseError::fail(format!("{e}")))?;
    let audit = validate_plan(&plan, t);
    prop_assert!(audit.passed(), "{}", audit);
    for s in &t.authorized {
        let out = execute(&plan, t, &Scenario::access(&set_label(s), seed)).unwrap();
        let f = out.fidelity.unwrap_or(0.0);
        prop_assert!(f >= 1.0 - TOL, "{} fidelity {}\n{}", set_label(s), f, plan.to_log());
    }
    for s in &t.unauthorized {
        let out = execute(&plan, t, &Scenario::access(&set_label(s), seed)).unwrap();
        prop_assert!(out.reconstructing.is_empty(), "{} reconstructs\n{}", set_label(s), plan.to_log());
        let d = out.factorization_distance.unwrap();
        prop_assert!(d <= TOL, "{} distance {}\n{}", set_label(s), d, plan.to_log());
    }
    Ok(())
}

#[test]
fn disconnected_pieces_force_teleportation() {
    let t = parse_task(
        "task localize_exclude\nstart (0,0)\n\
         region A1 { box u=[0,1] v=[5,6] ; box u=[-10,-9] v=[-10,-9] }\n\
         region A2 { box u=[5,6] v=[0,1] ; box u=[-8,-7] v=[-8,-7] }\n\
         region U1 { box u=[2,3] v=[2,3] }\n\
         authorized A1\nauthorized A2\nunauthorized U1\n",
    )
    .unwrap();
    assert!(check_localize_exclude(&t).unwrap().feasible);
    let plan = plan_task(&t).unwrap();
    assert_eq!(plan.events.iter().filter(|e| matches!(e, Event::BellMeasure { .. })).count(), 1);
    verify_le(&t, 1).unwrap();
    // the outcome alone, without the partner, reveals nothing
    for seed in 0..5 {
        let out = execute(&plan, &t, &Scenario::access("U1", seed)).unwrap();
        assert!(out.factorization_distance.unwrap() <= TOL);
    }
}

#[test]
fn dropping_the_pad_breaks_exclusion() {
    let t = spacetime_tasks::model::fixtures::load("FIG1").unwrap();
    let mut plan = plan_task(&t).unwrap();
    let before = execute(&plan, &t, &Scenario::access("U1", 0)).unwrap();
    assert!(before.factorization_distance.unwrap() <= TOL);
    plan.events.retain(|e| !matches!(e, Event::EncodeScheme { scheme: spacetime_tasks::planner::Scheme::Qotp, .. }));
    let after = execute(&plan, &t, &Scenario::access("U1", 0)).unwrap();
    assert!(!after.reconstructing.is_empty());
    assert!(after.factorization_distance.unwrap() > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The planner succeeds exactly on feasible tasks and its plans meet the task.
    #[test]
    fn localize_exclude_planner_is_sound_and_total(
        auth in prop::collection::vec(prop::collection::vec(ibox(), 1..=2), 1..=3),
        unauth in prop::collection::vec(ibox(), 0..=2),
        seed in 0u64..1000,
    ) {
        let t = le_task(&auth, &unauth);
        let verdict = check_localize_exclude(&t).unwrap();
        match plan_task(&t) {
            Err(Error::Refused(_)) => prop_assert!(!verdict.feasible),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
            Ok(_) => {
                prop_assert!(verdict.feasible);
                verify_le(&t, seed)?;
            }
        }
    }

    #[test]
    fn assembly_planner_meets_every_call_pattern(
        boxes in prop::collection::vec((-6i32..6, -6i32..6, 0i32..4), 2..=4),
        sets in prop::collection::vec(prop::collection::btree_set(0usize..4, 1..=3), 1..=3),
        bad in prop::collection::vec(prop::collection::btree_set(0usize..4, 1..=4), 0..=2),
        start in (-10i32..0, -10i32..0),
    ) {
        let n = boxes.len();
        let diamonds: Vec<NamedDiamond> = boxes
            .iter()
            .enumerate()
            .map(|(i, &(u, v, w))| NamedDiamond { name: format!("D{i}"), diamond: boxed([u, u + w, v, v + w]) })
            .collect();
        let name = |s: &std::collections::BTreeSet<usize>| -> Option<Vec<String>> {
            if s.iter().any(|&i| i >= n) { None } else { Some(s.iter().map(|i| format!("D{i}")).collect()) }
        };
        let authorized: Vec<Vec<String>> = sets.iter().filter_map(name).collect();
        let unauthorized: Vec<Vec<String>> = bad.iter().filter_map(name).filter(|u| !authorized.contains(u)).collect();
        prop_assume!(!authorized.is_empty());
        let mut t = TaskSpec {
            kind: TaskKind::StateAssembly,
            dim: 1,
            start: Point::from_uv(start.0 as f64, start.1 as f64),
            regions: vec![],
            diamonds,
            authorized,
            unauthorized,
            secret_dim: 3,
        };
        t.authorized.dedup();
        prop_assume!(t.validate().is_ok());
        let verdict = check_assembly(&t).unwrap();
        let plan = match plan_task(&t) {
            Err(Error::Refused(_)) => { prop_assert!(!verdict.feasible); return Ok(()); }
            Err(Error::Unsupported(_)) => { prop_assert!(verdict.feasible); return Ok(()); }
            Err(e) => { prop_assert!(false, "unexpected error {e}"); unreachable!() }
            Ok(p) => p,
        };
        prop_assert!(verdict.feasible);
        let audit = validate_plan(&plan, &t);
        prop_assert!(audit.passed(), "{}", audit);
        let sorted = |v: &[String]| { let mut v = v.to_vec(); v.sort(); v };
        for mask in 0u32..1 << n {
            let called: Vec<String> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| format!("D{i}")).collect();
            let refs: Vec<&str> = called.iter().map(|s| s.as_str()).collect();
            let out = execute(&plan, &t, &Scenario::calls(CallPattern::from_called(&t, &refs).unwrap(), 3)).unwrap();
            prop_assert!(!out.disjoint_copies);
            if t.authorized.iter().any(|a| sorted(a) == called) {
                prop_assert!(out.fidelity.unwrap_or(0.0) >= 1.0 - TOL, "{:?}\n{}", called, plan.to_log());
            }
            if t.unauthorized.iter().any(|u| sorted(u) == called) {
                prop_assert!(out.reconstructing.is_empty(), "{:?}\n{}", called, plan.to_log());
                prop_assert!(out.factorization_distance.unwrap() <= TOL);
            }
        }
    }
}

/// The only link runs from the authorized call to the extra unauthorized
/// diamond's return, so agents in the authorized set cannot see that call.
#[test]
fn reverse_only_link_is_reported_not_planned() {
    let t = parse_task(
        "task state_assembly\nstart (-10,0)\n\
         diamond D c=(0,0) r=(1,0)\ndiamond X c=(0.5,3) r=(4,3)\n\
         authorized D\nunauthorized D X\n",
    )
    .unwrap();
    assert!(check_assembly(&t).unwrap().feasible);
    match plan_task(&t) {
        Err(Error::Unsupported(msg)) => assert!(msg.contains("opposite causal direction"), "{msg}"),
        other => panic!("unexpected {other:?}"),
    }
}
