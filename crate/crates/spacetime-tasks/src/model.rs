//! Task data model, the `.stq` text format, shipped fixtures and the
//! access-structure embedding.

use crate::error::{Error, Result};
use crate::geometry::{Diamond, Point, Region};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SummoningVariant {
    SingleCallSingleReturn,
    ManyCallManyReturn,
    UnrestrictedCallSingleReturn,
}

impl SummoningVariant {
    pub fn keyword(self) -> &'static str {
        match self {
            SummoningVariant::SingleCallSingleReturn => "single_call_single_return",
            SummoningVariant::ManyCallManyReturn => "many_call_many_return",
            SummoningVariant::UnrestrictedCallSingleReturn => "unrestricted_call_single_return",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        [
            SummoningVariant::SingleCallSingleReturn,
            SummoningVariant::ManyCallManyReturn,
            SummoningVariant::UnrestrictedCallSingleReturn,
        ]
        .into_iter()
        .find(|v| v.keyword() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TaskKind {
    LocalizeExclude,
    StateAssembly,
    Summoning(SummoningVariant),
    PartyIndependentTransfer,
}

impl TaskKind {
    pub fn keyword(self) -> String {
        match self {
            TaskKind::LocalizeExclude => "localize_exclude".into(),
            TaskKind::StateAssembly => "state_assembly".into(),
            TaskKind::Summoning(v) => format!("summoning {}", v.keyword()),
            TaskKind::PartyIndependentTransfer => "party_independent_transfer".into(),
        }
    }

    fn uses_regions(self) -> bool {
        self == TaskKind::LocalizeExclude
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedDiamond {
    pub name: String,
    pub diamond: Diamond,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    pub dim: usize,
    pub start: Point,
    /// Building blocks of authorized/unauthorized regions (localize-exclude only).
    pub regions: Vec<Region>,
    /// Call/return diamonds (all other kinds).
    pub diamonds: Vec<NamedDiamond>,
    /// Each entry is one authorized set, given as names of regions or diamonds.
    pub authorized: Vec<Vec<String>>,
    pub unauthorized: Vec<Vec<String>>,
    pub secret_dim: usize,
}

/// Display label of a name set: `A1`, or `S1+S2` for unions.
pub fn set_label(names: &[String]) -> String {
    names.join("+")
}

impl TaskSpec {
    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    pub fn diamond(&self, name: &str) -> Option<&Diamond> {
        self.diamonds.iter().find(|d| d.name == name).map(|d| &d.diamond)
    }

    pub fn diamond_names(&self) -> Vec<String> {
        self.diamonds.iter().map(|d| d.name.clone()).collect()
    }

    fn union_of(&self, names: &[String]) -> Result<Region> {
        let parts = names
            .iter()
            .map(|n| self.region(n).ok_or_else(|| Error::InvalidTask(format!("unknown region {n}"))))
            .collect::<Result<Vec<_>>>()?;
        Region::union(set_label(names), parts)
    }

    /// Authorized regions of a localize-exclude task, one union per set.
    pub fn authorized_regions(&self) -> Result<Vec<Region>> {
        self.authorized.iter().map(|s| self.union_of(s)).collect()
    }

    pub fn unauthorized_regions(&self) -> Result<Vec<Region>> {
        self.unauthorized.iter().map(|s| self.union_of(s)).collect()
    }

    /// Authorized sets of diamonds; summoning without explicit sets uses singletons.
    pub fn authorized_sets(&self) -> Vec<Vec<String>> {
        if self.authorized.is_empty() && matches!(self.kind, TaskKind::Summoning(_)) {
            self.diamonds.iter().map(|d| vec![d.name.clone()]).collect()
        } else {
            self.authorized.clone()
        }
    }

    /// The three `(x1, x2)` diamond pairs of a transfer task, ordered by prefix.
    pub fn pit_pairs(&self) -> Result<Vec<(String, String)>> {
        let mut by_prefix: BTreeMap<String, [Option<String>; 2]> = BTreeMap::new();
        for d in &self.diamonds {
            let (prefix, last) = d.name.split_at(d.name.len().saturating_sub(1));
            let slot = match last {
                "1" => 0,
                "2" => 1,
                _ => return Err(Error::InvalidTask(format!("diamond {} must end in 1 or 2", d.name))),
            };
            let entry = by_prefix.entry(prefix.to_string()).or_default();
            if entry[slot].is_some() {
                return Err(Error::InvalidTask(format!("duplicate pair member {}", d.name)));
            }
            entry[slot] = Some(d.name.clone());
        }
        if self.diamonds.len() != 6 || by_prefix.len() != 3 {
            return Err(Error::InvalidTask("transfer tasks need exactly 6 diamonds in 3 pairs".into()));
        }
        by_prefix
            .into_values()
            .map(|[a, b]| match (a, b) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Error::InvalidTask("every pair needs members ending in 1 and 2".into())),
            })
            .collect()
    }

    /// Structural validation shared by the parser and programmatic builders.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_lines(&Lines::default())
    }

    fn validate_with_lines(&self, lines: &Lines) -> Result<()> {
        let err = |line: usize, msg: String| {
            if line == 0 {
                Error::InvalidTask(msg)
            } else {
                Error::Parse { line, msg }
            }
        };
        if self.secret_dim < 2 {
            return Err(err(lines.secret_dim, "secret_dim must be at least 2".into()));
        }
        if self.start.dim() != self.dim {
            return Err(err(lines.start, format!("start has dimension {} but task has {}", self.start.dim(), self.dim)));
        }
        let uses_regions = self.kind.uses_regions();
        if uses_regions && !self.diamonds.is_empty() {
            return Err(err(lines.diamonds.first().copied().unwrap_or(0), "kind/field mismatch: localize_exclude tasks take regions, not diamonds".into()));
        }
        if !uses_regions && !self.regions.is_empty() {
            return Err(err(lines.regions.first().copied().unwrap_or(0), format!("kind/field mismatch: {} tasks take diamonds, not regions", self.kind.keyword())));
        }
        match self.kind {
            TaskKind::Summoning(_) | TaskKind::PartyIndependentTransfer if !self.unauthorized.is_empty() => {
                return Err(err(lines.unauthorized.first().copied().unwrap_or(0), format!("kind/field mismatch: {} tasks have no unauthorized sets", self.kind.keyword())));
            }
            TaskKind::PartyIndependentTransfer if !self.authorized.is_empty() => {
                return Err(err(lines.authorized.first().copied().unwrap_or(0), "kind/field mismatch: transfer tasks have fixed authorized structure".into()));
            }
            _ => {}
        }
        if matches!(self.kind, TaskKind::LocalizeExclude | TaskKind::StateAssembly) && self.authorized.is_empty() {
            return Err(err(0, "at least one authorized set is required".into()));
        }
        if !matches!(self.kind, TaskKind::LocalizeExclude) && self.diamonds.is_empty() {
            return Err(err(0, "at least one diamond is required".into()));
        }
        let known: BTreeSet<&str> = if uses_regions {
            self.regions.iter().map(|r| r.name.as_str()).collect()
        } else {
            self.diamonds.iter().map(|d| d.name.as_str()).collect()
        };
        for (sets, ls) in [(&self.authorized, &lines.authorized), (&self.unauthorized, &lines.unauthorized)] {
            for (i, set) in sets.iter().enumerate() {
                let line = ls.get(i).copied().unwrap_or(0);
                if set.is_empty() {
                    return Err(err(line, "empty name set".into()));
                }
                if let Some(n) = set.iter().find(|n| !known.contains(n.as_str())) {
                    return Err(err(line, format!("unknown name {n}")));
                }
            }
        }
        let norm = |s: &Vec<String>| s.iter().cloned().collect::<BTreeSet<_>>();
        for (i, u) in self.unauthorized.iter().enumerate() {
            if self.authorized.iter().any(|a| norm(a) == norm(u)) {
                return Err(err(lines.unauthorized.get(i).copied().unwrap_or(0), format!("set {} is both authorized and unauthorized", set_label(u))));
            }
        }
        for r in &self.regions {
            if r.dim != self.dim {
                return Err(Error::DimMismatch(self.dim, r.dim));
            }
        }
        for d in &self.diamonds {
            if d.diamond.dim() != self.dim {
                return Err(Error::DimMismatch(self.dim, d.diamond.dim()));
            }
        }
        if self.kind == TaskKind::PartyIndependentTransfer {
            self.pit_pairs()?;
        }
        Ok(())
    }
}

/// Source lines of statements, for error reporting after parsing.
#[derive(Default)]
struct Lines {
    start: usize,
    secret_dim: usize,
    regions: Vec<usize>,
    diamonds: Vec<usize>,
    authorized: Vec<usize>,
    unauthorized: Vec<usize>,
}

/// Bits revealed at each call point.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CallPattern {
    pub bits: BTreeMap<String, bool>,
}

impl CallPattern {
    /// Pattern with exactly the listed diamonds called.
    pub fn from_called(task: &TaskSpec, called: &[&str]) -> Result<Self> {
        for c in called {
            if task.diamond(c).is_none() {
                return Err(Error::InvalidTask(format!("unknown diamond {c}")));
            }
        }
        Ok(CallPattern {
            bits: task.diamonds.iter().map(|d| (d.name.clone(), called.contains(&d.name.as_str()))).collect(),
        })
    }

    pub fn called(&self) -> Vec<String> {
        self.bits.iter().filter(|(_, b)| **b).map(|(n, _)| n.clone()).collect()
    }

    pub fn is_called(&self, name: &str) -> bool {
        self.bits.get(name).copied().unwrap_or(false)
    }

    pub fn validate(&self, task: &TaskSpec) -> Result<()> {
        let keys: BTreeSet<&str> = self.bits.keys().map(String::as_str).collect();
        let names: BTreeSet<&str> = task.diamonds.iter().map(|d| d.name.as_str()).collect();
        if keys != names {
            return Err(Error::InvalidTask("call pattern must cover exactly the task's diamonds".into()));
        }
        Ok(())
    }
}

/// Party-level secret sharing structure, parties numbered from 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccessStructure {
    pub n_parties: usize,
    pub authorized: Vec<BTreeSet<usize>>,
    pub unauthorized: Vec<BTreeSet<usize>>,
}

impl AccessStructure {
    pub fn new(n_parties: usize, authorized: Vec<Vec<usize>>, unauthorized: Vec<Vec<usize>>) -> Result<Self> {
        let conv = |v: Vec<Vec<usize>>| -> Vec<BTreeSet<usize>> {
            let mut out: Vec<BTreeSet<usize>> = Vec::new();
            for s in v {
                let s: BTreeSet<usize> = s.into_iter().collect();
                if !out.contains(&s) {
                    out.push(s);
                }
            }
            out
        };
        let a = AccessStructure { n_parties, authorized: conv(authorized), unauthorized: conv(unauthorized) };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_parties == 0 {
            return Err(Error::InvalidTask("access structure needs parties".into()));
        }
        for s in self.authorized.iter().chain(&self.unauthorized) {
            if s.is_empty() || s.iter().any(|&p| p == 0 || p > self.n_parties) {
                return Err(Error::InvalidTask(format!("subset {s:?} is not within 1..={}", self.n_parties)));
            }
        }
        if self.authorized.is_empty() {
            return Err(Error::InvalidTask("access structure needs an authorized set".into()));
        }
        if let Some(s) = self.unauthorized.iter().find(|u| self.authorized.contains(u)) {
            return Err(Error::InvalidTask(format!("subset {s:?} is both authorized and unauthorized")));
        }
        Ok(())
    }

    /// Text form: `parties N`, then `authorized i j …` and `unauthorized i j …` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let (mut a, mut u) = (Vec::new(), Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut words = line.split_whitespace();
            let head = words.next().unwrap_or_default();
            let nums = words
                .map(|w| w.parse::<usize>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad party index {w}") }))
                .collect::<Result<Vec<_>>>()?;
            match head {
                "parties" if nums.len() == 1 => n = Some(nums[0]),
                "authorized" => a.push(nums),
                "unauthorized" => u.push(nums),
                _ => return Err(Error::Parse { line: i + 1, msg: format!("unexpected statement {line}") }),
            }
        }
        let n = n.ok_or(Error::Parse { line: 0, msg: "missing parties line".into() })?;
        AccessStructure::new(n, a, u)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("parties {}\n", self.n_parties);
        for (kw, sets) in [("authorized", &self.authorized), ("unauthorized", &self.unauthorized)] {
            for s in sets {
                let parts: Vec<String> = s.iter().map(|p| p.to_string()).collect();
                let _ = writeln!(out, "{kw} {}", parts.join(" "));
            }
        }
        out
    }
}

/// Localize-exclude task whose parties are pairwise spacelike point regions at
/// equal time, `spacing` apart, with the start point early enough to see all.
pub fn embed_access_structure(a: &AccessStructure, spacing: f64) -> Result<TaskSpec> {
    a.validate()?;
    if spacing.is_nan() || spacing <= 0.0 {
        return Err(Error::InvalidTask("spacing must be positive".into()));
    }
    let n = a.n_parties;
    let regions = (1..=n)
        .map(|i| Region::point(format!("P{i}"), Point::p1(0.0, i as f64 * spacing)))
        .collect();
    let names = |s: &BTreeSet<usize>| s.iter().map(|p| format!("P{p}")).collect::<Vec<_>>();
    let task = TaskSpec {
        kind: TaskKind::LocalizeExclude,
        dim: 1,
        start: Point::p1(-((n + 1) as f64) * spacing, 0.5 * (n + 1) as f64 * spacing),
        regions,
        diamonds: Vec::new(),
        authorized: a.authorized.iter().map(names).collect(),
        unauthorized: a.unauthorized.iter().map(names).collect(),
        secret_dim: 3,
    };
    task.validate()?;
    Ok(task)
}

// ---------------------------------------------------------------------------
// Parsing

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_num(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| perr(line, format!("bad number {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(perr(line, format!("non-finite number {s:?}")))
    }
}

/// `key=(…)` / `key=[…]` pairs in order of appearance.
fn key_groups(s: &str, line: usize) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let eq = rest.find('=').ok_or_else(|| perr(line, format!("expected key=value in {rest:?}")))?;
        let key = rest[..eq].trim().to_string();
        let after = rest[eq + 1..].trim_start();
        let close = match after.chars().next() {
            Some('(') => ')',
            Some('[') => ']',
            _ => return Err(perr(line, format!("expected ( or [ after {key}="))),
        };
        let end = after.find(close).ok_or_else(|| perr(line, format!("unclosed group after {key}=")))?;
        out.push((key, after[1..end].to_string()));
        rest = after[end + 1..].trim_start();
    }
    Ok(out)
}

fn parse_point(inner: &str, dim: usize, line: usize) -> Result<Point> {
    let nums = inner.split(',').map(|p| parse_num(p, line)).collect::<Result<Vec<_>>>()?;
    if nums.len() != dim + 1 {
        return Err(perr(line, format!("point needs {} coordinates, got {}", dim + 1, nums.len())));
    }
    Point::new(nums[0], nums[1..].to_vec()).map_err(|e| perr(line, e.to_string()))
}

fn parse_interval(inner: &str, line: usize) -> Result<(f64, f64)> {
    let nums = inner.split(',').map(|p| parse_num(p, line)).collect::<Result<Vec<_>>>()?;
    match nums.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(perr(line, "interval needs two numbers")),
    }
}

fn diamond_from_cr(groups: &[(String, String)], dim: usize, line: usize) -> Result<Diamond> {
    let get = |k: &str| {
        groups
            .iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| perr(line, format!("diamond missing {k}=")))
    };
    if groups.len() != 2 {
        return Err(perr(line, "diamond takes exactly c=(…) and r=(…)"));
    }
    let c = parse_point(get("c")?, dim, line)?;
    let r = parse_point(get("r")?, dim, line)?;
    Diamond::new(c, r).map_err(|_| perr(line, "diamond not causal: c does not precede r"))
}

fn parse_region_item(item: &str, dim: usize, line: usize) -> Result<Diamond> {
    let item = item.trim();
    if let Some(rest) = item.strip_prefix("diamond") {
        diamond_from_cr(&key_groups(rest, line)?, dim, line)
    } else if let Some(rest) = item.strip_prefix("box") {
        if dim != 1 {
            return Err(perr(line, "box sugar is only available in dim 1"));
        }
        let g = key_groups(rest, line)?;
        match g.as_slice() {
            [(ku, u), (kv, v)] if ku == "u" && kv == "v" => {
                let (u, v) = (parse_interval(u, line)?, parse_interval(v, line)?);
                Diamond::from_box(u, v).map_err(|_| perr(line, "diamond not causal: box bounds reversed"))
            }
            _ => Err(perr(line, "box takes u=[a,b] v=[c,d]")),
        }
    } else {
        Err(perr(line, format!("unknown region item {item:?}")))
    }
}

fn check_name(name: &str, line: usize) -> Result<()> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-');
    if ok {
        Ok(())
    } else {
        Err(perr(line, format!("bad name {name:?}")))
    }
}

/// Parse a `.stq` task file.
pub fn parse_task(text: &str) -> Result<TaskSpec> {
    let mut kind = None;
    let mut dim: Option<usize> = None;
    let mut geometry_seen = false;
    let mut start = None;
    let mut secret_dim = 3;
    let mut regions: Vec<Region> = Vec::new();
    let mut diamonds: Vec<NamedDiamond> = Vec::new();
    let (mut authorized, mut unauthorized) = (Vec::new(), Vec::new());
    let mut lines = Lines::default();
    let mut names: BTreeMap<String, usize> = BTreeMap::new();

    let src: Vec<(usize, String)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim().to_string()))
        .collect();
    let mut idx = 0;
    while idx < src.len() {
        let (ln, line) = (src[idx].0, src[idx].1.clone());
        idx += 1;
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(char::is_whitespace).unwrap_or((line.as_str(), ""));
        let rest = rest.trim();
        let cur_dim = |geometry_seen: &mut bool, dim: &Option<usize>| {
            *geometry_seen = true;
            dim.unwrap_or(1)
        };
        match head {
            "task" => {
                if kind.is_some() {
                    return Err(perr(ln, "duplicate task statement"));
                }
                let mut w = rest.split_whitespace();
                kind = Some(match (w.next(), w.next()) {
                    (Some("localize_exclude"), None) => TaskKind::LocalizeExclude,
                    (Some("state_assembly"), None) => TaskKind::StateAssembly,
                    (Some("party_independent_transfer"), None) => TaskKind::PartyIndependentTransfer,
                    (Some("summoning"), v) => TaskKind::Summoning(match v {
                        None => SummoningVariant::SingleCallSingleReturn,
                        Some(v) => SummoningVariant::from_keyword(v)
                            .ok_or_else(|| perr(ln, format!("unknown summoning variant {v}")))?,
                    }),
                    _ => return Err(perr(ln, format!("unknown task kind {rest:?}"))),
                });
                if w.next().is_some() {
                    return Err(perr(ln, "trailing words after task kind"));
                }
            }
            "dim" => {
                let d: usize = rest.parse().map_err(|_| perr(ln, format!("bad dimension {rest:?}")))?;
                if d == 0 {
                    return Err(perr(ln, "dimension must be at least 1"));
                }
                if dim.is_some() || (geometry_seen && d != 1) {
                    return Err(perr(ln, "dim must be declared once, before any coordinates"));
                }
                dim = Some(d);
            }
            "secret_dim" => {
                secret_dim = rest.parse().map_err(|_| perr(ln, format!("bad secret_dim {rest:?}")))?;
                lines.secret_dim = ln;
            }
            "start" => {
                let d = cur_dim(&mut geometry_seen, &dim);
                let inner = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| perr(ln, "start takes (t,x…)"))?;
                if start.is_some() {
                    return Err(perr(ln, "duplicate start"));
                }
                start = Some(parse_point(inner, d, ln)?);
                lines.start = ln;
            }
            "diamond" => {
                let d = cur_dim(&mut geometry_seen, &dim);
                let (name, body) = rest.split_once(char::is_whitespace).ok_or_else(|| perr(ln, "diamond needs a name"))?;
                check_name(name, ln)?;
                if names.insert(name.to_string(), ln).is_some() {
                    return Err(perr(ln, format!("duplicate name {name}")));
                }
                let diamond = diamond_from_cr(&key_groups(body, ln)?, d, ln)?;
                diamonds.push(NamedDiamond { name: name.to_string(), diamond });
                lines.diamonds.push(ln);
            }
            "region" => {
                let d = cur_dim(&mut geometry_seen, &dim);
                let (name, after) = rest.split_once('{').ok_or_else(|| perr(ln, "region needs { … }"))?;
                let name = name.trim();
                check_name(name, ln)?;
                if names.insert(name.to_string(), ln).is_some() {
                    return Err(perr(ln, format!("duplicate name {name}")));
                }
                // gather the block, possibly across lines
                let mut body: Vec<(usize, String)> = Vec::new();
                let mut chunk = after.to_string();
                let mut chunk_line = ln;
                loop {
                    if let Some(end) = chunk.find('}') {
                        if !chunk[end + 1..].trim().is_empty() {
                            return Err(perr(chunk_line, "text after closing }"));
                        }
                        body.push((chunk_line, chunk[..end].to_string()));
                        break;
                    }
                    body.push((chunk_line, chunk.clone()));
                    if idx >= src.len() {
                        return Err(perr(ln, format!("region {name} is not closed")));
                    }
                    chunk_line = src[idx].0;
                    chunk = src[idx].1.clone();
                    idx += 1;
                }
                let mut ds = Vec::new();
                for (l, text) in body {
                    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                        ds.push(parse_region_item(item, d, l)?);
                    }
                }
                regions.push(Region::new(name, ds).map_err(|e| perr(ln, e.to_string()))?);
                lines.regions.push(ln);
            }
            "authorized" | "unauthorized" => {
                let set: Vec<String> = rest.split_whitespace().map(String::from).collect();
                if set.is_empty() {
                    return Err(perr(ln, format!("{head} needs at least one name")));
                }
                if head == "authorized" {
                    authorized.push(set);
                    lines.authorized.push(ln);
                } else {
                    unauthorized.push(set);
                    lines.unauthorized.push(ln);
                }
            }
            other => return Err(perr(ln, format!("unknown statement {other:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| perr(1, "missing task statement"))?;
    let dim = dim.unwrap_or(1);
    let start = start.ok_or_else(|| perr(src.len().max(1), "missing start"))?;
    let task = TaskSpec { kind, dim, start, regions, diamonds, authorized, unauthorized, secret_dim };
    task.validate_with_lines(&lines)?;
    Ok(task)
}

/// Canonical text form; `parse_task(&serialize_task(t)) == t`.
pub fn serialize_task(t: &TaskSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "task {}", t.kind.keyword());
    let _ = writeln!(out, "dim {}", t.dim);
    let _ = writeln!(out, "secret_dim {}", t.secret_dim);
    let _ = writeln!(out, "start {}", t.start);
    for r in &t.regions {
        let items: Vec<String> = r.diamonds.iter().map(|d| format!("diamond c={} r={}", d.c, d.r)).collect();
        let _ = writeln!(out, "region {} {{ {} }}", r.name, items.join(" ; "));
    }
    for d in &t.diamonds {
        let _ = writeln!(out, "diamond {} c={} r={}", d.name, d.diamond.c, d.diamond.r);
    }
    for s in &t.authorized {
        let _ = writeln!(out, "authorized {}", s.join(" "));
    }
    for s in &t.unauthorized {
        let _ = writeln!(out, "unauthorized {}", s.join(" "));
    }
    out
}

/// Task files shipped with the crate.
pub mod fixtures {
    pub const FIG1: &str = include_str!("../fixtures/FIG1.stq");
    pub const FIG7A: &str = include_str!("../fixtures/FIG7A.stq");
    pub const FIG7B: &str = include_str!("../fixtures/FIG7B.stq");
    pub const FIG7C: &str = include_str!("../fixtures/FIG7C.stq");
    pub const FIG7D: &str = include_str!("../fixtures/FIG7D.stq");
    pub const FIG10: &str = include_str!("../fixtures/FIG10.stq");
    pub const FIG11: &str = include_str!("../fixtures/FIG11.stq");
    pub const FIG12: &str = include_str!("../fixtures/FIG12.stq");
    pub const FIG13: &str = include_str!("../fixtures/FIG13.stq");
    pub const FIG13_SPLIT: &str = include_str!("../fixtures/FIG13_SPLIT.stq");
    pub const FIG14: &str = include_str!("../fixtures/FIG14.stq");
    pub const FIG15: &str = include_str!("../fixtures/FIG15.stq");
    pub const EMBED3: &str = include_str!("../fixtures/EMBED3.stq");
    pub const FIG8_ACCESS: &str = include_str!("../fixtures/FIG8.acc");

    pub const ALL: [(&str, &str); 13] = [
        ("FIG1", FIG1),
        ("FIG7A", FIG7A),
        ("FIG7B", FIG7B),
        ("FIG7C", FIG7C),
        ("FIG7D", FIG7D),
        ("FIG10", FIG10),
        ("FIG11", FIG11),
        ("FIG12", FIG12),
        ("FIG13", FIG13),
        ("FIG13_SPLIT", FIG13_SPLIT),
        ("FIG14", FIG14),
        ("FIG15", FIG15),
        ("EMBED3", EMBED3),
    ];

    pub fn load(name: &str) -> crate::Result<crate::model::TaskSpec> {
        let text = ALL
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| crate::Error::InvalidTask(format!("no fixture named {name}")))?;
        crate::model::parse_task(text)
    }
}
