//! Feasibility verdicts from causal conditions.

use crate::error::{Error, Result};
use crate::geometry::{
    causal_leq, diamonds_connected, escape_exists, region_in_future, regions_causally_connected,
    verify_witness_curve, Diamond, Polyline, Region,
};
use crate::model::{set_label, AccessStructure, SummoningVariant, TaskKind, TaskSpec};
use std::collections::BTreeSet;
use std::fmt;

/// Largest diamond count accepted by the subset condition.
pub const MAX_SUBSET_DIAMONDS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    IA,
    IB,
    II,
    III,
    B1,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::IA => "I_A",
            Condition::IB => "I_B",
            Condition::II => "II",
            Condition::III => "III",
            Condition::B1 => "B1",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub condition: Condition,
    pub witness: Vec<String>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.condition, self.witness.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl Verdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Verdict { feasible: violations.is_empty(), violations }
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn conditions(&self) -> BTreeSet<Condition> {
        self.violations.iter().map(|v| v.condition).collect()
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.feasible {
            return f.write_str("feasible");
        }
        f.write_str("infeasible")?;
        for v in &self.violations {
            write!(f, "\n  violated {v}")?;
        }
        Ok(())
    }
}

fn violation(condition: Condition, witness: &[&str]) -> Violation {
    Violation { condition, witness: witness.iter().map(|s| s.to_string()).collect() }
}

/// Caller-supplied escape curves for dimensions where no exact test exists.
/// Keys are `(through, avoiding)` labels; `through` is `"s"` for the start point.
#[derive(Clone, Debug, Default)]
pub struct WitnessCurves {
    pub curves: Vec<(String, String, Polyline)>,
    /// Sampling step used when checking a curve.
    pub step: f64,
}

impl WitnessCurves {
    fn find(&self, through: &str, avoiding: &str) -> Option<&Polyline> {
        self.curves
            .iter()
            .find(|(t, a, _)| t == through && a == avoiding)
            .map(|(_, _, c)| c)
    }
}

fn escape_or_witness(
    through: &Region,
    avoiding: &Region,
    dim: usize,
    witnesses: Option<&WitnessCurves>,
) -> Result<bool> {
    if dim == 1 {
        return escape_exists(through, avoiding);
    }
    let undecidable = || {
        Error::Undecidable(format!(
            "escape from {} avoiding {} needs a witness curve in dimension {dim}",
            through.name, avoiding.name
        ))
    };
    let w = witnesses.ok_or_else(undecidable)?;
    let curve = w.find(&through.name, &avoiding.name).ok_or_else(undecidable)?;
    let step = if w.step > 0.0 { w.step } else { 1e-3 };
    if verify_witness_curve(curve, through, avoiding, step)? {
        Ok(true)
    } else {
        Err(undecidable())
    }
}

pub fn check_localize_exclude(t: &TaskSpec) -> Result<Verdict> {
    check_localize_exclude_with(t, None)
}

pub fn check_localize_exclude_with(t: &TaskSpec, witnesses: Option<&WitnessCurves>) -> Result<Verdict> {
    if t.kind != TaskKind::LocalizeExclude {
        return Err(Error::InvalidTask("expected a localize_exclude task".into()));
    }
    let auth = t.authorized_regions()?;
    let unauth = t.unauthorized_regions()?;
    let start = Region::point("s", t.start.clone());
    let mut out = Vec::new();
    for a in &auth {
        if !region_in_future(&t.start, a)? {
            out.push(violation(Condition::IA, &[&a.name]));
        }
    }
    for u in &unauth {
        if !escape_or_witness(&start, u, t.dim, witnesses)? {
            out.push(violation(Condition::IB, &[&u.name]));
        }
    }
    for (i, a) in auth.iter().enumerate() {
        for b in &auth[i + 1..] {
            if !regions_causally_connected(a, b)? {
                out.push(violation(Condition::II, &[&a.name, &b.name]));
            }
        }
    }
    for a in &auth {
        for u in &unauth {
            if !escape_or_witness(a, u, t.dim, witnesses)? {
                out.push(violation(Condition::III, &[&a.name, &u.name]));
            }
        }
    }
    Ok(Verdict::from_violations(out))
}

fn diamonds_of<'a>(t: &'a TaskSpec, names: &[String]) -> Vec<&'a Diamond> {
    names.iter().filter_map(|n| t.diamond(n)).collect()
}

fn sets_connected(t: &TaskSpec, a: &[String], b: &[String]) -> bool {
    let (da, db) = (diamonds_of(t, a), diamonds_of(t, b));
    da.iter().any(|x| db.iter().any(|y| diamonds_connected(x, y)))
}

fn some_return_in_future(t: &TaskSpec, set: &[String]) -> Result<bool> {
    for d in diamonds_of(t, set) {
        if causal_leq(&t.start, &d.r)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Conditions (i) and (ii) over the given sets.
fn reach_and_connect(t: &TaskSpec, sets: &[Vec<String>], out: &mut Vec<Violation>) -> Result<()> {
    for s in sets {
        if !some_return_in_future(t, s)? {
            out.push(violation(Condition::IA, &[&set_label(s)]));
        }
    }
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            if !sets_connected(t, a, b) {
                out.push(violation(Condition::II, &[&set_label(a), &set_label(b)]));
            }
        }
    }
    Ok(())
}

pub fn check_assembly(t: &TaskSpec) -> Result<Verdict> {
    if t.kind != TaskKind::StateAssembly {
        return Err(Error::InvalidTask("expected a state_assembly task".into()));
    }
    let mut out = Vec::new();
    reach_and_connect(t, &t.authorized, &mut out)?;
    for a in &t.authorized {
        let aset: BTreeSet<&String> = a.iter().collect();
        for u in &t.unauthorized {
            let uset: BTreeSet<&String> = u.iter().collect();
            if aset.difference(&uset).next().is_some() {
                continue;
            }
            let rest: Vec<String> = uset.difference(&aset).map(|s| (*s).clone()).collect();
            if !sets_connected(t, &rest, a) {
                out.push(violation(Condition::III, &[&set_label(a), &set_label(u)]));
            }
        }
    }
    Ok(Verdict::from_violations(out))
}

pub fn check_summoning(t: &TaskSpec) -> Result<Verdict> {
    let TaskKind::Summoning(variant) = t.kind else {
        return Err(Error::InvalidTask("expected a summoning task".into()));
    };
    let mut out = Vec::new();
    match variant {
        SummoningVariant::SingleCallSingleReturn => {
            let singles: Vec<Vec<String>> = t.diamonds.iter().map(|d| vec![d.name.clone()]).collect();
            reach_and_connect(t, &singles, &mut out)?;
        }
        SummoningVariant::ManyCallManyReturn => {
            reach_and_connect(t, &t.authorized_sets(), &mut out)?;
        }
        SummoningVariant::UnrestrictedCallSingleReturn => {
            let n = t.diamonds.len();
            if n > MAX_SUBSET_DIAMONDS {
                return Err(Error::Refused(format!(
                    "subset condition over {n} diamonds exceeds the limit of {MAX_SUBSET_DIAMONDS}"
                )));
            }
            for d in &t.diamonds {
                if !causal_leq(&t.start, &d.diamond.r)? {
                    out.push(violation(Condition::IA, &[&d.name]));
                }
            }
            if let Some(subset) = first_uncovered_subset(&t.diamonds.iter().map(|d| &d.diamond).collect::<Vec<_>>())? {
                let names: Vec<&str> = subset.iter().map(|&i| t.diamonds[i].name.as_str()).collect();
                out.push(violation(Condition::B1, &names));
            }
        }
    }
    Ok(Verdict::from_violations(out))
}

/// First subset, in increasing bitmask order, with no member whose return
/// point lies in the future of every member's call point.
pub fn first_uncovered_subset(ds: &[&Diamond]) -> Result<Option<Vec<usize>>> {
    let n = ds.len();
    // covers[j] = bitmask of i with c_i ≼ r_j
    let mut covers = vec![0u64; n];
    for (j, dj) in ds.iter().enumerate() {
        for (i, di) in ds.iter().enumerate() {
            if causal_leq(&di.c, &dj.r)? {
                covers[j] |= 1 << i;
            }
        }
    }
    for mask in 1u64..(1u64 << n) {
        let ok = (0..n).any(|j| mask & (1 << j) != 0 && covers[j] & mask == mask);
        if !ok {
            return Ok(Some((0..n).filter(|j| mask & (1 << j) != 0).collect()));
        }
    }
    Ok(None)
}

fn party_label(s: &BTreeSet<usize>) -> String {
    let parts: Vec<String> = s.iter().map(|p| p.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

/// No-cloning (reported as II) and monotonicity (reported as III).
pub fn check_access_structure(a: &AccessStructure) -> Result<Verdict> {
    a.validate()?;
    let mut out = Vec::new();
    for (i, x) in a.authorized.iter().enumerate() {
        for y in &a.authorized[i + 1..] {
            if x.is_disjoint(y) {
                out.push(violation(Condition::II, &[&party_label(x), &party_label(y)]));
            }
        }
    }
    for x in &a.authorized {
        for u in &a.unauthorized {
            if x.is_subset(u) {
                out.push(violation(Condition::III, &[&party_label(x), &party_label(u)]));
            }
        }
    }
    Ok(Verdict::from_violations(out))
}

/// Dispatch on task kind.
pub fn check_task(t: &TaskSpec, witnesses: Option<&WitnessCurves>) -> Result<Verdict> {
    match t.kind {
        TaskKind::LocalizeExclude => check_localize_exclude_with(t, witnesses),
        TaskKind::StateAssembly => check_assembly(t),
        TaskKind::Summoning(_) => check_summoning(t),
        TaskKind::PartyIndependentTransfer => Err(Error::Unsupported(
            "no feasibility criterion for party-independent transfer; use the planner".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::fixtures;

    #[test]
    fn access_structure_examples() {
        let fig8 = AccessStructure::parse(fixtures::FIG8_ACCESS).unwrap();
        assert!(check_access_structure(&fig8).unwrap().feasible);
        let disjoint = AccessStructure::new(2, vec![vec![1], vec![2]], vec![]).unwrap();
        assert_eq!(check_access_structure(&disjoint).unwrap().conditions(), [Condition::II].into());
        let mono = AccessStructure::new(3, vec![vec![1, 2]], vec![vec![1, 2, 3]]).unwrap();
        assert_eq!(check_access_structure(&mono).unwrap().conditions(), [Condition::III].into());
    }

    #[test]
    fn subset_guard() {
        let mut text = String::from("task summoning unrestricted_call_single_return\nstart (-100,0)\n");
        for i in 0..21 {
            text.push_str(&format!("diamond D{i} c=(0,{i}) r=(1,{i})\n"));
        }
        let t = crate::model::parse_task(&text).unwrap();
        assert!(matches!(check_summoning(&t), Err(Error::Refused(_))));
    }

    #[test]
    fn higher_dim_needs_witness() {
        let text = "task localize_exclude\ndim 2\nstart (0,0,0)\n\
                    region A { diamond c=(5,0,0) r=(6,0,0) }\n\
                    region U { diamond c=(1,3,0) r=(2,3,0) }\n\
                    authorized A\nunauthorized U\n";
        let t = crate::model::parse_task(text).unwrap();
        assert!(matches!(check_localize_exclude(&t), Err(Error::Undecidable(_))));
        let straight = Polyline::new(vec![Point::new(-10.0, vec![0.0, 0.0]).unwrap(), Point::new(10.0, vec![0.0, 0.0]).unwrap()]);
        let w = WitnessCurves {
            curves: vec![("s".into(), "U".into(), straight.clone()), ("A".into(), "U".into(), straight)],
            step: 1e-2,
        };
        assert!(check_localize_exclude_with(&t, Some(&w)).unwrap().feasible);
    }
}
