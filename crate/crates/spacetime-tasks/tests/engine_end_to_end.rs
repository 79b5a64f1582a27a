use spacetime_tasks::engine::{execute, run_transfer, transfer_two_encodings_test, validate_plan, Scenario};
use spacetime_tasks::geometry::causal_leq;
use spacetime_tasks::model::{fixtures, set_label, CallPattern, TaskSpec};
use spacetime_tasks::planner::{plan_task, ProtocolPlan};

const TOL: f64 = 1e-9;

fn planned(name: &str) -> (TaskSpec, ProtocolPlan) {
    let t = fixtures::load(name).unwrap();
    let plan = plan_task(&t).unwrap_or_else(|e| panic!("{name}: {e}"));
    let audit = validate_plan(&plan, &t);
    assert!(audit.passed(), "{name}:\n{audit}");
    (t, plan)
}

fn localize_exclude_holds(name: &str) {
    let (t, plan) = planned(name);
    for set in &t.authorized {
        let label = set_label(set);
        let out = execute(&plan, &t, &Scenario::access(&label, 3)).unwrap();
        let f = out.fidelity.unwrap_or_else(|| panic!("{name}/{label}: no reconstruction, collected {:?}", out.collected));
        assert!(f >= 1.0 - TOL, "{name}/{label}: fidelity {f}");
    }
    for set in &t.unauthorized {
        let label = set_label(set);
        let out = execute(&plan, &t, &Scenario::access(&label, 3)).unwrap();
        assert!(out.reconstructing.is_empty(), "{name}/{label}: {:?}", out.reconstructing);
        let dist = out.factorization_distance.unwrap();
        assert!(dist <= TOL, "{name}/{label}: view distance {dist}");
    }
}

#[test]
fn fig1_localizes_and_excludes() {
    localize_exclude_holds("FIG1");
}

#[test]
fn fig10_localizes_and_excludes() {
    localize_exclude_holds("FIG10");
}

#[test]
fn embedded_access_structure_localizes_and_excludes() {
    localize_exclude_holds("EMBED3");
}

fn all_patterns(t: &TaskSpec) -> Vec<Vec<String>> {
    let names = t.diamond_names();
    (0u32..1 << names.len())
        .map(|mask| names.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| n.clone()).collect())
        .collect()
}

fn pattern(t: &TaskSpec, called: &[String]) -> CallPattern {
    let refs: Vec<&str> = called.iter().map(|s| s.as_str()).collect();
    CallPattern::from_called(t, &refs).unwrap()
}

#[test]
fn fig13_assembly_over_every_call_pattern() {
    let (t, plan) = planned("FIG13");
    let authorized: Vec<Vec<String>> = t.authorized.iter().map(|s| { let mut s = s.clone(); s.sort(); s }).collect();
    for called in all_patterns(&t) {
        let out = execute(&plan, &t, &Scenario::calls(pattern(&t, &called), 11)).unwrap();
        assert!(!out.disjoint_copies, "{called:?}");
        let mut sorted = called.clone();
        sorted.sort();
        if authorized.contains(&sorted) {
            let f = out.fidelity.unwrap_or_else(|| panic!("{called:?}: nothing reconstructed"));
            assert!(f >= 1.0 - TOL, "{called:?}: {f}");
        }
        if called.len() >= 3 {
            assert!(out.reconstructing.is_empty(), "{called:?}: {:?}", out.reconstructing);
            assert!(out.factorization_distance.unwrap() <= TOL, "{called:?}");
        }
    }
}

#[test]
fn fig13_split_geometry_is_refused() {
    let t = fixtures::load("FIG13_SPLIT").unwrap();
    assert!(plan_task(&t).is_err());
}

fn single_calls_reconstruct(name: &str) {
    let (t, plan) = planned(name);
    for d in t.diamond_names() {
        let out = execute(&plan, &t, &Scenario::calls(pattern(&t, std::slice::from_ref(&d)), 5)).unwrap();
        assert!(out.handed.iter().all(|(at, _)| *at == d), "{name}/{d}: {:?}", out.handed);
        let f = out.fidelity.unwrap_or_else(|| panic!("{name}/{d}: nothing reconstructed"));
        assert!(f >= 1.0 - TOL, "{name}/{d}: {f}");
        assert!(out.reconstructing.contains(&d), "{name}/{d}: {:?}", out.reconstructing);
    }
}

#[test]
fn fig12_summoning_returns_at_the_called_diamond() {
    single_calls_reconstruct("FIG12");
}

#[test]
fn fig14_summoning_returns_at_the_called_diamond() {
    single_calls_reconstruct("FIG14");
}

#[test]
fn honest_transfer_runs() {
    let (t, plan) = planned("FIG15");
    let mut receivers = [0usize; 2];
    for seed in 0..100 {
        let rep = run_transfer(&plan, &t, seed).unwrap();
        receivers[rep.receiver - 1] += 1;
        assert!(rep.fidelity >= 1.0 - TOL, "seed {seed}: {}", rep.fidelity);
        assert!((rep.test_pass - 1.0).abs() <= TOL, "seed {seed}: {}", rep.test_pass);
    }
    assert!(receivers.iter().all(|&k| k > 20), "{receivers:?}");
}

#[test]
fn two_encodings_cheat_passes_one_ninth() {
    for pair in [[1, 2], [1, 3], [2, 3]] {
        let p = transfer_two_encodings_test(&pair).unwrap();
        assert!((p - 1.0 / 9.0).abs() <= TOL, "{pair:?}: {p}");
    }
}

#[test]
fn runs_are_deterministic() {
    for name in ["FIG1", "FIG10", "FIG13", "FIG14"] {
        let (t, plan) = planned(name);
        let scenario = match t.authorized.first() {
            Some(s) if name.starts_with("FIG1") && name != "FIG13" => Scenario::access(&set_label(s), 42),
            _ => Scenario::calls(pattern(&t, &[t.diamond_names()[0].clone()]), 42),
        };
        let a = execute(&plan, &t, &scenario).unwrap();
        let b = execute(&plan, &t, &scenario).unwrap();
        assert_eq!(a, b, "{name}");
        assert_eq!(plan.to_log(), plan_task(&t).unwrap().to_log());
    }
}

/// Flipping one call bit never changes what happens outside its future.
#[test]
fn no_signalling_across_call_bits() {
    for name in ["FIG12", "FIG13", "FIG14", "FIG15"] {
        let (t, plan) = planned(name);
        for called in all_patterns(&t) {
            let base = execute(&plan, &t, &Scenario::calls(pattern(&t, &called), 9)).unwrap();
            for flip in t.diamond_names() {
                let mut other: Vec<String> = called.iter().filter(|c| **c != flip).cloned().collect();
                if !called.contains(&flip) {
                    other.push(flip.clone());
                }
                let alt = execute(&plan, &t, &Scenario::calls(pattern(&t, &other), 9)).unwrap();
                let c = &t.diamond(&flip).unwrap().c;
                for (a, b) in base.log.iter().zip(&alt.log) {
                    let idx: usize = a.split(' ').next().unwrap().parse().unwrap();
                    if !causal_leq(c, plan.events[idx].point()).unwrap() {
                        assert_eq!(a, b, "{name}: flipping {flip} changed event {idx}");
                    }
                }
            }
        }
    }
}
