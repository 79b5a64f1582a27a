use spacetime_tasks::feasibility::{check_task, Condition, Verdict};
use spacetime_tasks::model::{fixtures, parse_task, serialize_task, SummoningVariant, TaskKind};

fn verdict(name: &str) -> Verdict {
    check_task(&fixtures::load(name).unwrap(), None).unwrap()
}

fn only(v: &Verdict, c: Condition, witness: &[&str]) {
    assert!(!v.feasible);
    assert_eq!(v.violations.len(), 1, "{v}");
    assert_eq!(v.violations[0].condition, c);
    assert_eq!(v.violations[0].witness, witness);
}

#[test]
fn feasible_fixtures() {
    for name in ["FIG1", "FIG10", "FIG12", "FIG13", "FIG14", "EMBED3"] {
        assert!(verdict(name).feasible, "{name}: {}", verdict(name));
    }
}

#[test]
fn fig7_catalog() {
    only(&verdict("FIG7A"), Condition::IA, &["A1"]);
    only(&verdict("FIG7B"), Condition::IB, &["U1"]);
    only(&verdict("FIG7C"), Condition::II, &["A1", "A2"]);
    only(&verdict("FIG7D"), Condition::III, &["A1", "U1"]);
}

#[test]
fn spacelike_pair_assembly_fails_on_connection() {
    only(&verdict("FIG11"), Condition::II, &["D1", "D2"]);
}

#[test]
fn split_pairs_lose_connection() {
    let v = verdict("FIG13_SPLIT");
    assert!(v.has(Condition::II));
    assert_eq!(v.violations.iter().find(|x| x.condition == Condition::II).unwrap().witness, ["a1+b1", "a2+b2"]);
}

#[test]
fn fig14_call_variants() {
    let mut t = fixtures::load("FIG14").unwrap();
    t.kind = TaskKind::Summoning(SummoningVariant::UnrestrictedCallSingleReturn);
    let t = parse_task(&serialize_task(&t)).unwrap();
    only(&check_task(&t, None).unwrap(), Condition::B1, &["D0", "D1", "D2"]);
}

#[test]
fn spacelike_single_call_summoning_fails() {
    let t = parse_task("task summoning\nstart (-5,0)\ndiamond P c=(0,-2) r=(1,-2)\ndiamond Q c=(0,2) r=(1,2)\n").unwrap();
    only(&check_task(&t, None).unwrap(), Condition::II, &["P", "Q"]);
}
