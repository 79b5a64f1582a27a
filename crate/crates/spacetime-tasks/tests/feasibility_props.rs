use proptest::prelude::*;
use spacetime_tasks::feasibility::{check_access_structure, check_localize_exclude, check_summoning};
use spacetime_tasks::geometry::{Diamond, Point, Region};
use spacetime_tasks::model::{
    embed_access_structure, AccessStructure, NamedDiamond, SummoningVariant, TaskKind, TaskSpec,
};
use std::collections::BTreeSet;

fn subsets(n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    prop::collection::vec(prop::collection::btree_set(1..=n, 1..=n), 0..5)
        .prop_map(|v| v.into_iter().map(|s| s.into_iter().collect()).collect())
}

fn access_structure() -> impl Strategy<Value = AccessStructure> {
    (1usize..=5)
        .prop_flat_map(|n| (Just(n), subsets(n).prop_filter("need one", |a| !a.is_empty()), subsets(n)))
        .prop_filter_map("overlap", |(n, a, u)| {
            let aset: BTreeSet<Vec<usize>> = a.iter().cloned().collect();
            let u: Vec<Vec<usize>> = u.into_iter().filter(|s| !aset.contains(s)).collect();
            AccessStructure::new(n, a, u).ok()
        })
}

/// Integer (u,v) box as [u0,u1,v0,v1].
fn ibox() -> impl Strategy<Value = [i32; 4]> {
    (-8i32..8, 0i32..4, -8i32..8, 0i32..4).prop_map(|(u, du, v, dv)| [u, u + du, v, v + dv])
}

fn region(name: &str, b: [i32; 4]) -> Region {
    let d = Diamond::from_box((b[0] as f64, b[1] as f64), (b[2] as f64, b[3] as f64)).unwrap();
    Region::new(name, vec![d]).unwrap()
}

fn le_task(s: (i32, i32), auth: &[[i32; 4]], unauth: &[[i32; 4]]) -> TaskSpec {
    let mut regions = Vec::new();
    let mut authorized = Vec::new();
    let mut unauthorized = Vec::new();
    for (i, b) in auth.iter().enumerate() {
        regions.push(region(&format!("A{i}"), *b));
        authorized.push(vec![format!("A{i}")]);
    }
    for (i, b) in unauth.iter().enumerate() {
        regions.push(region(&format!("U{i}"), *b));
        unauthorized.push(vec![format!("U{i}")]);
    }
    TaskSpec {
        kind: TaskKind::LocalizeExclude,
        dim: 1,
        start: Point::from_uv(s.0 as f64, s.1 as f64),
        regions,
        diamonds: vec![],
        authorized,
        unauthorized,
        secret_dim: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn embedding_preserves_verdict(a in access_structure()) {
        let direct = check_access_structure(&a).unwrap();
        let embedded = check_localize_exclude(&embed_access_structure(&a, 1.0).unwrap()).unwrap();
        prop_assert_eq!(direct.feasible, embedded.feasible);
        prop_assert_eq!(direct.conditions(), embedded.conditions());
    }

    #[test]
    fn two_region_case_matches_corner_rule(s in (-10i32..10, -10i32..10), a in ibox(), b in ibox()) {
        let v = check_localize_exclude(&le_task(s, &[a, b], &[])).unwrap();
        // top corner of each box dominates s; bottom corner of one below top of the other
        let sees = |x: [i32; 4]| x[1] >= s.0 && x[3] >= s.1;
        let conn = (a[0] <= b[1] && a[2] <= b[3]) || (b[0] <= a[1] && b[2] <= a[3]);
        prop_assert_eq!(v.feasible, sees(a) && sees(b) && conn);
    }

    #[test]
    fn extra_unauthorized_never_rescues(
        s in (-10i32..10, -10i32..10),
        auth in prop::collection::vec(ibox(), 1..3),
        unauth in prop::collection::vec(ibox(), 0..3),
        extra in ibox(),
    ) {
        let before = check_localize_exclude(&le_task(s, &auth, &unauth)).unwrap();
        let mut more = unauth.clone();
        more.push(extra);
        let after = check_localize_exclude(&le_task(s, &auth, &more)).unwrap();
        prop_assert!(before.feasible || !after.feasible);
    }

    #[test]
    fn subset_condition_implies_pairwise(pts in prop::collection::vec(
        ((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), (0.0f64..4.0, -3.0f64..3.0, -3.0f64..3.0)), 1..=6)
    ) {
        let mut diamonds = Vec::new();
        for (i, ((ct, cx, cy), (dt, rx, ry))) in pts.into_iter().enumerate() {
            let c = Point::new(ct, vec![cx, cy]).unwrap();
            let spread = ((rx - cx).powi(2) + (ry - cy).powi(2)).sqrt();
            let r = Point::new(ct + spread + dt, vec![rx, ry]).unwrap();
            diamonds.push(NamedDiamond { name: format!("D{i}"), diamond: Diamond::new(c, r).unwrap() });
        }
        let mut t = TaskSpec {
            kind: TaskKind::Summoning(SummoningVariant::UnrestrictedCallSingleReturn),
            dim: 2,
            start: Point::new(-20.0, vec![0.0, 0.0]).unwrap(),
            regions: vec![],
            diamonds,
            authorized: vec![],
            unauthorized: vec![],
            secret_dim: 3,
        };
        let unrestricted = check_summoning(&t).unwrap();
        t.kind = TaskKind::Summoning(SummoningVariant::SingleCallSingleReturn);
        let single = check_summoning(&t).unwrap();
        prop_assert!(!unrestricted.feasible || single.feasible);
    }
}
