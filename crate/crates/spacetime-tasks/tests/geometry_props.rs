mod common;

use common::{random_escape_instance, raster_escape};
use proptest::prelude::*;
use spacetime_tasks::geometry::*;

fn pt() -> impl Strategy<Value = Point> {
    (-20i32..20, -20i32..20).prop_map(|(t, x)| Point::p1(t as f64 * 0.5, x as f64 * 0.5))
}

fn pt2() -> impl Strategy<Value = Point> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(t, x, y)| Point::new(t, vec![x, y]).unwrap())
}

fn diamond() -> impl Strategy<Value = Diamond> {
    (-10i32..10, -10i32..10, 0i32..6, 0i32..6).prop_map(|(u, v, du, dv)| {
        Diamond::from_box((u as f64, (u + du) as f64), (v as f64, (v + dv) as f64)).unwrap()
    })
}

fn region(name: &'static str) -> impl Strategy<Value = Region> {
    prop::collection::vec(diamond(), 1..4).prop_map(move |ds| Region::new(name, ds).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn causal_order_is_a_partial_order(p in pt(), q in pt(), r in pt()) {
        prop_assert!(causal_leq(&p, &p).unwrap());
        if p != q {
            prop_assert!(!(causal_leq(&p, &q).unwrap() && causal_leq(&q, &p).unwrap()));
        }
        if causal_leq(&p, &q).unwrap() && causal_leq(&q, &r).unwrap() {
            prop_assert!(causal_leq(&p, &r).unwrap());
        }
    }

    #[test]
    fn causal_order_transitive_2d(p in pt2(), q in pt2(), r in pt2()) {
        if causal_leq(&p, &q).unwrap() && causal_leq(&q, &r).unwrap() {
            // the triangle inequality holds up to rounding
            prop_assert!(r.t - p.t >= p.spatial_distance(&r) - 1e-12);
        }
    }

    #[test]
    fn light_cone_round_trip(t in -1e3f64..1e3, x in -1e3f64..1e3) {
        let (u, v) = Point::p1(t, x).uv();
        let back = Point::from_uv(u, v);
        prop_assert!((back.t - t).abs() <= 1e-12 * (1.0 + t.abs()));
        prop_assert!((back.x[0] - x).abs() <= 1e-12 * (1.0 + x.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn connection_is_symmetric_and_monotone(a in region("a"), b in region("b"), extra in diamond()) {
        let ab = regions_causally_connected(&a, &b).unwrap();
        prop_assert_eq!(ab, regions_causally_connected(&b, &a).unwrap());
        let mut bigger = a.clone();
        bigger.diamonds.push(extra);
        if ab {
            prop_assert!(regions_causally_connected(&bigger, &b).unwrap());
        }
    }

    #[test]
    fn extracted_paths_verify(seed in 0u64..1_000_000) {
        let inst = random_escape_instance(seed);
        let through = Region::new("T", inst.through.iter().map(|b| b.diamond()).collect()).unwrap();
        let obstacles: Vec<Diamond> = inst.avoiding.iter().map(|b| b.diamond()).collect();
        let exists = escape_exists_diamonds(&through.diamonds, &obstacles).unwrap();
        let path = extract_escape_path_diamonds(&through.diamonds, &obstacles).unwrap();
        prop_assert_eq!(exists, path.is_some());
        if let (Some(path), false) = (path, obstacles.is_empty()) {
            let avoid = Region::new("U", obstacles).unwrap();
            prop_assert!(verify_witness_curve(&path, &through, &avoid, 0.01).unwrap());
            for w in path.vertices.windows(2) {
                for d in &avoid.diamonds {
                    prop_assert!(!segment_meets_diamond(&w[0], &w[1], d));
                }
            }
        }
    }
}

#[test]
fn escape_matches_raster_oracle() {
    let mut disagreements = 0;
    for seed in 0..500u64 {
        let inst = random_escape_instance(seed);
        let through: Vec<Diamond> = inst.through.iter().map(|b| b.diamond()).collect();
        let avoiding: Vec<Diamond> = inst.avoiding.iter().map(|b| b.diamond()).collect();
        if escape_exists_diamonds(&through, &avoiding).unwrap() != raster_escape(&inst) {
            disagreements += 1;
        }
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn raster_oracle_fig1_start_point() {
    // frozen: s=(0,0) escapes U1 = [1,12]x[9,13] (coordinates shrunk to the oracle window)
    let inst = common::EscapeInstance {
        through: vec![common::IBox { u: (0, 0), v: (0, 0) }],
        avoiding: vec![common::IBox { u: (1, 12), v: (9, 13) }],
    };
    assert!(raster_escape(&inst));
}

