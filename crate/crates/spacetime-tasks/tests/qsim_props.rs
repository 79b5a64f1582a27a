use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use spacetime_tasks::qsim::{
    compare, haar_state, haar_vector, maximally_entangled, maximally_mixed, weyl, QState, Register, C,
};

fn gaussian_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    DMatrix::from_fn(n, n, |_, _| {
        Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    gaussian_matrix(n, rng).qr().q()
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
    let g = gaussian_matrix(n, rng);
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Full-space operator for `u` acting on slot `k` of `dims`, built entry by entry.
fn naive_embed(dims: &[usize], k: usize, u: &DMatrix<C>) -> DMatrix<C> {
    let n: usize = dims.iter().product();
    let digits = |mut i: usize| {
        let mut out = vec![0; dims.len()];
        for j in (0..dims.len()).rev() {
            out[j] = i % dims[j];
            i /= dims[j];
        }
        out
    };
    DMatrix::from_fn(n, n, |i, j| {
        let (di, dj) = (digits(i), digits(j));
        let others_equal = (0..dims.len()).all(|s| s == k || di[s] == dj[s]);
        if others_equal { u[(di[k], dj[k])] } else { Complex::new(0.0, 0.0) }
    })
}

#[test]
fn apply_matches_naive_embedding() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dims = [2usize, 3, 2];
    let reg = Register::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
    for k in 0..3 {
        let psi = haar_vector(12, &mut rng);
        let u = random_unitary(dims[k], &mut rng);
        let s = QState::pure(reg.clone(), psi.clone()).unwrap();
        let got = s.apply(&[["a", "b", "c"][k]], &u).unwrap();
        let want = naive_embed(&dims, k, &u) * psi;
        assert!((got.amplitudes().unwrap() - want).norm() < 1e-12);
    }
}

#[test]
fn teleport_identity_every_outcome() {
    for d in [2usize, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64);
        let psi = haar_state("A", d, &mut rng).unwrap();
        let joint = psi.tensor(&maximally_entangled(d, "E", "F").unwrap()).unwrap();
        let mut total = 0.0;
        for a in 0..d {
            for b in 0..d {
                let (p, post) = joint.bell_project("A", "E", a, b).unwrap();
                total += p;
                assert!((p - 1.0 / (d * d) as f64).abs() < 1e-12);
                let mut fixed = post.unwrap().apply(&["F"], &weyl(d, a, b)).unwrap();
                fixed.relabel("F", "A").unwrap();
                assert!((compare(&fixed, &psi).unwrap().0 - 1.0).abs() < 1e-12);
            }
        }
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn teleport_outcomes_are_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let psi = haar_state("A", 3, &mut rng).unwrap();
    let joint = psi.tensor(&maximally_entangled(3, "E", "F").unwrap()).unwrap();
    let mut counts = [0usize; 9];
    let runs = 10_000;
    for seed in 0..runs {
        let ((a, b), _) = joint.bell_measure("A", "E", seed).unwrap();
        counts[a * 3 + b] += 1;
    }
    let expected = runs as f64 / 9.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 8 degrees of freedom, 0.999 quantile
    assert!(chi2 < 26.12, "chi2 = {chi2}, counts = {counts:?}");
}

#[test]
fn weyl_twirl_gives_maximally_mixed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reg = Register::new([("A", 3)]).unwrap();
    let rho = QState::mixed(reg, random_density(3, &mut rng)).unwrap();
    let tw = rho.twirl("A").unwrap();
    let (f, td) = compare(&tw, &maximally_mixed("A", 3).unwrap()).unwrap();
    assert!(td < 1e-10 && (f - 1.0).abs() < 1e-10);
}

#[test]
fn keep_all_is_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = haar_state("A", 3, &mut rng).unwrap().tensor(&haar_state("B", 2, &mut rng).unwrap()).unwrap();
    let kept = s.partial_trace(&["A", "B"]).unwrap();
    assert!((kept.density().unwrap() - s.density().unwrap()).norm() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unitaries_and_measurements_preserve_norm(seed in any::<u64>(), slot in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = Register::new([("a", 3), ("b", 3), ("c", 3)]).unwrap();
        let s = QState::pure(reg, haar_vector(27, &mut rng)).unwrap();
        let label = ["a", "b", "c"][slot];
        let u = random_unitary(3, &mut rng);
        let out = s.apply(&[label], &u).unwrap();
        prop_assert!((out.norm_or_trace() - 1.0).abs() < 1e-10);
        let ((_, _), post) = out.bell_measure("a", "c", seed).unwrap();
        prop_assert!((post.norm_or_trace() - 1.0).abs() < 1e-10);
        let mixed = out.to_mixed().unwrap().apply(&[label], &u).unwrap();
        prop_assert!((mixed.norm_or_trace() - 1.0).abs() < 1e-10);
        for keep in [vec!["a"], vec!["c", "a"], vec!["b", "c"]] {
            let r = out.partial_trace(&keep).unwrap();
            prop_assert!((r.norm_or_trace() - 1.0).abs() < 1e-10);
            let r2 = mixed.partial_trace(&keep).unwrap();
            prop_assert!((r2.norm_or_trace() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn teleport_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = haar_state("A", 3, &mut rng).unwrap();
        let joint = psi.tensor(&maximally_entangled(3, "E", "F").unwrap()).unwrap();
        let ((a, b), post) = joint.bell_measure_discard("A", "E", &mut rng).unwrap();
        let mut out = post.unwrap().apply(&["F"], &weyl(3, a, b)).unwrap();
        out.relabel("F", "A").unwrap();
        prop_assert!((compare(&out, &psi).unwrap().0 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pure_and_mixed_partial_traces_agree(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reg = Register::new([("a", 2), ("b", 3), ("c", 2)]).unwrap();
        let s = QState::pure(reg, haar_vector(12, &mut rng)).unwrap();
        let p = s.partial_trace(&["c", "a"]).unwrap().density().unwrap();
        let m = s.to_mixed().unwrap().partial_trace(&["c", "a"]).unwrap().density().unwrap();
        prop_assert!((p - m).norm() < 1e-12);
    }
}

#[test]
fn haar_vectors_are_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let v: DVector<C> = haar_vector(5, &mut rng);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }
}
