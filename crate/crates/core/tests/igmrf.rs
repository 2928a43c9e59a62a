use improper::igmrf::{
    build_q, flattened_density_a, flattened_density_b, limit_pair_demo, propriety_check, sample_given_mean,
    ConstrainedSampler, Propriety, RW1Model,
};
use improper::measures::Kernel;
use improper::numerics::{integrate, Domain1D, QuadratureConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::function::gamma::{gamma, ln_gamma};

fn dense_eigen(n: usize) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let q = build_q(n).unwrap().to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
    SymmetricEigen::new(m)
}

#[test]
fn eigenvalues_against_dense_solver() {
    let mut oracle: Vec<f64> = dense_eigen(4).eigenvalues.iter().copied().collect();
    oracle.sort_by(f64::total_cmp);
    let s = 2f64.sqrt();
    let expected = [0.0, 2.0 - s, 2.0, 2.0 + s];
    for (a, b) in oracle.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12, "{oracle:?}");
    }
    for n in [2, 4, 7, 30] {
        let mut o: Vec<f64> = dense_eigen(n).eigenvalues.iter().copied().collect();
        o.sort_by(f64::total_cmp);
        for (a, b) in o.iter().zip(build_q(n).unwrap().eigenvalues()) {
            assert!((a - b).abs() < 1e-10, "n = {n}");
        }
    }
}

#[test]
fn single_null_direction_is_constant() {
    for n in [2, 5, 50] {
        let e = dense_eigen(n);
        let zeros: Vec<usize> = (0..n).filter(|&i| e.eigenvalues[i].abs() < 1e-10).collect();
        assert_eq!(zeros.len(), 1, "n = {n}");
        assert!(e.eigenvalues.iter().all(|&l| l > -1e-10));
        let v = e.eigenvectors.column(zeros[0]);
        let c = 1.0 / (n as f64).sqrt();
        assert!(v.iter().all(|&vi| (vi.abs() - c).abs() < 1e-8), "n = {n}");
    }
}

#[test]
fn quadratic_forms_agree_on_random_vectors() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(2..60);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let q = build_q(n).unwrap();
        let a = q.quad_form(&x).unwrap();
        let b = q.increment_quad_form(&x).unwrap();
        assert!((a - b).abs() <= 1e-12 * b.max(1.0), "{a} vs {b}");
    }
}

proptest! {
    #[test]
    fn density_is_translation_invariant(
        x in proptest::collection::vec(-10.0f64..10.0, 2..30),
        c in -1e3f64..1e3,
        kappa in 0.1f64..10.0,
    ) {
        let m = RW1Model::new(x.len(), kappa).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let a = m.log_unnormalized_density(&x).unwrap();
        let b = m.log_unnormalized_density(&shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }
}

#[test]
fn increment_variance_monte_carlo() {
    let kappa = 4.0;
    let mut s = ConstrainedSampler::new(10, kappa, 0.0, 5).unwrap();
    let inc: Vec<f64> = (0..10_000).flat_map(|_| s.draw().increments).collect();
    let m = inc.iter().sum::<f64>() / inc.len() as f64;
    let v = inc.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (inc.len() - 1) as f64;
    assert!((v / 0.25 - 1.0).abs() < 0.02, "{v}");
}

#[test]
fn samples_are_consistent_with_their_increments() {
    let q = build_q(50).unwrap();
    let mut s = ConstrainedSampler::new(50, 1.0, 0.0, 6).unwrap();
    let mut total = 0.0;
    let count = 10_000;
    for _ in 0..count {
        let d = s.draw();
        let mean = d.x.iter().sum::<f64>() / 50.0;
        assert!(mean.abs() < 1e-12);
        let qf = q.quad_form(&d.x).unwrap();
        let own: f64 = d.increments.iter().map(|v| v * v).sum();
        assert!((qf - own).abs() < 1e-10 * own.max(1.0));
        total += qf;
    }
    let mean_qf = total / count as f64;
    assert!((mean_qf / 49.0 - 1.0).abs() < 0.03, "{mean_qf}");
}

#[test]
fn sampling_is_reproducible() {
    let a = sample_given_mean(20, 1.5, 2.0, 42).unwrap();
    let b = sample_given_mean(20, 1.5, 2.0, 42).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(a, sample_given_mean(20, 1.5, 2.0, 43).unwrap());
}

#[test]
fn propriety_against_gamma_closed_forms() {
    let cfg = QuadratureConfig::default();
    // Exponential prior, e = 3/2: ∫κ^{3/2}e^{−κ}dκ = Γ(5/2).
    match propriety_check(&Kernel::exponential(1.0), 1.5, 1.0, &cfg).unwrap() {
        Propriety::SufficientConditionMet { mass } => assert!((mass - gamma(2.5)).abs() < 1e-8),
        other => panic!("{other:?}"),
    }
    // Far beyond the absolute divergence threshold: e = 49.5.
    match propriety_check(&Kernel::exponential(1.0), 49.5, 1.0, &cfg).unwrap() {
        Propriety::SufficientConditionMet { mass } => assert!((mass.ln() - ln_gamma(50.5)).abs() < 1e-8),
        other => panic!("{other:?}"),
    }
    // π = 1/κ, e = 3/2, s = 1: ∫κ^{1/2}e^{−κ/2}dκ = Γ(3/2)·2^{3/2}.
    let oracle = gamma(1.5) * 2f64.powf(1.5);
    assert!((oracle - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    match propriety_check(&Kernel::reciprocal(), 1.5, 1.0, &cfg).unwrap() {
        Propriety::Proper { evidence } => assert!((evidence - oracle).abs() < 1e-6, "{evidence}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(propriety_check(&Kernel::reciprocal(), 0.0, 1.0, &cfg).unwrap(), Propriety::Improper);
}

#[test]
fn propriety_evidence_against_riemann_sum() {
    // π = 1/κ, e = 2, s = 3: midpoint sum of κe^{−3κ/2} on (0, 40).
    let cfg = QuadratureConfig::default();
    let h = 1e-4;
    let oracle: f64 = (0..400_000).map(|i| (i as f64 + 0.5) * h).map(|k| k * (-1.5 * k).exp()).sum::<f64>() * h;
    let got = match propriety_check(&Kernel::reciprocal(), 2.0, 3.0, &cfg).unwrap() {
        Propriety::Proper { evidence } => evidence,
        other => panic!("{other:?}"),
    };
    assert!((got - oracle).abs() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn propriety_is_monotone_in_exponent() {
    // With s > 0 the tail always converges; only κ → 0 can diverge, where a
    // larger e makes κ^e smaller. Proper at e therefore implies proper at
    // every larger e.
    let cfg = QuadratureConfig::default();
    let priors = [Kernel::reciprocal(), Kernel::exponential(1.0), Kernel::flat(Domain1D::positive())];
    for prior in &priors {
        let exps = [-1.5, -0.75, -0.25, 0.0, 0.5, 1.5, 3.0];
        let verdicts: Vec<bool> =
            exps.iter().map(|&e| propriety_check(prior, e, 1.0, &cfg).unwrap().is_proper()).collect();
        for w in verdicts.windows(2) {
            assert!(!(w[0] && !w[1]), "{}: {verdicts:?}", prior.label());
        }
    }
    assert!(!propriety_check(&Kernel::reciprocal(), 0.0, 1.0, &cfg).unwrap().is_proper());
    assert!(propriety_check(&Kernel::reciprocal(), 0.25, 1.0, &cfg).unwrap().is_proper());
    assert!(!propriety_check(&Kernel::flat(Domain1D::positive()), -1.5, 1.0, &cfg).unwrap().is_proper());
    assert!(propriety_check(&Kernel::flat(Domain1D::positive()), -0.5, 1.0, &cfg).unwrap().is_proper());
}

#[test]
fn propriety_rejects_constant_data() {
    let cfg = QuadratureConfig::default();
    assert!(propriety_check(&Kernel::reciprocal(), 1.5, 0.0, &cfg).is_err());
}

#[test]
fn flattened_densities_approach_their_limits() {
    let m = RW1Model::new(4, 1.0).unwrap();
    let x = [0.3, 2.3, 1.8, 2.9];
    let pair = limit_pair_demo(&x, &m).unwrap();
    assert!((pair.ratio - 0.5).abs() < 1e-15);
    let mut prev_a = f64::INFINITY;
    let mut prev_b = f64::INFINITY;
    for gamma in [1.0, 0.1, 0.01, 1e-4] {
        let ea = (flattened_density_a(&x, &m, gamma).unwrap() - pair.limit_a).abs();
        let eb = (flattened_density_b(&x, &m, gamma).unwrap() - pair.limit_b).abs();
        assert!(ea < prev_a && eb < prev_b);
        prev_a = ea;
        prev_b = eb;
    }
    assert!(prev_a < 1e-3 * pair.limit_a);
}

#[test]
fn flattened_density_a_is_a_proper_density_in_the_mean() {
    // Integrating the normalized Gaussian factor over x̄ recovers the
    // improper density: the √(γ/2π) normalizer times our rescaled value.
    let cfg = QuadratureConfig::default();
    let m = RW1Model::new(3, 2.0).unwrap();
    let base = [0.0, 1.0, -0.5];
    let c0 = base.iter().sum::<f64>() / 3.0;
    let gamma = 0.3;
    let norm = (gamma / (2.0 * std::f64::consts::PI)).sqrt();
    let total = integrate(
        |mu| {
            let x: Vec<f64> = base.iter().map(|v| v - c0 + mu).collect();
            norm * flattened_density_a(&x, &m, gamma).unwrap()
        },
        &Domain1D::RealLine,
        &cfg,
    )
    .unwrap()
    .finite()
    .unwrap();
    let limit = m.log_unnormalized_density(&base).unwrap().exp();
    assert!((total - limit).abs() < 1e-9 * limit);
}
