use improper::measures::{self, Kernel, MeasureConfig};
use improper::numerics::{sup_distance, Domain1D, QuadratureConfig};
use improper::stone::{self, truncation_bracket, StoneModel, Verdict};

fn qc() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// Midpoint Riemann sum of `f` on `(0, hi)`.
fn riemann(f: impl Fn(f64) -> f64, hi: f64, n: usize) -> f64 {
    let h = hi / n as f64;
    (0..n).map(|i| f((i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn cross_unnormalized(t: f64) -> f64 {
    t * (-t).exp() / (1.0 + t).powi(3)
}

#[test]
fn posterior_given_xz_against_riemann_oracle() {
    let m = StoneModel::exponential_flat();
    let d = m.posterior_given_xz(1.0, &qc()).unwrap();
    assert!((cross_unnormalized(1.0) - (-1.0f64).exp() / 8.0).abs() < 1e-15);
    // e^{-θ} is below 1e-17 beyond θ = 40.
    let c0 = riemann(cross_unnormalized, 40.0, 4_000_000);
    assert!((d.normalizer() / c0 - 1.0).abs() < 1e-8, "{} vs {c0}", d.normalizer());
    assert!((d.total_mass(&qc()).unwrap().finite().unwrap() - 1.0).abs() < 1e-9);

    // Mode by grid argmax at step 1e-4.
    let (mut best, mut arg) = (0.0, 0.0);
    for i in 1..100_000 {
        let t = i as f64 * 1e-4;
        let v = d.eval(t);
        if v > best {
            best = v;
            arg = t;
        }
    }
    // The mode solves (1 − θ)(1 + θ) = 3θ, i.e. θ² + 3θ − 1 = 0.
    let exact = (-3.0 + 13f64.sqrt()) / 2.0;
    assert!((arg - exact).abs() < 1e-4, "mode {arg} vs {exact}");
}

#[test]
fn naive_fz_values_and_freq_normalization() {
    let m = StoneModel::exponential_flat();
    let naive_unnorm = |t: f64| t * (-t).exp() / (1.0 + t).powi(2);
    assert!((naive_unnorm(1.0) - (-1.0f64).exp() / 4.0).abs() < 1e-15);
    let d = m.naive_fz(1.0, &qc()).unwrap();
    assert!((d.normalizer() / riemann(naive_unnorm, 45.0, 4_000_000) - 1.0).abs() < 1e-8);

    for z in [0.01, 0.5, 1.0, 7.0, 60.0] {
        let flat_pi = Kernel::univariate("z/(t+z)^2", Domain1D::positive(), move |t| z / ((t + z) * (t + z)));
        let mass = measures::total_mass(&flat_pi, &qc()).unwrap().finite().unwrap();
        assert!((mass - 1.0).abs() < 1e-9, "z = {z}: {mass}");
    }
}

#[test]
fn general_h_reductions() {
    let grid = stone::theta_grid();
    let flat = StoneModel::exponential_flat();
    let cross = flat.posterior_given_xz(1.0, &qc()).unwrap();
    for x in [0.05, 1.0, 20.0] {
        let g = flat.posterior_general_h(x, 1.0, &qc()).unwrap();
        assert!(sup_distance(|t| g.eval(t), |t| cross.eval(t), &grid) < 1e-8);
    }

    let recip = StoneModel::exponential_with(stone::reciprocal_h()).unwrap();
    let naive = recip.naive_fz(1.0, &qc()).unwrap();
    let dd = recip.posterior_general_h(0.4, 1.0, &qc()).unwrap();
    assert!(sup_distance(|t| dd.eval(t), |t| naive.eval(t), &grid) < 1e-8);
}

#[test]
fn quadrature_under_truncated_h_matches_closed_form() {
    let grid = stone::theta_grid();
    for &(x, m) in &[(1.0, 500.0), (0.001, 500.0), (0.01, 20.0)] {
        let model = StoneModel::exponential_with(stone::truncated_h(m).unwrap()).unwrap();
        let quad = model.posterior_general_h(x, 1.0, &qc()).unwrap();
        let closed = model.truncated_posterior(x, 1.0, m, &qc()).unwrap();
        let d = sup_distance(|t| quad.eval(t), |t| closed.eval(t), &grid);
        assert!(d < 1e-8, "x = {x}, M = {m}: {d}");
    }
}

#[test]
fn grid_holds_almost_all_mass() {
    let flat = StoneModel::exponential_flat();
    let cfg = qc();
    let mut densities = vec![flat.posterior_given_xz(1.0, &cfg).unwrap(), flat.naive_fz(1.0, &cfg).unwrap()];
    densities.push(flat.truncated_posterior(0.001, 1.0, 500.0, &cfg).unwrap());
    for d in densities {
        let inside = improper::numerics::integrate(|t| d.eval(t), &Domain1D::bounded(0.0, 10.0).unwrap(), &cfg)
            .unwrap()
            .finite()
            .unwrap();
        assert!(inside > 0.999, "{inside}");
    }
}

#[test]
fn figure_curves() {
    let grid = stone::theta_grid();
    let flat = StoneModel::exponential_flat();
    let cross = flat.posterior_given_xz(1.0, &qc()).unwrap();
    let near = flat.truncated_posterior(1.0, 1.0, 500.0, &qc()).unwrap();
    let far = flat.truncated_posterior(0.001, 1.0, 500.0, &qc()).unwrap();
    let dd = flat.naive_fz(1.0, &qc()).unwrap();
    let d_near = sup_distance(|t| near.eval(t), |t| cross.eval(t), &grid);
    let d_far = sup_distance(|t| far.eval(t), |t| cross.eval(t), &grid);
    let d_dd = sup_distance(|t| dd.eval(t), |t| cross.eval(t), &grid);
    assert!(d_near < 1e-3);
    assert!(d_far > 1e-2);
    assert!(d_dd > 1e-2);
    assert!(d_far > 10.0 * d_near.max(f64::MIN_POSITIVE));
}

#[test]
fn truncation_bracket_is_monotone_in_m() {
    for theta in [0.01, 0.5, 1.0, 3.0, 9.0] {
        let mut prev = 0.0;
        for k in 0..200 {
            let m = 1e-3 * 1.1f64.powi(k);
            let b = truncation_bracket(1.0 * m * (theta + 1.0));
            assert!(b >= prev && b <= 2.0, "theta {theta}, M {m}");
            prev = b;
        }
    }
    for a in [40.5, 60.0, 1e3] {
        assert!((truncation_bracket(a) - 2.0).abs() < 1e-6);
    }
}

#[test]
fn cross_posterior_through_joint_is_free_of_x() {
    let flat = StoneModel::exponential_flat();
    let joint = flat.xzt_kernel(&qc());
    let cfg = MeasureConfig::default();
    let a = measures::condition(&joint, &[0, 1], &[1.0, 1.0], &cfg).unwrap();
    let b = measures::condition(&joint, &[0, 1], &[0.02, 1.0], &cfg).unwrap();
    let closed = flat.posterior_given_xz(1.0, &qc()).unwrap();
    let grid = stone::theta_grid();
    assert!(sup_distance(|t| a.eval(t), |t| b.eval(t), &grid) < 1e-6);
    assert!(sup_distance(|t| a.eval(t), |t| closed.eval(t), &grid) < 1e-6);
}

#[test]
fn sigma_finiteness_of_observables() {
    let flat = StoneModel::exponential_flat();
    let cfg = MeasureConfig::default();
    assert!(measures::is_sigma_finite(&flat.xzt_kernel(&qc()), &[0, 1], &cfg).unwrap());
    assert!(!measures::is_sigma_finite(&flat.xzt_kernel(&qc()), &[1], &cfg).unwrap());
    assert!(!measures::is_sigma_finite(&flat.zt_kernel(&qc()).unwrap(), &[0], &cfg).unwrap());
    assert!(!measures::is_sigma_finite(&flat.zt_kernel(&qc()).unwrap(), &[1], &cfg).unwrap());

    // Both priors improper, (x, z) still σ-finite.
    let freq = StoneModel::new(stone::reciprocal_prior(), stone::reciprocal_h()).unwrap();
    assert!(measures::is_sigma_finite(&freq.xzt_kernel(&qc()), &[0, 1], &cfg).unwrap());
}

#[test]
fn paradox_verdicts() {
    let cfg = MeasureConfig::default();
    let flat = StoneModel::exponential_flat().detect_paradox(1.0, 1.0, &cfg).unwrap();
    assert!(!flat.z_sigma_finite);
    assert_eq!(flat.verdict, Verdict::ConditioningForbidden);
    assert!(!flat.shapes_agree);

    let proper = StoneModel::exponential_with(stone::truncated_h(500.0).unwrap())
        .unwrap()
        .detect_paradox(1.0, 1.0, &cfg)
        .unwrap();
    assert!(proper.z_sigma_finite);
    assert_eq!(proper.verdict, Verdict::Consistent);

    let recip = StoneModel::exponential_with(stone::reciprocal_h()).unwrap().detect_paradox(1.0, 1.0, &cfg).unwrap();
    assert!(!recip.z_sigma_finite);
    assert!(recip.shapes_agree);
    assert_eq!(recip.verdict, Verdict::ConditioningForbidden);
}

#[test]
fn invalid_arguments() {
    let flat = StoneModel::exponential_flat();
    assert!(flat.posterior_given_xz(0.0, &qc()).is_err());
    assert!(flat.truncated_posterior(1.0, 1.0, -5.0, &qc()).is_err());
    assert!(StoneModel::new(Kernel::normal(0.0, 1.0), Kernel::flat(Domain1D::positive())).is_err());
}
