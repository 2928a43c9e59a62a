//! Gibbs sampling for `Y | θ1, θ2 ~ N(θ1 + θ2, 1)`.
//!
//! Under the flat prior both full conditionals are proper although the joint
//! posterior is not. The chain for `θ1` is then a random walk while
//! `δ = θ1 + θ2` is i.i.d. `N(y, 1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::measures::{integrate_out, total_mass, Kernel, ProperDensity};
use crate::numerics::{Domain1D, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GibbsPrior {
    Flat,
    /// Independent `θ1 ~ N(0, τ²)` and `θ2 ~ N(0, κ²)`.
    Gaussian {
        tau2: f64,
        kappa2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    pub y: f64,
    pub n_iter: usize,
    pub seed: u64,
    pub init_theta1: f64,
    pub init_theta2: f64,
    pub prior: GibbsPrior,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { y: 0.0, n_iter: 10_000, seed: 0, init_theta1: 0.0, init_theta2: 0.0, prior: GibbsPrior::Flat }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter == 0 {
            return Err(Error::InvalidConfig("n_iter must be at least 1".into()));
        }
        if !(self.y.is_finite() && self.init_theta1.is_finite() && self.init_theta2.is_finite()) {
            return Err(Error::InvalidConfig("y and initial values must be finite".into()));
        }
        if let GibbsPrior::Gaussian { tau2, kappa2 } = self.prior {
            if !(tau2 > 0.0 && kappa2 > 0.0 && tau2.is_finite() && kappa2.is_finite()) {
                return Err(Error::InvalidConfig(format!("tau2 = {tau2}, kappa2 = {kappa2} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub delta: Vec<f64>,
    pub config: GibbsConfig,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.theta1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta1.is_empty()
    }
}

/// Runs `n_iter` sweeps, updating `θ1` then `θ2`. The two updates draw from
/// independent ChaCha streams of the same seed.
pub fn run_gibbs(cfg: &GibbsConfig) -> Result<ChainTrace> {
    cfg.validate()?;
    let mut rng1 = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng1.set_stream(1);
    let mut rng2 = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng2.set_stream(2);

    // Full conditional θ_i | θ_j, y ~ N(s(y − θ_j), s).
    let (s1, s2) = match cfg.prior {
        GibbsPrior::Flat => (1.0, 1.0),
        GibbsPrior::Gaussian { tau2, kappa2 } => (tau2 / (1.0 + tau2), kappa2 / (1.0 + kappa2)),
    };
    let (sd1, sd2) = (s1.sqrt(), s2.sqrt());

    let n = cfg.n_iter;
    let mut theta1 = Vec::with_capacity(n);
    let mut theta2 = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    // The first sweep overwrites θ1, so only the initial θ2 matters.
    let mut t2 = cfg.init_theta2;
    for _ in 0..n {
        let e1: f64 = rng1.sample(StandardNormal);
        let t1 = s1 * (cfg.y - t2) + sd1 * e1;
        let e2: f64 = rng2.sample(StandardNormal);
        t2 = s2 * (cfg.y - t1) + sd2 * e2;
        theta1.push(t1);
        theta2.push(t2);
        delta.push(t1 + t2);
    }
    Ok(ChainTrace { theta1, theta2, delta, config: *cfg })
}

/// Slope threshold above which a chain is flagged as drifting.
pub const DRIFT_SLOPE_THRESHOLD: f64 = 0.5;
/// Default number of lags for [`drift_diagnostic`].
pub const DEFAULT_DRIFT_WINDOW: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub window: usize,
    /// Mean squared displacement of `θ1` at lags `1..=window`.
    pub msd: Vec<f64>,
    /// OLS fit `msd(τ) ≈ intercept + slope·τ`.
    pub slope: f64,
    pub intercept: f64,
    /// Sample variance of `θ1` in consecutive blocks of `window` sweeps.
    pub window_variances: Vec<f64>,
    pub improper_posterior_suspect: bool,
}

/// Growth of the spread of `θ1` with elapsed sweeps.
///
/// For a random walk with step variance `v` the mean squared displacement at
/// lag `τ` is `vτ`, so the flat-prior chain has slope 2; a geometrically
/// ergodic chain saturates and has slope near 0 for lags past its mixing time.
pub fn drift_diagnostic(trace: &ChainTrace, window: usize) -> Result<DriftReport> {
    let n = trace.len();
    if window == 0 || window > n / 4 {
        return Err(Error::InvalidConfig(format!("window {window} must be in 1..={}", n / 4)));
    }
    let x = &trace.theta1;
    let msd: Vec<f64> = (1..=window)
        .map(|lag| {
            let s: f64 = x.windows(lag + 1).map(|w| (w[lag] - w[0]).powi(2)).sum();
            s / (n - lag) as f64
        })
        .collect();
    let lags: Vec<f64> = (1..=window).map(|l| l as f64).collect();
    let (slope, intercept) = ols(&lags, &msd);
    let window_variances = x.chunks_exact(window).map(sample_variance).collect();
    Ok(DriftReport {
        window,
        msd,
        slope,
        intercept,
        window_variances,
        improper_posterior_suspect: slope > DRIFT_SLOPE_THRESHOLD,
    })
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Significance level of the embedded δ test.
pub const KS_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub passes: bool,
}

/// One-sample Kolmogorov–Smirnov test against `N(mean, sd²)`.
///
/// The p-value uses the asymptotic Kolmogorov distribution with Stephens'
/// finite-sample correction `λ = (√n + 0.12 + 0.11/√n)·D`.
pub fn ks_test_normal(xs: &[f64], mean: f64, sd: f64) -> Result<KsReport> {
    if xs.is_empty() {
        return Err(Error::InvalidConfig("empty sample".into()));
    }
    let dist = Normal::new(mean, sd).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = dist.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    let p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * statistic);
    Ok(KsReport { statistic, p_value, n: xs.len(), passes: p_value > KS_ALPHA })
}

/// `P(K > λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// KS test of the δ series against `N(y, 1)`.
pub fn embedded_delta_test(trace: &ChainTrace) -> Result<KsReport> {
    ks_test_normal(&trace.delta, trace.config.y, 1.0)
}

/// Marginal posterior of `δ` under the prior `π(θ1, θ2) = g(θ1)`, obtained
/// from the joint `N(y − δ; 0, 1)·g(ρ)` in `(ρ, δ) = (θ1, θ1 + θ2)` by
/// integrating out `ρ` and normalizing with the 2-D total mass.
pub fn embedded_delta_posterior(y: f64, g: &Kernel, cfg: &QuadratureConfig) -> Result<ProperDensity> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: g.dim() });
    }
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let g2 = g.clone();
    let joint = Kernel::new("f(y,rho,delta)", vec![g.domain()[0], Domain1D::RealLine], move |p| {
        let d = y - p[1];
        norm * (-0.5 * d * d).exp() * g2.density(&p[..1])
    });
    let mass = match total_mass(&joint, cfg)? {
        crate::ExtendedMass::Finite(m) if m > 0.0 => m,
        crate::ExtendedMass::Finite(_) => return Err(Error::ZeroEvidence),
        crate::ExtendedMass::Infinite => return Err(Error::NotSigmaFinite(format!("y = {y}"))),
    };
    let inner_cfg = *cfg;
    let marginal = move |delta: f64| match integrate_out(&joint, &[1], &[delta], &inner_cfg) {
        Ok(m) => m.to_f64() / mass,
        Err(_) => f64::NAN,
    };
    ProperDensity::from_unnormalized(marginal, Domain1D::RealLine, cfg)
}
