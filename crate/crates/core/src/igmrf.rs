//! First-order random-walk IGMRF: `x` has independent increments
//! `x_{i+1} − x_i ~ N(0, 1/κ)` and no information about its level.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::measures::Kernel;
use crate::numerics::{integrate, Domain1D, ExtendedMass, QuadratureConfig};

/// The RW1 structure matrix: tridiagonal, diagonal `(1, 2, …, 2, 1)`,
/// off-diagonal `−1`, so that `xᵀQx = Σ (x_{i+1} − x_i)²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructureMatrixRW1 {
    n: usize,
}

pub fn build_q(n: usize) -> Result<StructureMatrixRW1> {
    if n < 2 {
        return Err(Error::InvalidSize(n));
    }
    Ok(StructureMatrixRW1 { n })
}

impl StructureMatrixRW1 {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.n;
        if i == j {
            if i == 0 || i == n - 1 {
                1.0
            } else {
                2.0
            }
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.entry(i, j)).collect()).collect()
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let n = self.n;
        Ok((0..n)
            .map(|i| {
                let mut v = self.entry(i, i) * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                v
            })
            .collect())
    }

    /// `xᵀQx` through the matrix.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let qx = self.mul_vec(x)?;
        Ok(x.iter().zip(&qx).map(|(a, b)| a * b).sum())
    }

    /// `Σ (x_{i+1} − x_i)²`.
    pub fn increment_quad_form(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum())
    }

    /// `2 − 2cos(πk/n)`, `k = 0..n`, in increasing order; `k = 0` is the
    /// null direction `1`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let n = self.n as f64;
        (0..self.n).map(|k| 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n).cos()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RW1Model {
    pub n: usize,
    pub kappa: f64,
    /// `e` in `c(κ) = κ^e`.
    pub c_exponent: f64,
}

impl RW1Model {
    /// With the usual `c(κ) = κ^{(n−1)/2}`.
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        Self::with_exponent(n, kappa, (n as f64 - 1.0) / 2.0)
    }

    pub fn with_exponent(n: usize, kappa: f64, c_exponent: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::DomainError(format!("kappa = {kappa} must be positive")));
        }
        if !c_exponent.is_finite() {
            return Err(Error::InvalidConfig(format!("c_exponent = {c_exponent}")));
        }
        Ok(Self { n, kappa, c_exponent })
    }

    pub fn structure(&self) -> StructureMatrixRW1 {
        StructureMatrixRW1 { n: self.n }
    }

    /// `e·log κ − (κ/2)·xᵀQx`.
    pub fn log_unnormalized_density(&self, x: &[f64]) -> Result<f64> {
        let q = self.structure().increment_quad_form(x)?;
        Ok(self.c_exponent * self.kappa.ln() - 0.5 * self.kappa * q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedSample {
    pub x: Vec<f64>,
    pub increments: Vec<f64>,
}

/// Draws RW1 vectors with a fixed mean from one seeded stream.
#[derive(Debug, Clone)]
pub struct ConstrainedSampler {
    n: usize,
    sd: f64,
    mu: f64,
    rng: ChaCha20Rng,
}

impl ConstrainedSampler {
    pub fn new(n: usize, kappa: f64, mu: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::DomainError(format!("kappa = {kappa} must be positive")));
        }
        if !mu.is_finite() {
            return Err(Error::DomainError(format!("mu = {mu}")));
        }
        Ok(Self { n, sd: 1.0 / kappa.sqrt(), mu, rng: ChaCha20Rng::seed_from_u64(seed) })
    }

    /// Increments `N(0, 1/κ)`, cumulative sums from 0, then a shift so the
    /// mean is `mu`.
    pub fn draw(&mut self) -> ConstrainedSample {
        let increments: Vec<f64> = (1..self.n)
            .map(|_| {
                let z: f64 = self.rng.sample(StandardNormal);
                self.sd * z
            })
            .collect();
        let mut x = Vec::with_capacity(self.n);
        let mut acc = 0.0;
        x.push(acc);
        for d in &increments {
            acc += d;
            x.push(acc);
        }
        let shift = self.mu - x.iter().sum::<f64>() / self.n as f64;
        for v in x.iter_mut() {
            *v += shift;
        }
        ConstrainedSample { x, increments }
    }
}

impl Iterator for ConstrainedSampler {
    type Item = ConstrainedSample;

    fn next(&mut self) -> Option<ConstrainedSample> {
        Some(self.draw())
    }
}

/// One draw of the RW1 field conditioned on `x̄ = mu`.
pub fn sample_given_mean(n: usize, kappa: f64, mu: f64, seed: u64) -> Result<Vec<f64>> {
    Ok(ConstrainedSampler::new(n, kappa, mu, seed)?.draw().x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propriety {
    /// `∫ π(κ)κ^e dκ` is finite.
    SufficientConditionMet {
        mass: f64,
    },
    /// `∫ π(κ)κ^e e^{−κs/2} dκ` is finite.
    Proper {
        evidence: f64,
    },
    Improper,
}

impl Propriety {
    pub fn is_proper(&self) -> bool {
        !matches!(self, Propriety::Improper)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Propriety::SufficientConditionMet { .. } => "sufficient_condition_met",
            Propriety::Proper { .. } => "proper",
            Propriety::Improper => "improper",
        }
    }
}

/// Whether the posterior of κ is proper for data with `xᵀQx = s`.
pub fn propriety_check(prior_kappa: &Kernel, c_exponent: f64, s: f64, cfg: &QuadratureConfig) -> Result<Propriety> {
    if prior_kappa.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: prior_kappa.dim() });
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DomainError(format!("quadratic form {s} must be positive (x not constant)")));
    }
    if !c_exponent.is_finite() {
        return Err(Error::InvalidConfig(format!("c_exponent = {c_exponent}")));
    }
    let domain = positive_part(prior_kappa.domain()[0])?;
    let log_pi = |k: f64| prior_kappa.density(&[k]).ln();
    if let ExtendedMass::Finite(mass) = log_space_integral(|k| log_pi(k) + c_exponent * k.ln(), &domain, cfg)? {
        return Ok(Propriety::SufficientConditionMet { mass });
    }
    match log_space_integral(|k| log_pi(k) + c_exponent * k.ln() - 0.5 * k * s, &domain, cfg)? {
        ExtendedMass::Finite(evidence) => Ok(Propriety::Proper { evidence }),
        ExtendedMass::Infinite => Ok(Propriety::Improper),
    }
}

fn positive_part(d: Domain1D) -> Result<Domain1D> {
    match d {
        Domain1D::Bounded { lo, hi } => Domain1D::bounded(lo.max(0.0), hi),
        Domain1D::HalfLine { lo } => Domain1D::half_line(lo.max(0.0)),
        Domain1D::RealLine => Ok(Domain1D::positive()),
    }
}

/// `∫ e^{g(κ)} dκ`, computed as `e^M ∫ e^{g − M}` with `M` the largest value
/// of `g` on a geometric grid, so that the absolute divergence threshold is
/// not tripped by a large but finite integrand.
fn log_space_integral<G>(g: G, domain: &Domain1D, cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    G: Fn(f64) -> f64,
{
    let m = (-80..=80)
        .map(|i| 10f64.powf(i as f64 / 10.0))
        .filter(|&k| domain.contains(k))
        .map(&g)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let m = if m.is_finite() { m } else { 0.0 };
    let r = integrate(|k| if k > 0.0 { (g(k) - m).exp() } else { 0.0 }, domain, cfg)?;
    Ok(match r {
        ExtendedMass::Finite(v) => {
            let total = v * m.exp();
            if total.is_finite() {
                ExtendedMass::Finite(total)
            } else {
                ExtendedMass::Infinite
            }
        }
        ExtendedMass::Infinite => ExtendedMass::Infinite,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitPair {
    /// Unnormalized `κ^e exp(−κ/2·xᵀQx)`: the limit through `(Δx, x̄)`.
    pub limit_a: f64,
    /// `limit_a/|Δx₁|`: the limit through `(Δx, x̄·Δx₁)`.
    pub limit_b: f64,
    /// `limit_b / limit_a`.
    pub ratio: f64,
}

/// The two limits of flattened proper densities under different
/// parameterizations of the level.
pub fn limit_pair_demo(x: &[f64], model: &RW1Model) -> Result<LimitPair> {
    let limit_a = model.log_unnormalized_density(x)?.exp();
    let d1 = (x[1] - x[0]).abs();
    if d1 == 0.0 {
        return Err(Error::ZeroFirstIncrement);
    }
    let limit_b = limit_a / d1;
    Ok(LimitPair { limit_a, limit_b, ratio: limit_b / limit_a })
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `f(x|κ)·N(x̄; 0, 1/γ)`, rescaled by `√(2π/γ)` so that it tends to
/// `limit_a` as `γ → 0`.
pub fn flattened_density_a(x: &[f64], model: &RW1Model, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::DomainError(format!("gamma = {gamma} must be positive")));
    }
    let xbar = mean(x);
    Ok(model.log_unnormalized_density(x)?.exp() * (-0.5 * gamma * xbar * xbar).exp())
}

/// `f(x|κ)·N(x̄/Δx₁; 0, 1/γ)/|Δx₁|`, rescaled by `√(2π/γ)`; tends to `limit_b`.
pub fn flattened_density_b(x: &[f64], model: &RW1Model, gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::DomainError(format!("gamma = {gamma} must be positive")));
    }
    let base = model.log_unnormalized_density(x)?.exp();
    let d1 = (x[1] - x[0]).abs();
    if d1 == 0.0 {
        return Err(Error::ZeroFirstIncrement);
    }
    let r = mean(x) / d1;
    Ok(base * (-0.5 * gamma * r * r).exp() / d1)
}
