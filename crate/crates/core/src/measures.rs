//! Possibly-improper densities: total mass, marginals that may be infinite,
//! σ-finiteness probing, proper conditionals and Bayes posteriors.
//!
//! A quantity is σ-finite exactly when its marginal density is finite almost
//! everywhere. That cannot be decided numerically, so the marginal is probed
//! at a fixed deterministic point set (see [`probe_points`]) and a single
//! infinite probe makes the quantity non-σ-finite. Conditioning is refused
//! in that case: there is no improper posterior.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{integrate_fallible, integrate_nd, Domain1D, ExtendedMass, QuadratureConfig};

type KernelFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type DensityFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A nonnegative density on a product of one-dimensional domains. Its total
/// mass may be infinite.
#[derive(Clone)]
pub struct Kernel {
    eval: Arc<KernelFn>,
    domain: Vec<Domain1D>,
    label: String,
}

impl Kernel {
    pub fn new<F>(label: impl Into<String>, domain: Vec<Domain1D>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self { eval: Arc::new(f), domain, label: label.into() }
    }

    pub fn univariate<F>(label: impl Into<String>, domain: Domain1D, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(label, vec![domain], move |p| f(p[0]))
    }

    /// `rate·e^{−rate·t}` on `(0, ∞)`.
    pub fn exponential(rate: f64) -> Self {
        Self::univariate(format!("exp({rate})"), Domain1D::positive(), move |t| rate * (-rate * t).exp())
    }

    /// The constant 1 (Lebesgue measure) on a domain.
    pub fn flat(domain: Domain1D) -> Self {
        Self::univariate("flat", domain, |_| 1.0)
    }

    /// `1/t` on `(0, ∞)`.
    pub fn reciprocal() -> Self {
        Self::univariate("1/t", Domain1D::positive(), |t| 1.0 / t)
    }

    /// `I(0 < t ≤ m)/m`, declared on its support `[0, m]`.
    pub fn truncated_uniform(m: f64) -> Result<Self> {
        let domain = Domain1D::bounded(0.0, m)?;
        Ok(Self::univariate(format!("uniform(0,{m}]"), domain, move |t| if t > 0.0 { 1.0 / m } else { 0.0 }))
    }

    /// Normal density with the given mean and variance on the real line.
    pub fn normal(mean: f64, variance: f64) -> Self {
        let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
        Self::univariate(format!("N({mean},{variance})"), Domain1D::RealLine, move |t| {
            norm * (-(t - mean) * (t - mean) / (2.0 * variance)).exp()
        })
    }

    /// Independent product `a(p_a)·b(p_b)`; axes of `a` come first.
    pub fn product(a: &Kernel, b: &Kernel) -> Self {
        let (fa, fb) = (a.clone(), b.clone());
        let split = a.dim();
        let mut domain = a.domain.clone();
        domain.extend_from_slice(&b.domain);
        Self::new(format!("{}x{}", a.label, b.label), domain, move |p| {
            let left = fa.density(&p[..split]);
            if left == 0.0 {
                return 0.0;
            }
            left * fb.density(&p[split..])
        })
    }

    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.clone();
        Self::new(format!("{c}*{}", self.label), self.domain.clone(), move |p| c * inner.density(p))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[Domain1D] {
        &self.domain
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Density at `p`; zero outside the declared domain.
    pub fn density(&self, p: &[f64]) -> f64 {
        if p.iter().zip(&self.domain).all(|(&x, d)| d.contains(x)) {
            (self.eval)(p)
        } else {
            0.0
        }
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel").field("label", &self.label).field("domain", &self.domain).finish()
    }
}

/// A unit-mass density on one axis.
#[derive(Clone)]
pub struct ProperDensity {
    unnormalized: Arc<DensityFn>,
    domain: Domain1D,
    normalizer: f64,
}

impl ProperDensity {
    /// Normalizes `f` over `domain`.
    pub fn from_unnormalized<F>(f: F, domain: Domain1D, cfg: &QuadratureConfig) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: Arc<DensityFn> = Arc::new(f);
        let g = Arc::clone(&f);
        match integrate_fallible(move |t| Ok(g(t)), &domain, cfg)? {
            ExtendedMass::Infinite => Err(Error::DivergentSlice),
            ExtendedMass::Finite(m) if m <= 0.0 => Err(Error::ZeroSlice),
            ExtendedMass::Finite(m) => Ok(Self { unnormalized: f, domain, normalizer: m }),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.domain.contains(t) {
            (self.unnormalized)(t) / self.normalizer
        } else {
            0.0
        }
    }

    pub fn domain(&self) -> Domain1D {
        self.domain
    }

    /// The mass of the unnormalized density that was divided out.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn total_mass(&self, cfg: &QuadratureConfig) -> Result<ExtendedMass> {
        let d = self.clone();
        integrate_fallible(move |t| Ok(d.eval(t)), &self.domain, cfg)
    }

    pub fn mean(&self, cfg: &QuadratureConfig) -> Result<f64> {
        let d = self.clone();
        let (pos, neg) = match self.domain {
            Domain1D::Bounded { lo, .. } | Domain1D::HalfLine { lo } if lo >= 0.0 => {
                (integrate_fallible(move |t| Ok(t * d.eval(t)), &self.domain, cfg)?, ExtendedMass::Finite(0.0))
            }
            _ => {
                let d2 = self.clone();
                (
                    integrate_fallible(move |t| Ok(t.max(0.0) * d.eval(t)), &self.domain, cfg)?,
                    integrate_fallible(move |t| Ok((-t).max(0.0) * d2.eval(t)), &self.domain, cfg)?,
                )
            }
        };
        match (pos, neg) {
            (ExtendedMass::Finite(p), ExtendedMass::Finite(n)) => Ok(p - n),
            _ => Err(Error::DivergentSlice),
        }
    }
}

impl fmt::Debug for ProperDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProperDensity").field("domain", &self.domain).field("normalizer", &self.normalizer).finish()
    }
}

/// Quadrature settings plus the σ-finiteness probe count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureConfig {
    pub quad: QuadratureConfig,
    pub probes: usize,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { quad: QuadratureConfig::default(), probes: 101 }
    }
}

const LATTICE_GENERATOR: usize = 39;

/// Deterministic probe points on a block of axes.
///
/// Point `i` takes `u = (m + 1)/(count + 1)` on each axis, mapped through
/// [`Domain1D::from_unit`], where `m = i` on the first axis and
/// `m = i·g^j mod count` on axis `j` (a rank-1 lattice), so a single axis
/// gets the plain quantile grid.
pub fn probe_points(domains: &[Domain1D], count: usize) -> Vec<Vec<f64>> {
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let mut p = Vec::with_capacity(domains.len());
        let mut mult = 1usize;
        for d in domains {
            let m = (i * mult) % count.max(1);
            let u = (m + 1) as f64 / (count + 1) as f64;
            p.push(d.from_unit(u));
            mult = (mult * LATTICE_GENERATOR) % count.max(1);
        }
        points.push(p);
    }
    points
}

/// Integrates `kernel` over every axis not in `kept`, with the kept axes fixed
/// at `values`. Free axes are integrated in increasing order, lowest innermost.
pub fn integrate_out(kernel: &Kernel, kept: &[usize], values: &[f64], cfg: &QuadratureConfig) -> Result<ExtendedMass> {
    check_axes(kernel, kept)?;
    if values.len() != kept.len() {
        return Err(Error::DimensionMismatch { expected: kept.len(), got: values.len() });
    }
    let n = kernel.dim();
    let free: Vec<usize> = (0..n).filter(|a| !kept.contains(a)).collect();
    if free.is_empty() {
        return Ok(ExtendedMass::from(kernel.density(values)));
    }
    let domains: Vec<Domain1D> = free.iter().map(|&a| kernel.domain[a]).collect();
    let assemble = |free_vals: &[f64]| {
        let mut p = vec![0.0; n];
        for (&a, &v) in kept.iter().zip(values) {
            p[a] = v;
        }
        for (&a, &v) in free.iter().zip(free_vals) {
            p[a] = v;
        }
        p
    };
    integrate_nd(|fv: &[f64]| Ok(kernel.density(&assemble(fv))), &domains, cfg)
}

/// Total mass of a kernel over its whole domain.
pub fn total_mass(kernel: &Kernel, cfg: &QuadratureConfig) -> Result<ExtendedMass> {
    integrate_out(kernel, &[], &[], cfg)
}

/// The marginal of a joint kernel on a block of kept axes.
#[derive(Debug, Clone)]
pub struct MarginalResult {
    joint: Kernel,
    kept: Vec<usize>,
    /// Probe points on the kept axes.
    pub probes: Vec<Vec<f64>>,
    /// Marginal density at the probes, in order. Evaluation stops at the
    /// first infinite value.
    pub probe_values: Vec<ExtendedMass>,
    pub sigma_finite: bool,
    cfg: QuadratureConfig,
}

impl MarginalResult {
    pub fn kept_axes(&self) -> &[usize] {
        &self.kept
    }

    /// Marginal density at a point of the kept axes; `+∞` is a valid value.
    pub fn density(&self, at: &[f64]) -> Result<ExtendedMass> {
        integrate_out(&self.joint, &self.kept, at, &self.cfg)
    }

    /// Total mass of the marginal. Infinite whenever the marginal is not
    /// σ-finite.
    pub fn mass(&self) -> Result<ExtendedMass> {
        if !self.sigma_finite {
            return Ok(ExtendedMass::Infinite);
        }
        total_mass(&self.joint, &self.cfg)
    }
}

/// Marginal of `joint` on the `kept` axes, probed for σ-finiteness.
pub fn marginal(joint: &Kernel, kept: &[usize], cfg: &MeasureConfig) -> Result<MarginalResult> {
    check_axes(joint, kept)?;
    if kept.is_empty() || kept.len() == joint.dim() {
        return Err(Error::InvalidConfig("marginal needs at least one kept and one integrated axis".into()));
    }
    let domains: Vec<Domain1D> = kept.iter().map(|&a| joint.domain[a]).collect();
    let probes = probe_points(&domains, cfg.probes);
    let mut probe_values = Vec::with_capacity(probes.len());
    let mut sigma_finite = true;
    for p in &probes {
        let v = integrate_out(joint, kept, p, &cfg.quad)?;
        probe_values.push(v);
        if v.is_infinite() {
            sigma_finite = false;
            break;
        }
    }
    Ok(MarginalResult { joint: joint.clone(), kept: kept.to_vec(), probes, probe_values, sigma_finite, cfg: cfg.quad })
}

/// Whether the quantity on the `axes` block of `joint` is σ-finite: its
/// marginal density is finite at every probe point.
pub fn is_sigma_finite(joint: &Kernel, axes: &[usize], cfg: &MeasureConfig) -> Result<bool> {
    Ok(marginal(joint, axes, cfg)?.sigma_finite)
}

/// As [`is_sigma_finite`] but at caller-supplied probe points.
pub fn is_sigma_finite_at(joint: &Kernel, axes: &[usize], points: &[Vec<f64>], cfg: &QuadratureConfig) -> Result<bool> {
    for p in points {
        if integrate_out(joint, axes, p, cfg)?.is_infinite() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Conditional density of the single remaining axis given `given` axes at
/// `values`. Requires the conditioning block to be σ-finite.
pub fn condition(joint: &Kernel, given: &[usize], values: &[f64], cfg: &MeasureConfig) -> Result<ProperDensity> {
    check_axes(joint, given)?;
    if values.len() != given.len() {
        return Err(Error::DimensionMismatch { expected: given.len(), got: values.len() });
    }
    let free: Vec<usize> = (0..joint.dim()).filter(|a| !given.contains(a)).collect();
    if free.len() != 1 {
        return Err(Error::DimensionMismatch { expected: joint.dim() - 1, got: given.len() });
    }
    if !is_sigma_finite(joint, given, cfg)? {
        return Err(Error::NotSigmaFinite(format!("axes {given:?} of {}", joint.label)));
    }
    let axis = free[0];
    let n = joint.dim();
    let k = joint.clone();
    let given = given.to_vec();
    let values = values.to_vec();
    let slice = move |t: f64| {
        let mut p = vec![0.0; n];
        for (&a, &v) in given.iter().zip(&values) {
            p[a] = v;
        }
        p[axis] = t;
        k.density(&p)
    };
    ProperDensity::from_unnormalized(slice, joint.domain[axis], &cfg.quad)
}

/// `f(x_obs|θ)π(θ)/f(x_obs)`; fails when the evidence `f(x_obs)` is infinite
/// (the observation is not σ-finite) or zero.
pub fn bayes_posterior<L>(prior: &Kernel, likelihood: L, x_obs: f64, cfg: &QuadratureConfig) -> Result<ProperDensity>
where
    L: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    if prior.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: prior.dim() });
    }
    let p = prior.clone();
    let unnormalized = move |theta: f64| {
        let w = p.density(&[theta]);
        if w == 0.0 {
            0.0
        } else {
            likelihood(x_obs, theta) * w
        }
    };
    match ProperDensity::from_unnormalized(unnormalized, prior.domain[0], cfg) {
        Err(Error::DivergentSlice) => Err(Error::NotSigmaFinite(format!("evidence at x = {x_obs} is infinite"))),
        Err(Error::ZeroSlice) => Err(Error::ZeroEvidence),
        other => other,
    }
}

fn check_axes(kernel: &Kernel, axes: &[usize]) -> Result<()> {
    for (i, &a) in axes.iter().enumerate() {
        if a >= kernel.dim() || axes[..i].contains(&a) {
            return Err(Error::InvalidConfig(format!("bad axis {a} for a {}-d kernel", kernel.dim())));
        }
    }
    Ok(())
}
