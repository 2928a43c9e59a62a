//! q-vague convergence of possibly improper measures on the line, checked on
//! a finite battery of triangular bumps, and the Jeffreys–Lindley example.
//!
//! `Π_n → Π` q-vaguely when `a_nΠ_n → Π` vaguely for some positive `a_n`.
//! Here `a_n` is fixed by matching one reference bump, and vague convergence
//! is checked on every bump of the battery.

use std::fmt;

use crate::error::{Error, Result};
use crate::measures::Kernel;
use crate::numerics::{integrate, Domain1D, ExtendedMass, QuadratureConfig};
use crate::stone::truncation_bracket;

/// A sum of weighted point masses and an optional density part.
#[derive(Debug, Clone)]
pub struct MixedMeasure {
    atoms: Vec<(f64, f64)>,
    ac: Option<Kernel>,
    label: String,
}

impl MixedMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, ac: Option<Kernel>, label: impl Into<String>) -> Result<Self> {
        for (i, &(loc, w)) in atoms.iter().enumerate() {
            if !(loc.is_finite() && w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "atom ({loc}, {w}) needs a finite location and positive weight"
                )));
            }
            if atoms[..i].iter().any(|&(l, _)| l == loc) {
                return Err(Error::InvalidConfig(format!("duplicate atom at {loc}")));
            }
        }
        if let Some(k) = &ac {
            if k.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: k.dim() });
            }
        }
        Ok(Self { atoms, ac, label: label.into() })
    }

    pub fn dirac(loc: f64) -> Self {
        Self::new(vec![(loc, 1.0)], None, format!("delta_{loc}")).expect("valid atom")
    }

    pub fn absolutely_continuous(k: Kernel) -> Self {
        let label = k.label().to_string();
        Self { atoms: Vec::new(), ac: Some(k), label }
    }

    pub fn lebesgue(domain: Domain1D) -> Self {
        Self::absolutely_continuous(Kernel::flat(domain)).with_label(format!("lebesgue{domain}"))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn ac_part(&self) -> Option<&Kernel> {
        self.ac.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|&(l, w)| (l, c * w)).collect(),
            ac: self.ac.as_ref().map(|k| k.scaled(c)),
            label: format!("{c}*{}", self.label),
        }
    }

    /// The measure `L(θ)·Π(dθ)` for a nonnegative continuous weight `L`.
    pub fn reweighted<L>(&self, weight: L, label: impl Into<String>) -> Result<Self>
    where
        L: Fn(f64) -> f64 + Clone + Send + Sync + 'static,
    {
        let atoms = self.atoms.iter().map(|&(l, w)| (l, w * weight(l))).filter(|&(_, w)| w > 0.0).collect();
        let ac = self.ac.as_ref().map(|k| {
            let (k, wt) = (k.clone(), weight.clone());
            Kernel::univariate(format!("L*{}", k.label()), k.domain()[0], move |t| {
                let d = k.density(&[t]);
                if d == 0.0 {
                    0.0
                } else {
                    d * wt(t)
                }
            })
        });
        Self::new(atoms, ac, label)
    }
}

/// `max(0, 1 − |t − center|/half_width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub half_width: f64,
}

impl TestFunction {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(center.is_finite() && half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidConfig(format!("bump ({center}, {half_width})")));
        }
        Ok(Self { center, half_width })
    }

    pub fn eval(&self, t: f64) -> f64 {
        (1.0 - (t - self.center).abs() / self.half_width).max(0.0)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionFamily {
    pub bumps: Vec<TestFunction>,
}

pub const BATTERY_SIZE: usize = 25;
pub const BATTERY_HALF_WIDTH: f64 = 0.5;

impl TestFunctionFamily {
    pub fn new(centers: &[f64], half_width: f64) -> Result<Self> {
        let bumps = centers.iter().map(|&c| TestFunction::new(c, half_width)).collect::<Result<_>>()?;
        Ok(Self { bumps })
    }

    /// 25 bumps centered at `−10 + 20i/24`, `i = 0..25`; includes 0.
    pub fn real_line_battery() -> Self {
        let centers: Vec<f64> = (0..BATTERY_SIZE).map(|i| -10.0 + 20.0 * i as f64 / 24.0).collect();
        Self::new(&centers, BATTERY_HALF_WIDTH).expect("valid battery")
    }

    /// 25 bumps centered at `0.8i`, `i = 1..=25`, all supported in `(0, 20.5]`.
    pub fn half_line_battery() -> Self {
        let centers: Vec<f64> = (1..=BATTERY_SIZE).map(|i| 0.8 * i as f64).collect();
        Self::new(&centers, BATTERY_HALF_WIDTH).expect("valid battery")
    }

    /// Adds a bump unless an identical one is already present; returns its index.
    pub fn insert(&mut self, bump: TestFunction) -> usize {
        if let Some(i) = self.bumps.iter().position(|b| *b == bump) {
            return i;
        }
        self.bumps.push(bump);
        self.bumps.len() - 1
    }

    pub fn index_of_center(&self, center: f64) -> Option<usize> {
        self.bumps.iter().position(|b| b.center == center)
    }
}

/// `∫ f dm` for a bounded `f` supported in `[lo, hi]`; the density part is
/// integrated piecewise between the sorted `breaks`.
pub fn pair_integral_with<F>(
    m: &MixedMeasure,
    f: F,
    support: (f64, f64),
    breaks: &[f64],
    cfg: &QuadratureConfig,
) -> Result<ExtendedMass>
where
    F: Fn(f64) -> f64,
{
    let mut total = ExtendedMass::Finite(m.atoms.iter().map(|&(l, w)| w * f(l)).sum());
    let Some(k) = &m.ac else {
        return Ok(total);
    };
    let (mut lo, mut hi) = support;
    match k.domain()[0] {
        Domain1D::Bounded { lo: a, hi: b } => {
            lo = lo.max(a);
            hi = hi.min(b);
        }
        Domain1D::HalfLine { lo: a } => lo = lo.max(a),
        Domain1D::RealLine => {}
    }
    if hi <= lo {
        return Ok(total);
    }
    let mut cuts = vec![lo];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    inner.sort_by(f64::total_cmp);
    cuts.extend(inner);
    cuts.push(hi);
    for w in cuts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let piece = integrate(|t| k.density(&[t]) * f(t), &Domain1D::bounded(w[0], w[1])?, cfg)?;
        total = total + piece;
        if total.is_infinite() {
            break;
        }
    }
    Ok(total)
}

/// `Σ w·φ(loc) + ∫ φ·density`.
pub fn pair_integral(m: &MixedMeasure, phi: &TestFunction, cfg: &QuadratureConfig) -> Result<ExtendedMass> {
    pair_integral_with(m, |t| phi.eval(t), phi.support(), &[phi.center], cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QVagueConfig {
    pub quad: QuadratureConfig,
    /// Tolerance on the normalized error at the final index.
    pub tol: f64,
    /// Errors below this count as zero when checking that they decrease.
    pub noise_floor: f64,
}

impl Default for QVagueConfig {
    fn default() -> Self {
        Self { quad: QuadratureConfig::default(), tol: 1e-3, noise_floor: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QVagueVerdict {
    pub converges: bool,
    pub indices: Vec<f64>,
    pub scale_sequence: Vec<f64>,
    /// `max_φ |a_n·∫φ dΠ_n − ∫φ dΠ| / max_φ ∫φ dΠ` at each index.
    pub errors: Vec<f64>,
    /// Error at the final index.
    pub worst_error: f64,
    pub limit_label: String,
}

impl fmt::Display for QVagueVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}: converges={} worst_error={:e}",
            self.indices.len(),
            self.limit_label,
            self.converges,
            self.worst_error
        )
    }
}

/// Checks `seq(n) → candidate` q-vaguely along `indices`.
///
/// `a_n = ∫φ₀ dΠ / ∫φ₀ dΠ_n` with `φ₀ = family.bumps[reference]`. Errors are
/// relative to the largest candidate integral over the family, so the
/// verdict does not change when the candidate is rescaled.
pub fn check_qvague<S>(
    seq: S,
    candidate: &MixedMeasure,
    family: &TestFunctionFamily,
    reference: usize,
    indices: &[f64],
    cfg: &QVagueConfig,
) -> Result<QVagueVerdict>
where
    S: Fn(f64) -> Result<MixedMeasure>,
{
    if indices.is_empty() {
        return Err(Error::InvalidConfig("no indices".into()));
    }
    let phi0 = family
        .bumps
        .get(reference)
        .ok_or_else(|| Error::InvalidConfig(format!("reference {reference} outside the family")))?;
    let target: Vec<f64> = family
        .bumps
        .iter()
        .map(|b| finite(pair_integral(candidate, b, &cfg.quad)?, candidate.label()))
        .collect::<Result<_>>()?;
    let target0 = target[reference];
    if target0 <= 0.0 {
        return Err(Error::InvalidConfig(format!("reference bump has zero mass under {}", candidate.label())));
    }
    let scale = target.iter().fold(0.0f64, |m, &v| m.max(v.abs()));

    let mut scale_sequence = Vec::with_capacity(indices.len());
    let mut errors = Vec::with_capacity(indices.len());
    for &n in indices {
        let m = seq(n)?;
        let ref_mass = finite(pair_integral(&m, phi0, &cfg.quad)?, m.label())?;
        if ref_mass <= 0.0 {
            return Err(Error::ReferenceDegenerate { index: n });
        }
        let a = target0 / ref_mass;
        let mut worst = 0.0f64;
        for (b, &t) in family.bumps.iter().zip(&target) {
            let v = finite(pair_integral(&m, b, &cfg.quad)?, m.label())?;
            worst = worst.max((a * v - t).abs() / scale);
        }
        scale_sequence.push(a);
        errors.push(worst);
    }
    let decreasing = errors.windows(2).all(|e| e[1] <= e[0] || e[1] < cfg.noise_floor);
    let worst_error = *errors.last().expect("nonempty");
    Ok(QVagueVerdict {
        converges: decreasing && worst_error < cfg.tol,
        indices: indices.to_vec(),
        scale_sequence,
        errors,
        worst_error,
        limit_label: candidate.label().to_string(),
    })
}

fn finite(m: ExtendedMass, label: &str) -> Result<f64> {
    m.finite().ok_or_else(|| Error::InvalidConfig(format!("{label} is not locally finite on the test battery")))
}

/// Checks that the posteriors `L(θ)Π_n(dθ)` converge q-vaguely to `L(θ)Π(dθ)`.
pub fn posterior_convergence_check<S, L>(
    prior_seq: S,
    likelihood: L,
    candidate_prior: &MixedMeasure,
    family: &TestFunctionFamily,
    reference: usize,
    indices: &[f64],
    cfg: &QVagueConfig,
) -> Result<QVagueVerdict>
where
    S: Fn(f64) -> Result<MixedMeasure>,
    L: Fn(f64) -> f64 + Clone + Send + Sync + 'static,
{
    let candidate = candidate_prior.reweighted(likelihood.clone(), format!("L*{}", candidate_prior.label()))?;
    check_qvague(
        |n| {
            let p = prior_seq(n)?;
            let label = format!("L*{}", p.label());
            p.reweighted(likelihood.clone(), label)
        },
        &candidate,
        family,
        reference,
        indices,
        cfg,
    )
}

/// Posterior mass of the atoms: `Σ w L(loc) / (Σ w L(loc) + ∫ L dΠ_ac)`.
pub fn posterior_atom_mass<L>(prior: &MixedMeasure, likelihood: L, cfg: &QuadratureConfig) -> Result<f64>
where
    L: Fn(f64) -> f64,
{
    let atom: f64 = prior.atoms.iter().map(|&(l, w)| w * likelihood(l)).sum();
    let cont = match &prior.ac {
        None => 0.0,
        Some(k) => match integrate(|t| k.density(&[t]) * likelihood(t), &k.domain()[0], cfg)? {
            ExtendedMass::Finite(v) => v,
            ExtendedMass::Infinite => return Ok(0.0),
        },
    };
    if atom + cont <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok(atom / (atom + cont))
}

/// `π(0|x) = (1 + √(2π)·e^{x²/2})^{−1}` under `½δ₀ + ½·Lebesgue`.
pub fn lindley_posterior_improper(x: f64) -> f64 {
    logistic_complement(0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * x * x)
}

/// `π_n(0|x) = (1 + (1+n²)^{−1/2}·e^{n²x²/(2(1+n²))})^{−1}` under
/// `½δ₀ + ½N(0, n²)`.
pub fn lindley_posterior_proper(x: f64, n: f64) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::DomainError(format!("n = {n} must be positive")));
    }
    let n2 = n * n;
    let log_ratio = -0.5 * n2.ln_1p() + n2 * x * x / (2.0 * (1.0 + n2));
    Ok(logistic_complement(log_ratio))
}

/// `1/(1 + e^ℓ)`.
fn logistic_complement(l: f64) -> f64 {
    if l > 0.0 {
        let e = (-l).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + l.exp())
    }
}

/// `½δ₀ + ½N(0, n²)`.
pub fn lindley_prior(n: f64) -> Result<MixedMeasure> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::DomainError(format!("n = {n} must be positive")));
    }
    MixedMeasure::new(vec![(0.0, 0.5)], Some(Kernel::normal(0.0, n * n).scaled(0.5)), format!("lindley_prior(n={n})"))
}

/// `½δ₀ + ½·Lebesgue` on the real line.
pub fn lindley_improper_prior() -> MixedMeasure {
    MixedMeasure::new(vec![(0.0, 0.5)], Some(Kernel::flat(Domain1D::RealLine).scaled(0.5)), "half_delta0+half_lebesgue")
        .expect("valid measure")
}

/// Indices at which the demo sequences are checked.
pub const DEMO_INDICES: [f64; 4] = [10.0, 100.0, 1_000.0, 10_000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoCase {
    /// `h_M → 1` on `(0, ∞)`.
    HM,
    /// `N(0, n²) →` Lebesgue on the real line.
    GaussFlat,
    /// `½δ₀ + ½N(0, n²)` against `δ₀` and against `½δ₀ + Lebesgue`.
    LindleyPrior,
}

impl DemoCase {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "hM" => Some(Self::HM),
            "gauss_flat" => Some(Self::GaussFlat),
            "lindley_prior" => Some(Self::LindleyPrior),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::HM => "hM",
            Self::GaussFlat => "gauss_flat",
            Self::LindleyPrior => "lindley_prior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoOutcome {
    pub sequence: String,
    /// Whether the sequence is expected to converge to this candidate.
    pub expected: bool,
    pub verdict: QVagueVerdict,
}

/// Runs the q-vague checks of one demo case on its default battery.
pub fn run_demo(case: DemoCase, cfg: &QVagueConfig) -> Result<Vec<DemoOutcome>> {
    match case {
        DemoCase::HM => {
            let mut family = TestFunctionFamily::half_line_battery();
            let reference = family.insert(TestFunction::new(1.0, BATTERY_HALF_WIDTH)?);
            let candidate = MixedMeasure::lebesgue(Domain1D::positive());
            let verdict = check_qvague(
                |m| Ok(MixedMeasure::absolutely_continuous(Kernel::truncated_uniform(m)?)),
                &candidate,
                &family,
                reference,
                &DEMO_INDICES,
                cfg,
            )?;
            Ok(vec![DemoOutcome { sequence: "h_M".into(), expected: true, verdict }])
        }
        DemoCase::GaussFlat => {
            let family = TestFunctionFamily::real_line_battery();
            let reference = family.index_of_center(0.0).expect("battery contains 0");
            let verdict = check_qvague(
                |n| Ok(MixedMeasure::absolutely_continuous(Kernel::normal(0.0, n * n))),
                &MixedMeasure::lebesgue(Domain1D::RealLine),
                &family,
                reference,
                &DEMO_INDICES,
                cfg,
            )?;
            Ok(vec![DemoOutcome { sequence: "N(0,n^2)".into(), expected: true, verdict }])
        }
        DemoCase::LindleyPrior => {
            let family = TestFunctionFamily::real_line_battery();
            let reference = family.index_of_center(0.0).expect("battery contains 0");
            let mut out = Vec::new();
            for (candidate, expected) in [(MixedMeasure::dirac(0.0), true), (lindley_improper_prior(), false)] {
                let verdict = check_qvague(lindley_prior, &candidate, &family, reference, &DEMO_INDICES, cfg)?;
                out.push(DemoOutcome { sequence: "half_delta0+half_N(0,n^2)".into(), expected, verdict });
            }
            Ok(out)
        }
    }
}

/// Unnormalized truncated-prior posterior of θ in the exponential-rates
/// model, `θe^{−θ}/(θ+z)³·[2 − e^{−A}(A²+2A+2)]`, as a measure.
pub fn stone_truncated_posterior_measure(x: f64, z: f64, m: f64) -> MixedMeasure {
    MixedMeasure::absolutely_continuous(Kernel::univariate(
        format!("xM(x={x},M={m})"),
        Domain1D::positive(),
        move |t| t * (-t).exp() / (t + z).powi(3) * truncation_bracket(x * m * (t + z)),
    ))
}

/// `θe^{−θ}/(θ+z)³` as a measure.
pub fn stone_cross_measure(z: f64) -> MixedMeasure {
    MixedMeasure::absolutely_continuous(Kernel::univariate("cross", Domain1D::positive(), move |t| {
        t * (-t).exp() / (t + z).powi(3)
    }))
}
