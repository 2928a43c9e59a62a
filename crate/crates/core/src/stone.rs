//! The exponential-rates marginalization paradox.
//!
//! Given `(θ, φ)`, `X ~ Exp(θφ)` and `Y ~ Exp(φ)` are independent and
//! `Z = Y/X`. The prior is `π(θ)h(φ)` with `π` usually proper and `h`
//! possibly improper.

use std::fmt;

use crate::error::{Error, Result};
use crate::measures::{self, Kernel, MeasureConfig, ProperDensity};
use crate::numerics::{integrate, open_closed_grid, sup_distance, Domain1D, ExtendedMass, QuadratureConfig};

/// Grid used for all sup-distance comparisons of θ densities.
pub fn theta_grid() -> Vec<f64> {
    open_closed_grid(0.0, 10.0, 2000)
}

/// Routes that differ by more than this are reported as a paradox.
pub const PARADOX_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct StoneModel {
    pub prior_theta: Kernel,
    pub prior_phi: Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Paradox,
    ConditioningForbidden,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::Paradox => "paradox",
            Verdict::ConditioningForbidden => "conditioning_forbidden",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ParadoxReport {
    /// Posterior of θ reached through the full data `(x, z)`, or through
    /// `f(z, θ)` when `z` is σ-finite.
    pub cross_density: ProperDensity,
    /// The pretended `f(θ|z) ∝ f(z|θ)π(θ)`.
    pub naive_density: ProperDensity,
    pub sup_distance: f64,
    /// Whether the two routes have the same shape, regardless of σ-finiteness.
    pub shapes_agree: bool,
    pub z_sigma_finite: bool,
    pub verdict: Verdict,
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{name} = {v} must be positive")))
    }
}

/// `2 − e^{−A}(A² + 2A + 2) = ∫₀^A w²e^{−w} dw`, increasing from 0 to 2.
pub fn truncation_bracket(a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if a < 1.0 {
        // γ(3, A) = A³e^{−A} Σ_k A^k / (3·4···(3+k))
        let mut term = 1.0 / 3.0;
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= a / (3.0 + k);
            sum += term;
            k += 1.0;
        }
        return a * a * a * (-a).exp() * sum;
    }
    2.0 - (-a).exp() * (a * a + 2.0 * a + 2.0)
}

impl StoneModel {
    pub fn new(prior_theta: Kernel, prior_phi: Kernel) -> Result<Self> {
        for (name, k) in [("prior_theta", &prior_theta), ("prior_phi", &prior_phi)] {
            if k.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: k.dim() });
            }
            match k.domain()[0] {
                Domain1D::Bounded { lo, .. } | Domain1D::HalfLine { lo } if lo >= 0.0 => {}
                d => return Err(Error::InvalidDomain(format!("{name} must live on (0, ∞), got {d}"))),
            }
        }
        Ok(Self { prior_theta, prior_phi })
    }

    /// `π(θ) = e^{−θ}` with `h ≡ 1`.
    pub fn exponential_flat() -> Self {
        Self::new(Kernel::exponential(1.0), Kernel::flat(Domain1D::positive())).expect("valid priors")
    }

    /// `π(θ) = e^{−θ}` with an arbitrary `h`.
    pub fn exponential_with(prior_phi: Kernel) -> Result<Self> {
        Self::new(Kernel::exponential(1.0), prior_phi)
    }

    fn pi(&self, theta: f64) -> f64 {
        self.prior_theta.density(&[theta])
    }

    fn h(&self, phi: f64) -> f64 {
        self.prior_phi.density(&[phi])
    }

    /// `f(x, z, θ, φ) = θφ²x·e^{−φx(θ+z)}·π(θ)`.
    pub fn joint_init(&self, theta: f64, phi: f64, x: f64, z: f64) -> Result<f64> {
        require_positive("theta", theta)?;
        require_positive("phi", phi)?;
        require_positive("x", x)?;
        require_positive("z", z)?;
        Ok(theta * phi * phi * x * (-phi * x * (theta + z)).exp() * self.pi(theta))
    }

    /// `∫₀^∞ w²e^{−w} h(w/s) dw`, restricted to the support of `h`.
    ///
    /// The integrand is divided by `h(2/s)` (its value near the peak of
    /// `w²e^{−w}`) so that its size does not grow with `s`.
    fn scaled_h_moment(&self, s: f64, cfg: &QuadratureConfig) -> Result<ExtendedMass> {
        let domain = match self.prior_phi.domain()[0] {
            Domain1D::Bounded { lo, hi } => Domain1D::bounded(lo * s, hi * s)?,
            Domain1D::HalfLine { lo } => Domain1D::half_line(lo * s)?,
            Domain1D::RealLine => Domain1D::positive(),
        };
        let c = match self.h(2.0 / s) {
            v if v > 0.0 && v.is_finite() => v,
            _ => 1.0,
        };
        let m = integrate(|w| if w > 0.0 { w * w * (-w).exp() * (self.h(w / s) / c) } else { 0.0 }, &domain, cfg)?;
        Ok(m.scale(c))
    }

    /// Kernel on axes `(x, z, θ)`: `θπ(θ)/x² ∫₀^∞ u²e^{−u(θ+z)} h(u/x) du`.
    ///
    /// The inner integral is computed by quadrature at every evaluation, as
    /// `w = u(θ+z)`: `θπ(θ)/(x²(θ+z)³) ∫ w²e^{−w} h(w/(x(θ+z))) dw`.
    pub fn xzt_kernel(&self, cfg: &QuadratureConfig) -> Kernel {
        let model = self.clone();
        let cfg = *cfg;
        Kernel::new("f(x,z,theta)", vec![Domain1D::positive(); 3], move |p| {
            let (x, z, theta) = (p[0], p[1], p[2]);
            let outer = theta * model.pi(theta);
            if outer == 0.0 {
                return 0.0;
            }
            let s = theta + z;
            match model.scaled_h_moment(x * s, &cfg) {
                Ok(ExtendedMass::Finite(m)) => outer * m / (x * x * s * s * s),
                Ok(ExtendedMass::Infinite) => f64::INFINITY,
                Err(_) => f64::NAN,
            }
        })
    }

    /// Kernel on axes `(z, θ)`: `θπ(θ)/(θ+z)² · ∫h`, infinite wherever
    /// `θπ(θ) > 0` when `h` is improper.
    pub fn zt_kernel(&self, cfg: &QuadratureConfig) -> Result<Kernel> {
        let h_mass = measures::total_mass(&self.prior_phi, cfg)?;
        let model = self.clone();
        Ok(Kernel::new("f(z,theta)", vec![Domain1D::positive(); 2], move |p| {
            let (z, theta) = (p[0], p[1]);
            let outer = theta * model.pi(theta);
            if outer == 0.0 {
                return 0.0;
            }
            match h_mass {
                ExtendedMass::Finite(m) => outer * m / ((theta + z) * (theta + z)),
                ExtendedMass::Infinite => f64::INFINITY,
            }
        }))
    }

    /// `f(θ|x,z) ∝ θπ(θ)/(θ+z)³`, the flat-`h` posterior; free of `x`.
    pub fn posterior_given_xz(&self, z: f64, cfg: &QuadratureConfig) -> Result<ProperDensity> {
        require_positive("z", z)?;
        let prior = self.prior_theta.clone();
        ProperDensity::from_unnormalized(
            move |t| t * prior.density(&[t]) / ((t + z) * (t + z) * (t + z)),
            Domain1D::positive(),
            cfg,
        )
    }

    /// `∝ θπ(θ)/(θ+z)² = f(z|θ)π(θ)`.
    pub fn naive_fz(&self, z: f64, cfg: &QuadratureConfig) -> Result<ProperDensity> {
        require_positive("z", z)?;
        let prior = self.prior_theta.clone();
        ProperDensity::from_unnormalized(
            move |t| t * prior.density(&[t]) / ((t + z) * (t + z)),
            Domain1D::positive(),
            cfg,
        )
    }

    /// `f(θ|x,z) ∝ θπ(θ)/(θ+z)³ · ∫₀^∞ w²e^{−w} h(w/(x(θ+z))) dw` for the
    /// model's own `h`.
    pub fn posterior_general_h(&self, x: f64, z: f64, cfg: &QuadratureConfig) -> Result<ProperDensity> {
        require_positive("x", x)?;
        require_positive("z", z)?;
        let model = self.clone();
        let cfg_inner = *cfg;
        let f = move |t: f64| {
            let outer = t * model.pi(t);
            if outer == 0.0 {
                return 0.0;
            }
            let s = t + z;
            match model.scaled_h_moment(x * s, &cfg_inner) {
                Ok(ExtendedMass::Finite(m)) => outer * m / (s * s * s),
                Ok(ExtendedMass::Infinite) => f64::INFINITY,
                Err(_) => f64::NAN,
            }
        };
        ProperDensity::from_unnormalized(f, Domain1D::positive(), cfg)
    }

    /// Posterior under `h_M = I(0 < φ ≤ M)/M`, in closed form:
    /// `∝ θπ(θ)/(θ+z)³ · [2 − e^{−A}(A²+2A+2)]` with `A = xM(θ+z)`.
    pub fn truncated_posterior(&self, x: f64, z: f64, m: f64, cfg: &QuadratureConfig) -> Result<ProperDensity> {
        require_positive("x", x)?;
        require_positive("z", z)?;
        require_positive("M", m)?;
        let prior = self.prior_theta.clone();
        ProperDensity::from_unnormalized(
            move |t| {
                let s = t + z;
                t * prior.density(&[t]) / (s * s * s) * truncation_bracket(x * m * s)
            },
            Domain1D::positive(),
            cfg,
        )
    }

    /// Compares the posterior of θ through the full data with the pretended
    /// `f(θ|z)`, and checks whether conditioning on `z` alone is allowed.
    ///
    /// When `z` is σ-finite (proper `h`) the cross route conditions the joint
    /// of `(z, θ)` on `z`; otherwise it is the posterior given `(x, z)`.
    pub fn detect_paradox(&self, x: f64, z: f64, cfg: &MeasureConfig) -> Result<ParadoxReport> {
        require_positive("x", x)?;
        require_positive("z", z)?;
        let zt = self.zt_kernel(&cfg.quad)?;
        let z_sigma_finite = measures::is_sigma_finite(&zt, &[0], cfg)?;
        let cross_density = if z_sigma_finite {
            measures::condition(&zt, &[0], &[z], cfg)?
        } else {
            self.posterior_general_h(x, z, &cfg.quad)?
        };
        let naive_density = self.naive_fz(z, &cfg.quad)?;
        let sup = sup_distance(|t| cross_density.eval(t), |t| naive_density.eval(t), &theta_grid());
        let shapes_agree = sup <= PARADOX_THRESHOLD;
        let verdict = if !z_sigma_finite {
            Verdict::ConditioningForbidden
        } else if shapes_agree {
            Verdict::Consistent
        } else {
            Verdict::Paradox
        };
        Ok(ParadoxReport { cross_density, naive_density, sup_distance: sup, shapes_agree, z_sigma_finite, verdict })
    }
}

/// `π(θ) = 1/θ` on `(0, ∞)`; improper, used only with `h(φ) = 1/φ`.
pub fn reciprocal_prior() -> Kernel {
    Kernel::reciprocal().with_label("1/theta")
}

/// `h(φ) = 1/φ`.
pub fn reciprocal_h() -> Kernel {
    Kernel::reciprocal().with_label("1/phi")
}

/// `h_M(φ) = I(0 < φ ≤ M)/M`.
pub fn truncated_h(m: f64) -> Result<Kernel> {
    Kernel::truncated_uniform(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qc() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn joint_init_values() {
        let m = StoneModel::exponential_flat();
        assert!((m.joint_init(1.0, 1.0, 1.0, 1.0).unwrap() - (-3.0f64).exp()).abs() < 1e-15);
        let flat = StoneModel::new(Kernel::flat(Domain1D::positive()), Kernel::flat(Domain1D::positive())).unwrap();
        assert!((flat.joint_init(1.0, 1.0, 1.0, 1.0).unwrap() - (-2.0f64).exp()).abs() < 1e-15);
        assert!(matches!(m.joint_init(0.0, 1.0, 1.0, 1.0), Err(Error::DomainError(_))));
        assert!(matches!(m.joint_init(1.0, 1.0, -1.0, 1.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn bracket_limits_and_series_branch() {
        assert_eq!(truncation_bracket(0.0), 0.0);
        assert!((truncation_bracket(50.0) - 2.0).abs() < 1e-15);
        for a in [0.3f64, 0.6, 0.999] {
            let direct = 2.0 - (-a).exp() * (a * a + 2.0 * a + 2.0);
            assert!((truncation_bracket(a) / direct - 1.0).abs() < 1e-12);
        }
        // A³/3 − A⁴/4 + A⁵/10 for small A.
        let a = 1e-3f64;
        let taylor = a.powi(3) / 3.0 - a.powi(4) / 4.0 + a.powi(5) / 10.0;
        assert!((truncation_bracket(a) / taylor - 1.0).abs() < 1e-9);
        // Continuity across the branch switch.
        assert!((truncation_bracket(1.0 - 1e-12) - truncation_bracket(1.0)).abs() < 1e-11);
    }

    #[test]
    fn xzt_kernel_flat_h_matches_closed_form() {
        let m = StoneModel::exponential_flat();
        let k = m.xzt_kernel(&qc());
        for &(x, z, t) in &[(1.0f64, 1.0f64, 1.0f64), (0.3, 2.0, 0.5), (4.0, 0.1, 3.0)] {
            let closed = 2.0 * t * (-t).exp() / (x * x * (t + z).powi(3));
            assert!((k.density(&[x, z, t]) / closed - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn freq_posterior_is_z_over_theta_plus_z_squared() {
        let m = StoneModel::new(reciprocal_prior(), reciprocal_h()).unwrap();
        let d = m.naive_fz(1.0, &qc()).unwrap();
        assert!((d.eval(1.0) - 0.25).abs() < 1e-9);
        let d = m.posterior_general_h(0.7, 2.0, &qc()).unwrap();
        for t in [0.1, 1.0, 5.0] {
            assert!((d.eval(t) - 2.0 / ((t + 2.0) * (t + 2.0))).abs() < 1e-8);
        }
    }
}
