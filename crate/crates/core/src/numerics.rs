//! Adaptive Gauss–Kronrod integration of nonnegative densities with explicit
//! divergence detection.
//!
//! Every integral is reduced to a finite interval. Half lines are mapped onto
//! `(0, 1)` with `u = (t - a) / (1 + t - a)` and the real line is split at the
//! origin into two half lines. The finite interval is then covered by an
//! interior block plus geometric "shells" that halve their distance to each
//! endpoint. On the upper end of a mapped half line, shell `k` covers the
//! radii `t ≈ 4·2^k .. 8·2^k`, so consecutive shells are consecutive
//! doublings of the truncation radius.
//!
//! An integral is reported as [`ExtendedMass::Infinite`] when
//!
//! * a node evaluates to `+∞`,
//! * the running estimate exceeds `divergence_threshold`, or
//! * the shell contributions at some end stop decaying: consecutive
//!   shell-to-shell ratios past the fourth shell stay in `[0.95, 2.5]` and
//!   agree within 25% while each shell adds more than `rel_tol × estimate`,
//!   or the shell budget runs out with the last ratio still at least `0.95`.
//!   Two such ratios suffice at the image of an infinite end; a finite
//!   endpoint needs twelve.
//!   Faster growth is left to the threshold test, which it always reaches.
//!
//! A density that stays flat out to a scale of a few hundred before decaying
//! is indistinguishable from a divergent one by this test. At a finite
//! endpoint the same holds for a `1/t`-like shape cut off within about
//! `10⁻⁴` of the endpoint, relative to the interval width.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Add;

use crate::error::{Error, Result};

/// A nonnegative mass that may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedMass {
    Finite(f64),
    Infinite,
}

impl ExtendedMass {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedMass::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtendedMass::Infinite)
    }

    /// The finite value, or `None` for `+∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedMass::Finite(v) => Some(v),
            ExtendedMass::Infinite => None,
        }
    }

    /// Lossless view as an `f64` (`+∞` maps to `f64::INFINITY`).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedMass::Finite(v) => v,
            ExtendedMass::Infinite => f64::INFINITY,
        }
    }

    /// Multiplies by a nonnegative constant using the measure-theoretic
    /// convention `0 · ∞ = 0`.
    pub fn scale(self, c: f64) -> ExtendedMass {
        match self {
            ExtendedMass::Finite(v) => ExtendedMass::Finite(v * c),
            ExtendedMass::Infinite if c == 0.0 => ExtendedMass::Finite(0.0),
            ExtendedMass::Infinite => ExtendedMass::Infinite,
        }
    }
}

impl From<f64> for ExtendedMass {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedMass::Infinite
        } else {
            ExtendedMass::Finite(v)
        }
    }
}

impl Add for ExtendedMass {
    type Output = ExtendedMass;

    fn add(self, rhs: ExtendedMass) -> ExtendedMass {
        match (self, rhs) {
            (ExtendedMass::Finite(a), ExtendedMass::Finite(b)) => ExtendedMass::Finite(a + b),
            _ => ExtendedMass::Infinite,
        }
    }
}

impl PartialOrd for ExtendedMass {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtendedMass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedMass::Finite(v) => write!(f, "{v}"),
            ExtendedMass::Infinite => write!(f, "inf"),
        }
    }
}

/// A one-dimensional integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain1D {
    /// `[lo, hi]` with `lo < hi`, both finite.
    Bounded {
        lo: f64,
        hi: f64,
    },
    /// `(lo, ∞)`.
    HalfLine {
        lo: f64,
    },
    RealLine,
}

impl Domain1D {
    pub fn bounded(lo: f64, hi: f64) -> Result<Self> {
        let d = Domain1D::Bounded { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn half_line(lo: f64) -> Result<Self> {
        let d = Domain1D::HalfLine { lo };
        d.validate()?;
        Ok(d)
    }

    /// `(0, ∞)`.
    pub const fn positive() -> Self {
        Domain1D::HalfLine { lo: 0.0 }
    }

    pub const fn real_line() -> Self {
        Domain1D::RealLine
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain1D::Bounded { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::InvalidDomain(format!("bounded endpoints must be finite, got [{lo}, {hi}]")));
                }
                if lo >= hi {
                    return Err(Error::InvalidDomain(format!("degenerate interval [{lo}, {hi}]")));
                }
                Ok(())
            }
            Domain1D::HalfLine { lo } if !lo.is_finite() => {
                Err(Error::InvalidDomain(format!("half-line origin must be finite, got {lo}")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        match *self {
            Domain1D::Bounded { lo, hi } => t >= lo && t <= hi,
            Domain1D::HalfLine { lo } => t >= lo,
            Domain1D::RealLine => !t.is_nan(),
        }
    }

    /// Maps `u ∈ (0, 1)` onto the domain. Half lines use the inverse of
    /// `u = s / (1 + s)`; the real line uses its odd extension.
    pub fn from_unit(&self, u: f64) -> f64 {
        match *self {
            Domain1D::Bounded { lo, hi } => lo + u * (hi - lo),
            Domain1D::HalfLine { lo } => lo + u / (1.0 - u),
            Domain1D::RealLine => {
                let s = 2.0 * u - 1.0;
                s / (1.0 - s.abs())
            }
        }
    }
}

impl fmt::Display for Domain1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain1D::Bounded { lo, hi } => write!(f, "[{lo}, {hi}]"),
            Domain1D::HalfLine { lo } => write!(f, "({lo}, inf)"),
            Domain1D::RealLine => write!(f, "(-inf, inf)"),
        }
    }
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisections allowed after the initial partition.
    pub max_subdivisions: usize,
    pub divergence_threshold: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, max_subdivisions: 2000, divergence_threshold: 1e12 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive =
            self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_subdivisions > 0 && self.divergence_threshold > 0.0;
        if !positive {
            return Err(Error::InvalidConfig("quadrature settings must be positive".into()));
        }
        if self.rel_tol >= 1.0 {
            return Err(Error::InvalidConfig("rel_tol must be below 1".into()));
        }
        Ok(())
    }
}

/// Integrates a nonnegative density over a domain.
pub fn integrate<F>(f: F, domain: &Domain1D, cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    F: Fn(f64) -> f64,
{
    integrate_fallible(|t| Ok(f(t)), domain, cfg)
}

/// As [`integrate`], for integrands that can themselves fail (e.g. inner
/// integrals of an iterated integral).
pub fn integrate_fallible<F>(f: F, domain: &Domain1D, cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    F: Fn(f64) -> Result<f64>,
{
    domain.validate()?;
    cfg.validate()?;
    match *domain {
        Domain1D::Bounded { lo, hi } => run_engine(&|t| checked(&f, t), lo, hi, [FINITE_RUN; 2], cfg),
        Domain1D::HalfLine { lo } => run_engine(&|u| mapped(&f, lo, 1.0, u), 0.0, 1.0, [FINITE_RUN, RUN], cfg),
        Domain1D::RealLine => {
            let right = run_engine(&|u| mapped(&f, 0.0, 1.0, u), 0.0, 1.0, [FINITE_RUN, RUN], cfg)?;
            if right.is_infinite() {
                return Ok(ExtendedMass::Infinite);
            }
            let left = run_engine(&|u| mapped(&f, 0.0, -1.0, u), 0.0, 1.0, [FINITE_RUN, RUN], cfg)?;
            Ok(right + left)
        }
    }
}

/// Iterated integral of `f(x, y)`: inner over `x`, outer over `y`.
pub fn integrate2d<F>(f: F, dx: &Domain1D, dy: &Domain1D, cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    F: Fn(f64, f64) -> f64,
{
    integrate_nd(|p: &[f64]| Ok(f(p[0], p[1])), &[*dx, *dy], cfg)
}

/// Iterated integral over a product domain. Axis 0 is innermost; an infinite
/// inner integral at any outer node makes the whole integral infinite.
pub fn integrate_nd<F>(f: F, domains: &[Domain1D], cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if domains.is_empty() {
        return Err(Error::InvalidDomain("no axes to integrate".into()));
    }
    nested(&f, domains, &[], cfg)
}

fn nested<F>(f: &F, domains: &[Domain1D], outer: &[f64], cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let last = domains.len() - 1;
    if last == 0 {
        return integrate_fallible(
            |t| {
                let mut p = Vec::with_capacity(1 + outer.len());
                p.push(t);
                p.extend_from_slice(outer);
                f(&p)
            },
            &domains[0],
            cfg,
        );
    }
    integrate_fallible(
        |t| {
            let mut o = Vec::with_capacity(1 + outer.len());
            o.push(t);
            o.extend_from_slice(outer);
            Ok(nested(f, &domains[..last], &o, cfg)?.to_f64())
        },
        &domains[last],
        cfg,
    )
}

/// `n` points `lo + (hi - lo)·i/n`, `i = 1..=n`: the half-open grid `(lo, hi]`.
pub fn open_closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect()
}

/// `n ≥ 2` evenly spaced points including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `max_i |f(x_i) - g(x_i)|` over a grid.
pub fn sup_distance<F, G>(f: F, g: G, grid: &[f64]) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    grid.iter().map(|&x| (f(x) - g(x)).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// engine

/// Shells below this index never trigger the non-decay test.
const MIN_TEST_SHELL: usize = 4;
/// Shells `0..=DENSE_SHELLS` start with [`DENSE_PANELS`] panels each.
const DENSE_SHELLS: usize = MIN_TEST_SHELL + 2;
const DENSE_PANELS: usize = 8;
const MAX_SHELLS: usize = 40;
const RATIO_LOW: f64 = 0.95;
const RATIO_HIGH: f64 = 2.5;
/// Consecutive non-decaying shell ratios needed to declare divergence at the
/// image of an infinite end.
const RUN: usize = 2;
/// The same at a finite endpoint, where nothing forces an early decision.
const FINITE_RUN: usize = 12;

enum Stop {
    Infinite,
    Fail(Error),
}

impl From<Error> for Stop {
    fn from(e: Error) -> Self {
        Stop::Fail(e)
    }
}

fn checked<F>(f: &F, t: f64) -> std::result::Result<f64, Stop>
where
    F: Fn(f64) -> Result<f64>,
{
    let v = f(t)?;
    if v.is_nan() {
        Err(Stop::Fail(Error::NotANumber { at: t }))
    } else if v < 0.0 {
        Err(Stop::Fail(Error::NegativeDensity { at: t, value: v }))
    } else if v == f64::INFINITY {
        Err(Stop::Infinite)
    } else {
        Ok(v)
    }
}

/// `f(lo + dir·u/(1-u)) / (1-u)²` on `u ∈ (0, 1)`.
fn mapped<F>(f: &F, lo: f64, dir: f64, u: f64) -> std::result::Result<f64, Stop>
where
    F: Fn(f64) -> Result<f64>,
{
    let gap = 1.0 - u;
    let v = checked(f, lo + dir * u / gap)?;
    if v == 0.0 {
        return Ok(0.0);
    }
    let g = v / (gap * gap);
    if g == f64::INFINITY {
        Err(Stop::Infinite)
    } else {
        Ok(g)
    }
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and QUADPACK-style error on `[a, b]`.
fn gk15<G>(g: &G, a: f64, b: f64) -> std::result::Result<(f64, f64), Stop>
where
    G: Fn(f64) -> std::result::Result<f64, Stop>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = g(center - x)?;
        let f2 = g(center + x)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let est = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((est, err))
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Low,
    High,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    est: f64,
    err: f64,
    /// `None` for the interior block, otherwise the owning shell.
    shell: Option<(Side, usize)>,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

struct EndState {
    side: Side,
    run: usize,
    shells: usize,
    done: bool,
    capped: bool,
}

fn run_engine<G>(g: &G, lo: f64, hi: f64, runs: [usize; 2], cfg: &QuadratureConfig) -> Result<ExtendedMass>
where
    G: Fn(f64) -> std::result::Result<f64, Stop>,
{
    match engine(g, lo, hi, runs, cfg) {
        Ok(v) => Ok(ExtendedMass::Finite(v)),
        Err(Stop::Infinite) => Ok(ExtendedMass::Infinite),
        Err(Stop::Fail(e)) => Err(e),
    }
}

fn engine<G>(g: &G, lo: f64, hi: f64, runs: [usize; 2], cfg: &QuadratureConfig) -> std::result::Result<f64, Stop>
where
    G: Fn(f64) -> std::result::Result<f64, Stop>,
{
    let width = hi - lo;
    let eps0 = 0.25 * width;
    let eps = |k: usize| eps0 * 0.5f64.powi(k as i32);
    // Smallest endpoint offset that still resolves to distinct panel nodes.
    let min_gap = 1e3 * f64::EPSILON * lo.abs().max(hi.abs()).max(width);

    let mut heap: BinaryHeap<Panel> = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Panel>,
                a: f64,
                b: f64,
                pieces: usize,
                shell: Option<(Side, usize)>|
     -> std::result::Result<(), Stop> {
        let step = (b - a) / pieces as f64;
        for i in 0..pieces {
            let pa = a + step * i as f64;
            let pb = if i + 1 == pieces { b } else { a + step * (i + 1) as f64 };
            let (est, err) = gk15(g, pa, pb)?;
            heap.push(Panel { a: pa, b: pb, est, err, shell });
        }
        Ok(())
    };
    let add_shell = |heap: &mut BinaryHeap<Panel>, side: Side, k: usize| {
        let pieces = if k <= DENSE_SHELLS { DENSE_PANELS } else { 1 };
        let (a, b) = match side {
            Side::Low => (lo + eps(k + 1), lo + eps(k)),
            Side::High => (hi - eps(k), hi - eps(k + 1)),
        };
        push(heap, a, b, pieces, Some((side, k)))
    };

    push(&mut heap, lo + eps0, hi - eps0, DENSE_PANELS, None)?;
    let mut ends = [
        EndState { side: Side::Low, run: runs[0], shells: 0, done: false, capped: false },
        EndState { side: Side::High, run: runs[1], shells: 0, done: false, capped: false },
    ];
    for end in ends.iter_mut() {
        for k in 0..=DENSE_SHELLS {
            add_shell(&mut heap, end.side, k)?;
        }
        end.shells = DENSE_SHELLS + 1;
    }

    // Extend shells outward until each end has settled, diverged or run out
    // of resolvable offsets.
    loop {
        let total = total_estimate(&heap);
        if total > cfg.divergence_threshold {
            return Err(Stop::Infinite);
        }
        let mut extended = false;
        for end in ends.iter_mut().filter(|e| !e.done) {
            let sums = shell_sums(&heap, end.side, end.shells);
            if non_decaying(&sums, total, end.run, cfg) {
                return Err(Stop::Infinite);
            }
            if settled(&sums, total, cfg) {
                end.done = true;
                // Close the remaining gap to the endpoint with one panel.
                let (a, b) = match end.side {
                    Side::Low => (lo, lo + eps(end.shells)),
                    Side::High => (hi - eps(end.shells), hi),
                };
                push(&mut heap, a, b, 1, Some((end.side, end.shells)))?;
                continue;
            }
            if end.shells >= MAX_SHELLS || eps(end.shells + 1) < min_gap {
                end.done = true;
                end.capped = true;
                continue;
            }
            add_shell(&mut heap, end.side, end.shells)?;
            end.shells += 1;
            extended = true;
        }
        if !extended {
            break;
        }
    }

    // Global adaptive refinement.
    let mut total = total_estimate(&heap);
    let mut total_err: f64 = heap.iter().map(|p| p.err).sum();
    let mut bisections = 0;
    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) && bisections < cfg.max_subdivisions {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (e1, r1) = gk15(g, worst.a, mid)?;
        let (e2, r2) = gk15(g, mid, worst.b)?;
        heap.push(Panel { a: worst.a, b: mid, est: e1, err: r1, shell: worst.shell });
        heap.push(Panel { a: mid, b: worst.b, est: e2, err: r2, shell: worst.shell });
        total += e1 + e2 - worst.est;
        total_err += r1 + r2 - worst.err;
        bisections += 1;
        if total > cfg.divergence_threshold {
            return Err(Stop::Infinite);
        }
    }

    let mut total = total_estimate(&heap);
    if total > cfg.divergence_threshold {
        return Err(Stop::Infinite);
    }
    let mut remainder = 0.0;
    for end in &ends {
        let sums = shell_sums(&heap, end.side, end.shells);
        if non_decaying(&sums, total, end.run, cfg) {
            return Err(Stop::Infinite);
        }
        if end.capped {
            let n = sums.len();
            let (s1, s2) = (sums[n - 2], sums[n - 1]);
            if s2 > negligible(total, cfg) {
                let r = if s1 > 0.0 { s2 / s1 } else { f64::INFINITY };
                if r < RATIO_LOW {
                    remainder += s2 * r / (1.0 - r);
                } else if s2 > cfg.rel_tol * total.abs() {
                    return Err(Stop::Infinite);
                }
            }
        }
    }
    total += remainder;
    if total > cfg.divergence_threshold {
        return Err(Stop::Infinite);
    }
    Ok(total)
}

fn total_estimate(heap: &BinaryHeap<Panel>) -> f64 {
    heap.iter().map(|p| p.est).sum()
}

fn shell_sums(heap: &BinaryHeap<Panel>, side: Side, count: usize) -> Vec<f64> {
    let mut sums = vec![0.0; count];
    for p in heap.iter() {
        if let Some((s, k)) = p.shell {
            if s == side && k < count {
                sums[k] += p.est;
            }
        }
    }
    sums
}

fn negligible(total: f64, cfg: &QuadratureConfig) -> f64 {
    0.01 * cfg.rel_tol * total.abs().max(cfg.abs_tol)
}

fn settled(sums: &[f64], total: f64, cfg: &QuadratureConfig) -> bool {
    let n = sums.len();
    let tiny = negligible(total, cfg);
    n > DENSE_SHELLS && sums[n - 1] <= tiny && sums[n - 2] <= tiny
}

fn non_decaying(sums: &[f64], total: f64, run: usize, cfg: &QuadratureConfig) -> bool {
    let significant = cfg.rel_tol * total.abs();
    let in_band = |r: f64| (RATIO_LOW..=RATIO_HIGH).contains(&r);
    // Shell k closes a run when the ratios S_j/S_{j-1}, j = k-run+1..=k, all
    // lie in the band and each stays within 25% of the previous one.
    (MIN_TEST_SHELL + run..sums.len()).any(|k| {
        let window = &sums[k - run..=k];
        if window[0] <= 0.0 || window[1..].iter().any(|&s| s <= significant) {
            return false;
        }
        let ratios: Vec<f64> = window.windows(2).map(|w| w[1] / w[0]).collect();
        ratios.iter().all(|&r| in_band(r)) && ratios.windows(2).all(|r| r[1] >= 0.8 * r[0] && r[1] <= 1.25 * r[0])
    })
}
