use std::path::Path;

use clap::{Args, ValueEnum};
use improper::gibbsdemo::{
    drift_diagnostic, embedded_delta_test, run_gibbs, GibbsConfig, GibbsPrior, DEFAULT_DRIFT_WINDOW,
};
use improper::igmrf::{build_q, ConstrainedSampler};
use improper::measures::Kernel;
use improper::numerics::QuadratureConfig;
use improper::qvague::{lindley_posterior_improper, lindley_posterior_proper, run_demo, DemoCase, QVagueConfig};
use improper::stone::{self, StoneModel};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::output::{num, sidecar, write_csv, write_json};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StonePrior {
    /// π(θ) = e^{−θ}
    Exp,
    /// π(θ) = 1/θ
    Reciprocal,
}

/// Stone's example: truncated-h posteriors, the cross posterior and the
/// naive f(θ|z) on the grid (0, 10] with 2000 points.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct StoneFigureArgs {
    #[arg(long, default_value_t = 1.0)]
    pub z: f64,
    /// Truncation point of h_M = I(0 < φ ≤ M)/M.
    #[arg(long = "M", default_value_t = 500.0)]
    #[serde(rename = "M")]
    pub m: f64,
    /// Comma-separated x values, one column each.
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.001])]
    pub x: Vec<f64>,
    #[arg(long, value_enum, default_value_t = StonePrior::Exp)]
    pub prior: StonePrior,
    /// Output CSV [default: stone-figure.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

pub fn stone_figure(a: &StoneFigureArgs, out: &Path) -> Result<Vec<String>, CliError> {
    if !(a.z > 0.0 && a.m > 0.0) || a.x.is_empty() || a.x.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return Err(CliError::Usage("z, M and every x must be positive".into()));
    }
    let cfg = QuadratureConfig::default();
    let model = match a.prior {
        StonePrior::Exp => StoneModel::exponential_flat(),
        StonePrior::Reciprocal => {
            StoneModel::new(stone::reciprocal_prior(), Kernel::flat(improper::Domain1D::positive()))?
        }
    };
    let grid = stone::theta_grid();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &x in &a.x {
        let d = model.truncated_posterior(x, a.z, a.m, &cfg)?;
        columns.push(grid.iter().map(|&t| d.eval(t)).collect());
    }
    let cross = model.posterior_given_xz(a.z, &cfg)?;
    columns.push(grid.iter().map(|&t| cross.eval(t)).collect());
    let dd = model.naive_fz(a.z, &cfg)?;
    columns.push(grid.iter().map(|&t| dd.eval(t)).collect());

    // Unit mass on the grid: right-endpoint sums with spacing 10/2000.
    let step = grid[1] - grid[0];
    for col in columns.iter_mut() {
        let mass: f64 = col.iter().sum::<f64>() * step;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(improper::Error::ZeroSlice.into());
        }
        col.iter_mut().for_each(|v| *v /= mass);
    }

    let mut header = vec!["theta".to_string()];
    header.extend((1..=a.x.len()).map(|i| format!("dens_xM_x{i}")));
    header.push("dens_cross".into());
    header.push("dens_DD".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = grid.iter().enumerate().map(|(i, &t)| {
        let mut row = vec![num(t)];
        row.extend(columns.iter().map(|c| num(c[i])));
        row
    });
    write_csv(out, &header, rows)?;

    let n = columns.len();
    let cross_col = &columns[n - 2];
    let sup = |c: &[f64]| c.iter().zip(cross_col).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let mut lines: Vec<String> =
        a.x.iter().enumerate().map(|(i, x)| format!("sup |xM(x = {x}) - cross| = {}", num(sup(&columns[i])))).collect();
    lines.push(format!("sup |DD - cross| = {}", num(sup(&columns[n - 1]))));
    Ok(lines)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GibbsPriorArg {
    Flat,
    Gaussian,
}

/// Gibbs sampler for y ~ N(θ1 + θ2, 1).
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct GibbsArgs {
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    /// Number of sweeps (at least 4).
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = GibbsPriorArg::Flat)]
    pub prior: GibbsPriorArg,
    /// Prior variance of θ1 (gaussian prior only).
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    /// Prior variance of θ2 (gaussian prior only).
    #[arg(long, default_value_t = 1.0)]
    pub kappa2: f64,
    /// Output trace CSV [default: gibbs.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

pub fn gibbs(a: &GibbsArgs, out: &Path) -> Result<Vec<String>, CliError> {
    if a.iters < 4 {
        return Err(CliError::Usage(format!("--iters {} must be at least 4", a.iters)));
    }
    let prior = match a.prior {
        GibbsPriorArg::Flat => GibbsPrior::Flat,
        GibbsPriorArg::Gaussian => GibbsPrior::Gaussian { tau2: a.tau2, kappa2: a.kappa2 },
    };
    let cfg = GibbsConfig { y: a.y, n_iter: a.iters, seed: a.seed, prior, ..GibbsConfig::default() };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let trace = run_gibbs(&cfg)?;
    let rows = (0..trace.len())
        .map(|t| vec![(t + 1).to_string(), num(trace.theta1[t]), num(trace.theta2[t]), num(trace.delta[t])]);
    write_csv(out, &["t", "theta1", "theta2", "delta"], rows)?;

    let window = DEFAULT_DRIFT_WINDOW.min(trace.len() / 4);
    let drift = drift_diagnostic(&trace, window)?;
    let ks = embedded_delta_test(&trace)?;
    write_json(
        &sidecar(out, "diagnostics.json"),
        &json!({
            "drift_window": drift.window,
            "drift_slope": drift.slope,
            "drift_intercept": drift.intercept,
            "improper_posterior_suspect": drift.improper_posterior_suspect,
            "delta_ks_statistic": ks.statistic,
            "delta_ks_p_value": ks.p_value,
            "delta_ks_passes": ks.passes,
        }),
    )?;
    Ok(vec![
        format!("drift slope = {} (suspect: {})", num(drift.slope), drift.improper_posterior_suspect),
        format!("delta KS D = {}, p = {}", num(ks.statistic), num(ks.p_value)),
    ])
}

/// Posterior mass of the atom at 0 under ½δ₀ + ½N(0, n²), and its limit
/// under ½δ₀ + Lebesgue, for x ~ N(θ, 1).
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct LindleyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0, 3.0])]
    pub x: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0, 1000.0, 10000.0])]
    pub n: Vec<f64>,
    /// Output CSV [default: lindley.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

pub fn lindley(a: &LindleyArgs, out: &Path) -> Result<Vec<String>, CliError> {
    if a.x.iter().any(|x| !x.is_finite()) || a.n.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(CliError::Usage("x must be finite and n positive".into()));
    }
    let mut rows = Vec::new();
    for &x in &a.x {
        let limit = lindley_posterior_improper(x);
        for &n in &a.n {
            rows.push(vec![num(x), num(n), num(lindley_posterior_proper(x, n)?), num(limit)]);
        }
    }
    write_csv(out, &["x", "n", "posterior_proper", "posterior_improper_limit"], rows)?;
    Ok(a.x.iter().map(|&x| format!("x = {x}: improper limit {}", num(lindley_posterior_improper(x)))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum QVagueCase {
    #[value(name = "hM")]
    #[serde(rename = "hM")]
    HM,
    #[value(name = "gauss_flat")]
    #[serde(rename = "gauss_flat")]
    GaussFlat,
    #[value(name = "lindley_prior")]
    #[serde(rename = "lindley_prior")]
    LindleyPrior,
}

/// q-vague convergence demos on a battery of bump test functions.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct QVagueArgs {
    #[arg(long, value_enum)]
    pub case: QVagueCase,
    /// Output CSV [default: qvague.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

pub fn qvague(a: &QVagueArgs, out: &Path) -> Result<Vec<String>, CliError> {
    let case = match a.case {
        QVagueCase::HM => DemoCase::HM,
        QVagueCase::GaussFlat => DemoCase::GaussFlat,
        QVagueCase::LindleyPrior => DemoCase::LindleyPrior,
    };
    let outcomes = run_demo(case, &QVagueConfig::default())?;
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut lines = Vec::new();
    for o in &outcomes {
        let v = &o.verdict;
        for i in 0..v.indices.len() {
            rows.push(vec![
                o.sequence.clone(),
                v.limit_label.clone(),
                num(v.indices[i]),
                num(v.scale_sequence[i]),
                num(v.errors[i]),
            ]);
        }
        verdicts.push(json!({
            "sequence": o.sequence,
            "limit": v.limit_label,
            "converges": v.converges,
            "expected": o.expected,
            "worst_error": v.worst_error,
        }));
        lines.push(format!(
            "verdict: {} -> {}: converges = {} (worst_error {})",
            o.sequence,
            v.limit_label,
            v.converges,
            num(v.worst_error)
        ));
    }
    write_csv(out, &["sequence", "limit", "index", "scale", "worst_error"], rows)?;
    write_json(&sidecar(out, "verdict.json"), &verdicts)?;
    Ok(lines)
}

/// Constrained RW1 samples with a fixed mean, in long format.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(allow_negative_numbers = true)]
#[serde(deny_unknown_fields)]
pub struct IgmrfArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV [default: igmrf.csv].
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<std::path::PathBuf>,
}

pub fn igmrf(a: &IgmrfArgs, out: &Path) -> Result<Vec<String>, CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let q = build_q(a.n)?;
    let mut sampler = ConstrainedSampler::new(a.n, a.kappa, a.mu, a.seed)?;
    let mut rows = Vec::with_capacity(a.n * a.samples);
    let mut max_mean_dev: f64 = 0.0;
    let mut qf_sum = 0.0;
    for s in 0..a.samples {
        let x = sampler.draw().x;
        let mean = x.iter().sum::<f64>() / a.n as f64;
        max_mean_dev = max_mean_dev.max((mean - a.mu).abs());
        qf_sum += q.quad_form(&x)?;
        rows.extend(x.iter().enumerate().map(|(i, v)| vec![s.to_string(), (i + 1).to_string(), num(*v)]));
    }
    write_csv(out, &["sample_id", "i", "x_i"], rows)?;
    let mean_qf = qf_sum / a.samples as f64;
    let expected = (a.n as f64 - 1.0) / a.kappa;
    write_json(
        &sidecar(out, "summary.json"),
        &json!({
            "samples": a.samples,
            "max_abs_mean_minus_mu": max_mean_dev,
            "mean_quadratic_form": mean_qf,
            "expected_quadratic_form": expected,
        }),
    )?;
    Ok(vec![format!("mean quadratic form = {} (expected {})", num(mean_qf), num(expected))])
}
