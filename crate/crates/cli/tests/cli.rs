use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn improper(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_improper")).current_dir(dir).args(args).output().expect("spawn")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = improper(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap();
        assert!(!text.contains('\r'));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().unwrap().iter().map(str::to_string).collect();
        let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> Vec<f64> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].parse().unwrap()).collect()
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn stone_figure_defaults() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["stone-figure", "--out", "fig.csv"]);
    let t = Table::read(&dir.path().join("fig.csv"));
    assert_eq!(t.header, ["theta", "dens_xM_x1", "dens_xM_x2", "dens_cross", "dens_DD"]);
    assert_eq!(t.rows.len(), 2000);
    let theta = t.col("theta");
    assert!((theta[0] - 0.005).abs() < 1e-15 && theta[1999] == 10.0);
    let step = 10.0 / 2000.0;
    for name in &t.header[1..] {
        let mass: f64 = t.col(name).iter().sum::<f64>() * step;
        assert!((mass - 1.0).abs() < 1e-12, "{name}: {mass}");
    }
    let cross = t.col("dens_cross");
    assert!(sup(&t.col("dens_xM_x1"), &cross) < 1e-3);
    assert!(sup(&t.col("dens_xM_x2"), &cross) > 1e-2);
    // θe^{−θ}/(1+θ)² normalized on the same grid.
    let raw: Vec<f64> = theta.iter().map(|&s| s * (-s).exp() / ((1.0 + s) * (1.0 + s))).collect();
    let mass: f64 = raw.iter().sum::<f64>() * step;
    let oracle: Vec<f64> = raw.iter().map(|v| v / mass).collect();
    assert!(sup(&t.col("dens_DD"), &oracle) < 1e-12);
}

#[test]
fn gibbs_diagnostics() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gibbs", "--seed", "7", "--out", "flat.csv"]);
    let t = Table::read(&dir.path().join("flat.csv"));
    assert_eq!(t.header, ["t", "theta1", "theta2", "delta"]);
    assert_eq!(t.rows.len(), 10_000);
    let d = json(dir.path().join("flat.csv.diagnostics.json"));
    assert!(d["delta_ks_p_value"].as_f64().unwrap() > 0.01);
    assert_eq!(d["improper_posterior_suspect"], true);

    ok(dir.path(), &["gibbs", "--seed", "7", "--prior", "gaussian", "--tau2", "1", "--kappa2", "1", "--out", "g.csv"]);
    let d = json(dir.path().join("g.csv.diagnostics.json"));
    assert_eq!(d["improper_posterior_suspect"], false);
}

#[test]
fn lindley_table() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["lindley", "--x", "0,2", "--n", "1.7320508075688772,10000", "--out", "l.csv"]);
    let t = Table::read(&dir.path().join("l.csv"));
    assert_eq!(t.header, ["x", "n", "posterior_proper", "posterior_improper_limit"]);
    let (x, n, p, lim) = (t.col("x"), t.col("n"), t.col("posterior_proper"), t.col("posterior_improper_limit"));
    for i in 0..t.rows.len() {
        if x[i] == 0.0 {
            assert!((lim[i] - 0.2851).abs() < 1e-4);
            if n[i] < 2.0 {
                assert!((p[i] - 2.0 / 3.0).abs() < 1e-12);
            }
        }
        if x[i] == 2.0 && n[i] == 1e4 {
            assert!(p[i] > 0.999);
        }
        let first = (0..t.rows.len()).find(|&j| x[j] == x[i]).unwrap();
        assert_eq!(lim[i].to_bits(), lim[first].to_bits());
    }
}

#[test]
fn qvague_cases() {
    let dir = TempDir::new().unwrap();
    for (case, expected) in [("hM", vec![true]), ("gauss_flat", vec![true]), ("lindley_prior", vec![true, false])] {
        let out = format!("{case}.csv");
        let stdout = ok(dir.path(), &["qvague", "--case", case, "--out", &out]);
        assert_eq!(stdout.lines().filter(|l| l.starts_with("verdict:")).count(), expected.len());
        let v = json(dir.path().join(format!("{out}.verdict.json")));
        let got: Vec<bool> = v.as_array().unwrap().iter().map(|o| o["converges"].as_bool().unwrap()).collect();
        assert_eq!(got, expected, "{case}");
        let t = Table::read(&dir.path().join(&out));
        assert_eq!(t.header, ["sequence", "limit", "index", "scale", "worst_error"]);
        if case == "hM" {
            for (a, m) in t.col("scale").iter().zip(t.col("index")) {
                assert!((a / m - 1.0).abs() < 1e-9);
            }
        }
    }
    let o = improper(dir.path(), &["qvague", "--case", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn igmrf_samples() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["igmrf", "--n", "50", "--samples", "10000", "--mu", "1.5", "--seed", "4", "--out", "s.csv"]);
    let t = Table::read(&dir.path().join("s.csv"));
    assert_eq!(t.header, ["sample_id", "i", "x_i"]);
    assert_eq!(t.rows.len(), 500_000);
    let x = t.col("x_i");
    for s in x.chunks(50).take(200) {
        assert!((s.iter().sum::<f64>() / 50.0 - 1.5).abs() < 1e-12);
    }
    let qf: f64 = x.chunks(50).map(|s| s.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>()).sum::<f64>() / 1e4;
    assert!((qf / 49.0 - 1.0).abs() < 0.03, "{qf}");
    let summary = json(dir.path().join("s.csv.summary.json"));
    assert!((summary["mean_quadratic_form"].as_f64().unwrap() - qf).abs() < 1e-9 * qf);

    ok(dir.path(), &["igmrf", "--n", "2", "--samples", "5", "--mu", "-2", "--out", "pairs.csv"]);
    let x = Table::read(&dir.path().join("pairs.csv")).col("x_i");
    for p in x.chunks(2) {
        assert!((p[0] + p[1] + 4.0).abs() < 1e-12);
    }
    assert_eq!(improper(dir.path(), &["igmrf", "--n", "1"]).status.code(), Some(2));
}

#[test]
fn manifest_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let runs: [&[&str]; 5] = [
        &["stone-figure", "--x", "1,0.01,0.001", "--out", "a.csv"],
        &["gibbs", "--iters", "3000", "--seed", "11", "--y", "0.5", "--out", "b.csv"],
        &["lindley", "--out", "c.csv"],
        &["qvague", "--case", "gauss_flat", "--out", "d.csv"],
        &["igmrf", "--n", "20", "--samples", "30", "--seed", "5", "--out", "e.csv"],
    ];
    for args in runs {
        ok(dir.path(), args);
        let out = args[args.len() - 1];
        let manifest = format!("{out}.manifest.json");
        let rerun = format!("re_{out}");
        ok(dir.path(), &["--manifest", &manifest, "--out", &rerun]);
        let a = fs::read(dir.path().join(out)).unwrap();
        let b = fs::read(dir.path().join(&rerun)).unwrap();
        assert!(a == b, "{args:?}");
        // Same output path: the manifest itself is reproduced too.
        let before = fs::read(dir.path().join(&manifest)).unwrap();
        ok(dir.path(), &["--manifest", &manifest]);
        assert_eq!(before, fs::read(dir.path().join(&manifest)).unwrap());
        assert_eq!(a, fs::read(dir.path().join(out)).unwrap());
    }
    let m = json(dir.path().join("b.csv.manifest.json"));
    assert_eq!(m["subcommand"], "gibbs");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["parameters"]["iters"], 3000);
}

#[test]
fn floats_round_trip_through_csv() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gibbs", "--iters", "500", "--seed", "1", "--out", "g.csv"]);
    let t = Table::read(&dir.path().join("g.csv"));
    for row in &t.rows {
        for cell in &row[1..] {
            let v: f64 = cell.parse().unwrap();
            assert_eq!(&format!("{v:?}"), cell);
        }
    }
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(improper(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(improper(dir.path(), &["gibbs", "--iters", "2"]).status.code(), Some(2));
    assert_eq!(improper(dir.path(), &["gibbs", "--prior", "gaussian", "--tau2", "-1"]).status.code(), Some(2));
    assert_eq!(improper(dir.path(), &["stone-figure", "--z", "0"]).status.code(), Some(2));
    assert_eq!(improper(dir.path(), &["--manifest", "missing.json"]).status.code(), Some(1));
    fs::write(
        dir.path().join("bad.json"),
        "{\"subcommand\": \"nope\", \"parameters\": {}, \"output_path\": \"x.csv\", \"seed\": null}",
    )
    .unwrap();
    assert_eq!(improper(dir.path(), &["--manifest", "bad.json"]).status.code(), Some(2));
}
