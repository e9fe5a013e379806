//! End-to-end runs of the `rangecorr` binary and the report pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::NaiveDate;
use rangecorr::special::DEFAULT_STEP;
use rangecorr::{PhiTable, QuadratureSpec};
use rangecorr_cli::panel::align;
use rangecorr_cli::report::cmd_estimate;
use rangecorr_cli::synthetic::{simulate_panel, PanelSpec};
use tempfile::TempDir;

fn fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    (0..4).map(|k| dir.join(format!("asset{k}.csv"))).collect()
}

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rangecorr"))
        .args(args)
        .env("RANGECORR_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn run_ok(cache: &Path, args: &[&str]) -> String {
    let out = run(cache, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn with_inputs<'a>(cmd: &'a str, inputs: &'a [String]) -> Vec<&'a str> {
    let mut v = vec![cmd, "--input"];
    v.extend(inputs.iter().map(String::as_str));
    v
}

fn fixture_args() -> Vec<String> {
    fixtures().iter().map(|p| p.display().to_string()).collect()
}

/// `matrix,row,...` lines of an estimate CSV keyed by matrix name.
fn matrix(csv: &str, name: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| l.starts_with(&format!("{name},")))
        .map(|l| l.split(',').skip(2).map(|x| x.parse().unwrap()).collect())
        .collect()
}

/// For an asset paired with itself, the open-to-close mean is
/// `mean(S^2) / s^2 = (n - 1) / n + mean(S)^2 / s^2`, and the range-based value
/// is `phi^-1` of the ratio of two variance estimators. Both sit just below 1
/// with 1 inside their 95% intervals.
#[test]
fn identical_assets_estimate_near_one() {
    let tmp = TempDir::new().unwrap();
    let src = &fixtures()[0];
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::copy(src, &a).unwrap();
    fs::copy(src, &b).unwrap();
    let inputs = vec![a.display().to_string(), b.display().to_string()];
    let mut args = with_inputs("estimate", &inputs);
    args.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_str(&run_ok(tmp.path(), &args)).unwrap();
    let e = &json["pairs"][0]["estimate"];
    let get = |k: &str| e[k].as_f64().unwrap();

    let bars = rangecorr_cli::ingest::ingest_csv(src, &Default::default()).unwrap().bars;
    let s: Vec<f64> = bars.iter().map(|b| (b.close / b.open).ln()).collect();
    let n = s.len() as f64;
    let (m, sd) = (rangecorr::stats::mean(&s), rangecorr::stats::sample_sd(&s));
    let identity = (n - 1.0) / n + (m / sd).powi(2);
    assert!((get("rho0_mean") - identity).abs() < 1e-12, "{e}");

    for (est, ci) in [("rho0_mean", "ci95_rho0"), ("rho_rz", "ci95_rz")] {
        assert!(get(est) > 0.98 && get(est) <= 1.0, "{est}: {e}");
        assert_eq!(e[ci]["high"].as_f64().unwrap(), 1.0, "{ci}: {e}");
    }
    assert_eq!(json["rho0"][0][1], json["rho0"][1][0]);
}

#[test]
fn pipeline_matrices_are_symmetric_with_unit_diagonal() {
    let tmp = TempDir::new().unwrap();
    let inputs = fixture_args();
    let csv = run_ok(tmp.path(), &with_inputs("estimate", &inputs));
    assert!(csv.contains("# standardization:"));
    for name in ["rho0", "rho_rz", "variance_ratio_pct"] {
        let m = matrix(&csv, name);
        assert_eq!(m.len(), 4);
        for i in 0..4 {
            if name != "variance_ratio_pct" {
                assert_eq!(m[i][i], 1.0);
            }
            for j in 0..4 {
                assert_eq!(m[i][j], m[j][i], "{name}[{i}][{j}]");
                if name == "variance_ratio_pct" {
                    assert!(m[i][j] > 0.0 && m[i][j] < 100.0);
                }
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let inputs = fixture_args();
    for cmd in ["estimate", "report"] {
        let first = run_ok(tmp.path(), &with_inputs(cmd, &inputs));
        let second = run_ok(tmp.path(), &with_inputs(cmd, &inputs));
        assert_eq!(first, second, "{cmd}");
    }
    let mut json = with_inputs("estimate", &inputs);
    json.extend(["--format", "json"]);
    let a = run_ok(tmp.path(), &json);
    assert_eq!(a, run_ok(tmp.path(), &json));
    let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(parsed["pairs"].as_array().unwrap().len(), 6);
}

#[test]
fn plot_data_rows_follow_pair_order() {
    let tmp = TempDir::new().unwrap();
    let csv = run_ok(tmp.path(), &with_inputs("report", &fixture_args()));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), rangecorr_cli::report::PLOT_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let labels: Vec<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(
        labels,
        [
            "asset0:asset1",
            "asset0:asset2",
            "asset1:asset2",
            "asset0:asset3",
            "asset1:asset3",
            "asset2:asset3"
        ]
    );
    for r in &rows {
        let v: Vec<f64> = r[1..].iter().map(|x| x.parse().unwrap()).collect();
        for (est, lo, hi) in [(v[0], v[1], v[2]), (v[3], v[4], v[5])] {
            assert!((-1.0..=1.0).contains(&lo) && (-1.0..=1.0).contains(&hi));
            assert!(lo <= est && est <= hi, "{r:?}");
        }
        // The two estimates agree within sampling error.
        assert!(v[1].max(v[4]) <= v[2].min(v[5]), "intervals disjoint: {r:?}");
    }
}

#[test]
fn shuffled_columns_with_column_map() {
    let tmp = TempDir::new().unwrap();
    let mut inputs = Vec::new();
    for (k, src) in fixtures().iter().take(2).enumerate() {
        let text = fs::read_to_string(src).unwrap();
        let shuffled: String = text
            .lines()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                let f = if f[0] == "date" {
                    vec!["Close", "Day", "Low", "Open", "High"]
                } else {
                    vec![f[4], f[0], f[3], f[1], f[2]]
                };
                f.join(",") + "\n"
            })
            .collect();
        let path = tmp.path().join(format!("asset{k}.csv"));
        fs::write(&path, shuffled).unwrap();
        inputs.push(path.display().to_string());
    }
    let mut args = with_inputs("estimate", &inputs);
    args.extend(["--columns", "Day,Open,High,Low,Close"]);
    let shuffled = run_ok(tmp.path(), &args);
    let canonical = fixture_args();
    let original = run_ok(tmp.path(), &with_inputs("estimate", &canonical[..2]));
    assert_eq!(matrix(&shuffled, "rho_rz"), matrix(&original, "rho_rz"));
}

#[test]
fn daily_matrices_file() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("daily.csv");
    let mut args = with_inputs("estimate", &fixture_args()).into_iter().map(String::from).collect::<Vec<_>>();
    args.extend(["--daily-matrices".into(), path.display().to_string()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(tmp.path(), &args);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "date,asset_i,asset_j,sigma");
    assert_eq!(text.lines().count(), 1 + 1118 * 10);
}

#[test]
fn corrupted_cache_is_rebuilt_with_warning() {
    let tmp = TempDir::new().unwrap();
    let cache = tmp.path().join("phi_step_0.001.csv");
    run_ok(tmp.path(), &["phi-table"]);
    let good = fs::read(&cache).unwrap();
    assert_eq!(String::from_utf8_lossy(&good).lines().count(), 2002);

    fs::write(&cache, &good[..good.len() / 2]).unwrap();
    let out = run(tmp.path(), &with_inputs("report", &fixture_args()));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rebuilt phi cache"));
    assert_eq!(fs::read(&cache).unwrap(), good);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "date,open,high,low,close\n2024-01-02,100,99,101,100\n").unwrap();
    let f = fixture_args();
    let out = run(tmp.path(), &["estimate", "--input", &f[0], bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = run(tmp.path(), &["estimate", "--input", &f[0]]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["phi-table", "--step", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(tmp.path(), &["simulate", "--rho", "1.5", "--paths", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_table_layout() {
    let tmp = TempDir::new().unwrap();
    let csv = run_ok(tmp.path(), &["simulate", "--paths", "200", "--steps", "20", "--seed", "4"]);
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], rangecorr::montecarlo::TABLE_HEADER);
    assert_eq!(data.len(), 20);
    assert!(data[1].starts_with("-0.9,") && data[19].starts_with("0.9,"));

    let csv = run_ok(tmp.path(), &["simulate", "--process", "vg", "--paths", "50", "--rho", "0.2"]);
    assert!(csv.contains("# vg_kappa: 0.5"));
    let csv = run_ok(tmp.path(), &["simulate", "--drift", "0.1", "--paths", "50", "--rho", "0,-0.4"]);
    assert!(csv.contains("# process: bm_drift") && csv.contains("# drift: 0.1"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
}

#[test]
fn weights_dump_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let json = run_ok(tmp.path(), &["weights", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((v["variance"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["v"].as_array().unwrap().len(), 9);
}

#[test]
fn recovers_common_correlation_of_simulated_panel() {
    let spec = PanelSpec {
        vols: vec![0.01, 0.02, 0.015, 0.03],
        rho: 0.3,
        n_days: 20_000,
        n_steps: 500,
        seed: 11,
        start: NaiveDate::from_ymd_opt(2000, 1, 3).unwrap(),
    };
    let panel = align(&simulate_panel(&spec)).unwrap();
    let phi = PhiTable::build(DEFAULT_STEP, &QuadratureSpec::default()).unwrap();
    let bundle = cmd_estimate(&panel, &phi).unwrap();
    for p in &bundle.pairs {
        let e = &p.estimate;
        assert!((0.28..=0.32).contains(&e.rho_rz), "{}: {e:?}", p.label);
        assert!(e.variance_ratio >= 1.9, "{}: {e:?}", p.label);
        let (a, b) = (&e.ci95_rho0, &e.ci95_rz);
        assert!(a.low.max(b.low) <= a.high.min(b.high), "{}", p.label);
    }
}
