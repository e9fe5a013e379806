//! Pairwise estimation over an aligned panel and the report writers.

use std::io::Write;

use rangecorr::{estimate_matrix_day, estimate_pair, PairEstimate, PhiTable};
use serde::Serialize;

use crate::error::Result;
use crate::panel::AlignedPanel;

pub const STANDARDIZATION_NOTE: &str =
    "each asset is divided by the sample SD (n-1) of its open-to-close log return; \
     H, L, S are measured from the same day's open (overnight gaps ignored)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRecord {
    pub label: String,
    pub first: usize,
    pub second: usize,
    pub estimate: PairEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub assets: Vec<String>,
    pub n_days: usize,
    pub dropped_dates: usize,
    pub scales: Vec<f64>,
    pub standardization: String,
    pub phi_step: f64,
    /// Off-diagonal pairs in report order.
    pub pairs: Vec<PairRecord>,
    /// Correlation matrix from the open-to-close estimator.
    pub rho0: Vec<Vec<f64>>,
    /// Correlation matrix from the bias-corrected range estimator.
    pub rho_rz: Vec<Vec<f64>>,
    /// `100 * var(range estimator) / var(open-to-close estimator)`; the
    /// diagonal compares the two variance estimators of each asset.
    pub variance_ratio_pct: Vec<Vec<f64>>,
}

/// Pairs `(i, j)` with `i < j`, grouped by the second asset:
/// `(0,1), (0,2), (1,2), (0,3), ...`.
pub fn pair_order(n: usize) -> Vec<(usize, usize)> {
    (1..n).flat_map(|j| (0..j).map(move |i| (i, j))).collect()
}

pub fn cmd_estimate(panel: &AlignedPanel, phi: &PhiTable) -> Result<ReportBundle> {
    let n = panel.n_assets();
    let mut rho0 = vec![vec![1.0; n]; n];
    let mut rho_rz = vec![vec![1.0; n]; n];
    let mut ratio = vec![vec![0.0; n]; n];

    for i in 0..n {
        let s = &panel.standardized[i];
        let own = estimate_pair(s, s, phi)?;
        ratio[i][i] = 100.0 / own.variance_ratio;
    }

    let mut pairs = Vec::new();
    for (i, j) in pair_order(n) {
        let est = estimate_pair(&panel.standardized[i], &panel.standardized[j], phi)?;
        rho0[i][j] = est.rho0_mean;
        rho0[j][i] = est.rho0_mean;
        rho_rz[i][j] = est.rho_rz;
        rho_rz[j][i] = est.rho_rz;
        ratio[i][j] = 100.0 / est.variance_ratio;
        ratio[j][i] = ratio[i][j];
        pairs.push(PairRecord {
            label: format!("{}:{}", panel.names[i], panel.names[j]),
            first: i,
            second: j,
            estimate: est,
        });
    }

    Ok(ReportBundle {
        assets: panel.names.clone(),
        n_days: panel.n_days(),
        dropped_dates: panel.dropped_dates,
        scales: panel.scales.clone(),
        standardization: STANDARDIZATION_NOTE.into(),
        phi_step: phi.step(),
        pairs,
        rho0,
        rho_rz,
        variance_ratio_pct: ratio,
    })
}

fn write_matrix_rows<W: Write>(out: &mut W, kind: &str, names: &[String], m: &[Vec<f64>]) -> std::io::Result<()> {
    for (name, row) in names.iter().zip(m) {
        write!(out, "{kind},{name}")?;
        for v in row {
            write!(out, ",{v:.10}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Matrix-layout CSV: `matrix,row,<asset>...`, with scales, the open-to-close
/// correlations, the range-based correlations and the variance ratios.
pub fn write_bundle_csv<W: Write>(bundle: &ReportBundle, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# assets: {}", bundle.assets.join(","))?;
    writeln!(out, "# days: {} (dropped dates: {})", bundle.n_days, bundle.dropped_dates)?;
    writeln!(out, "# standardization: {}", bundle.standardization)?;
    writeln!(out, "# phi grid step: {}", bundle.phi_step)?;
    write!(out, "matrix,row")?;
    for a in &bundle.assets {
        write!(out, ",{a}")?;
    }
    writeln!(out)?;
    write!(out, "scale,all")?;
    for s in &bundle.scales {
        write!(out, ",{s:.10}")?;
    }
    writeln!(out)?;
    write_matrix_rows(&mut out, "rho0", &bundle.assets, &bundle.rho0)?;
    write_matrix_rows(&mut out, "rho_rz", &bundle.assets, &bundle.rho_rz)?;
    write_matrix_rows(&mut out, "variance_ratio_pct", &bundle.assets, &bundle.variance_ratio_pct)?;
    out.flush()
}

pub fn write_bundle_json<W: Write>(bundle: &ReportBundle, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, bundle)?;
    writeln!(out)?;
    out.flush()
}

pub const PLOT_HEADER: &str = "pair,rho0,rho0_ci_low,rho0_ci_high,rho_rz,rz_ci_low,rz_ci_high";

/// One row per pair with both point estimates and their 95% intervals.
pub fn cmd_report_plotdata<W: Write>(bundle: &ReportBundle, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{PLOT_HEADER}")?;
    for p in &bundle.pairs {
        let e = &p.estimate;
        writeln!(
            out,
            "{},{:.10},{:.10},{:.10},{:.10},{:.10},{:.10}",
            p.label,
            e.rho0_mean,
            e.ci95_rho0.low,
            e.ci95_rho0.high,
            e.rho_rz,
            e.ci95_rz.low,
            e.ci95_rz.high
        )?;
    }
    out.flush()
}

/// Per-day covariance matrices of the unstandardized log returns, as
/// `date,asset_i,asset_j,sigma` rows with `i <= j`.
pub fn write_daily_matrices<W: Write>(panel: &AlignedPanel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "date,asset_i,asset_j,sigma")?;
    let n = panel.n_assets();
    for (t, date) in panel.dates.iter().enumerate() {
        let day: Vec<_> = panel.raw.iter().map(|s| s[t]).collect();
        let m = estimate_matrix_day(&day);
        for i in 0..n {
            for j in i..n {
                writeln!(out, "{date},{},{},{:e}", panel.names[i], panel.names[j], m[(i, j)])?;
            }
        }
    }
    out.flush()
}
