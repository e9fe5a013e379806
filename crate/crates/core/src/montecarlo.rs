//! Seeded Monte Carlo laboratory for correlated paths on `[0, 1]`.
//!
//! Each path owns a ChaCha8 stream selected by `(seed, path_index)`, so a
//! path's draws never depend on which worker generated it or in what order.
//! Paths are generated in parallel and reduced in index order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{rho0_day, rz_day, DayStats};
use crate::special::PhiTable;
use crate::stats;

/// Default variance rate of the gamma clock for variance gamma paths.
pub const DEFAULT_VG_KAPPA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Process {
    /// Standard Brownian motions.
    Brownian,
    /// Standard Brownian motions plus a linear drift per unit time.
    BrownianDrift { drift: f64 },
    /// Correlated Brownian motions run on one shared gamma clock with mean
    /// rate 1 and variance rate `kappa`.
    VarianceGamma { kappa: f64 },
}

impl Process {
    pub fn name(&self) -> &'static str {
        match self {
            Process::Brownian => "bm",
            Process::BrownianDrift { .. } => "bm_drift",
            Process::VarianceGamma { .. } => "vg",
        }
    }
}

/// How the daily high and low are read off a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremes {
    /// Max and min over the `n_steps + 1` grid points, like sampled prices.
    Discrete,
    /// Max and min of the continuous path: each step's Brownian bridge
    /// extremes are drawn from their exact conditional law. The two assets'
    /// bridges are drawn independently (exactly coupled at `rho = +-1`), so
    /// the joint law is exact at `rho = 0` and close otherwise. Brownian
    /// processes only.
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub process: Process,
    pub rho: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub extremes: Extremes,
}

impl SimConfig {
    pub fn new(process: Process, rho: f64, n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            process,
            rho,
            n_paths,
            n_steps,
            seed,
            extremes: Extremes::Discrete,
        }
    }

    pub fn with_extremes(mut self, extremes: Extremes) -> Self {
        self.extremes = extremes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_paths == 0 || self.n_steps == 0 {
            return bad("n_paths and n_steps must be at least 1".into());
        }
        if !(self.rho.abs() <= 1.0) {
            return bad(format!("rho {} is outside [-1, 1]", self.rho));
        }
        match self.process {
            Process::Brownian => {}
            Process::BrownianDrift { drift } if !drift.is_finite() => {
                return bad(format!("drift {drift} is not finite"));
            }
            Process::BrownianDrift { .. } => {}
            Process::VarianceGamma { kappa } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return bad(format!("vg kappa {kappa} must be positive"));
                }
                if self.extremes == Extremes::Bridge {
                    return bad("bridge extremes are only defined for Brownian paths".into());
                }
            }
        }
        Ok(())
    }
}

/// One simulated day for two assets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDay {
    pub d1: DayStats,
    pub d2: DayStats,
}

#[derive(Debug, Clone, Copy)]
struct Tracker {
    x: f64,
    high: f64,
    low: f64,
}

impl Tracker {
    fn new() -> Self {
        Self {
            x: 0.0,
            high: 0.0,
            low: 0.0,
        }
    }

    fn step_discrete(&mut self, dx: f64) {
        self.x += dx;
        self.high = self.high.max(self.x);
        self.low = self.low.min(self.x);
    }

    /// Advances by `dx` over a step of variance `var`, folding in the
    /// bridge max/min drawn from uniforms in `(0, 1]`.
    fn step_bridge(&mut self, dx: f64, var: f64, u_max: f64, u_min: f64) {
        let a = self.x;
        let b = a + dx;
        let sq = dx * dx;
        let top = 0.5 * (a + b + (sq - 2.0 * var * u_max.ln()).sqrt());
        let bottom = 0.5 * (a + b - (sq - 2.0 * var * u_min.ln()).sqrt());
        self.x = b;
        self.high = self.high.max(top);
        self.low = self.low.min(bottom);
    }

    fn finish(&self) -> DayStats {
        DayStats {
            high: self.high,
            low: self.low,
            close: self.x,
        }
    }
}

fn path_rng(seed: u64, path_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index as u64);
    rng
}

/// Uniform on `(0, 1]`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn generate(cfg: &SimConfig, path_index: usize) -> PairDay {
    let mut rng = path_rng(cfg.seed, path_index);
    let dt = 1.0 / cfg.n_steps as f64;
    let rho = cfg.rho;
    let complement = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let (drift_step, clock) = match cfg.process {
        Process::Brownian => (0.0, None),
        Process::BrownianDrift { drift } => (drift * dt, None),
        Process::VarianceGamma { kappa } => (
            0.0,
            Some(Gamma::new(dt / kappa, kappa).expect("validated gamma parameters")),
        ),
    };

    let mut p1 = Tracker::new();
    let mut p2 = Tracker::new();
    for _ in 0..cfg.n_steps {
        let var = match &clock {
            Some(g) => g.sample(&mut rng),
            None => dt,
        };
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        let sd = var.sqrt();
        let dx1 = sd * z1 + drift_step;
        let dx2 = sd * (rho * z1 + complement * z2) + drift_step;
        match cfg.extremes {
            Extremes::Discrete => {
                p1.step_discrete(dx1);
                p2.step_discrete(dx2);
            }
            Extremes::Bridge => {
                let u = [
                    open_unit(&mut rng),
                    open_unit(&mut rng),
                    open_unit(&mut rng),
                    open_unit(&mut rng),
                ];
                p1.step_bridge(dx1, var, u[0], u[1]);
                if rho == 1.0 {
                    p2.step_bridge(dx2, var, u[0], u[1]);
                } else if rho == -1.0 {
                    p2.step_bridge(dx2, var, u[1], u[0]);
                } else {
                    p2.step_bridge(dx2, var, u[2], u[3]);
                }
            }
        }
    }
    PairDay {
        d1: p1.finish(),
        d2: p2.finish(),
    }
}

/// Generates path `path_index` of the experiment described by `cfg`. The
/// result depends only on the config and the index.
pub fn gen_pair_day(cfg: &SimConfig, path_index: usize) -> Result<PairDay> {
    cfg.validate()?;
    if path_index >= cfg.n_paths {
        return Err(Error::InvalidConfig(format!(
            "path index {path_index} out of range for {} paths",
            cfg.n_paths
        )));
    }
    Ok(generate(cfg, path_index))
}

/// All `n_paths` pair-days, in path order.
pub fn simulate(cfg: &SimConfig) -> Result<Vec<PairDay>> {
    cfg.validate()?;
    Ok((0..cfg.n_paths)
        .into_par_iter()
        .map(|i| generate(cfg, i))
        .collect())
}

/// Summary of one simulated correlation level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub rho_true: f64,
    pub n_paths: usize,
    pub mean_rho0: f64,
    pub sd_rho0: f64,
    /// Mean of the raw daily range-based values.
    pub mean_rz_raw: f64,
    /// `phi^-1` of `mean_rz_raw`.
    pub mean_rz_corrected: f64,
    /// Standard deviation of the raw daily range-based values.
    pub sd_rz: f64,
    /// `(sd_rho0 / sd_rz)^2`.
    pub variance_ratio: f64,
    /// Mean of `phi^-1` applied to each path's raw value (clamped to `[-1, 1]`).
    pub mean_rz_per_path: f64,
    pub sd_rz_per_path: f64,
    /// Paths whose raw value fell outside `[-1, 1]`.
    pub saturated_paths: usize,
}

pub fn run_experiment(cfg: &SimConfig, phi: &PhiTable) -> Result<ExperimentRow> {
    let days = simulate(cfg)?;
    let rho0: Vec<f64> = days.iter().map(|p| rho0_day(&p.d1, &p.d2)).collect();
    let rz: Vec<f64> = days.iter().map(|p| rz_day(&p.d1, &p.d2)).collect();
    let mut saturated_paths = 0;
    let per_path: Vec<f64> = rz
        .iter()
        .map(|&r| {
            let inv = phi.inverse(r);
            saturated_paths += inv.saturated as usize;
            inv.value
        })
        .collect();

    let sd_rho0 = stats::sample_sd(&rho0);
    let sd_rz = stats::sample_sd(&rz);
    let mean_rz_raw = stats::mean(&rz);
    Ok(ExperimentRow {
        rho_true: cfg.rho,
        n_paths: cfg.n_paths,
        mean_rho0: stats::mean(&rho0),
        sd_rho0,
        mean_rz_raw,
        mean_rz_corrected: phi.inverse(mean_rz_raw).value,
        sd_rz,
        variance_ratio: (sd_rho0 / sd_rz).powi(2),
        mean_rz_per_path: stats::mean(&per_path),
        sd_rz_per_path: stats::sample_sd(&per_path),
        saturated_paths,
    })
}

/// `-0.9, -0.8, ..., 0.9`.
pub fn standard_rho_grid() -> Vec<f64> {
    (-9..=9).map(|k| k as f64 / 10.0).collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for row `row` of a table run from `seed`.
pub fn row_seed(seed: u64, row: usize) -> u64 {
    splitmix64(seed ^ splitmix64(row as u64))
}

/// One experiment per correlation level; row `k` uses `row_seed(template.seed, k)`.
pub fn run_table(template: &SimConfig, rhos: &[f64], phi: &PhiTable) -> Result<Vec<ExperimentRow>> {
    rhos.iter()
        .enumerate()
        .map(|(k, &rho)| {
            let cfg = SimConfig {
                rho,
                seed: row_seed(template.seed, k),
                ..*template
            };
            run_experiment(&cfg, phi)
        })
        .collect()
}

pub const TABLE_HEADER: &str =
    "rho,mean_rho0,sd_rho0,mean_rz_raw,mean_rz_corrected,sd_rz,variance_ratio";

/// Writes rows in the simulation-table CSV layout; `comments` become leading
/// `# ` lines.
pub fn write_table_csv<W: Write>(
    rows: &[ExperimentRow],
    comments: &[String],
    mut out: W,
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{TABLE_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{:.1},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.rho_true,
            r.mean_rho0,
            r.sd_rho0,
            r.mean_rz_raw,
            r.mean_rz_corrected,
            r.sd_rz,
            r.variance_ratio
        )?;
    }
    out.flush()
}
