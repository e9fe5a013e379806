//! Daily estimates from (H, L, S) triples and their aggregation into pair
//! estimates and per-day covariance matrices.

use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{range_weight, PhiTable};
use crate::stats;

/// Two-sided normal quantile for 95% intervals.
pub const Z_95: f64 = 1.96;

/// One day of prices for one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl OhlcBar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Result<Self> {
        let bar = Self {
            date,
            open,
            high,
            low,
            close,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(Error::MalformedBar(format!(
                "{}: prices must be finite and positive",
                self.date
            )));
        }
        if self.high < self.low {
            return Err(Error::MalformedBar(format!(
                "{}: high {} is below low {}",
                self.date, self.high, self.low
            )));
        }
        if self.high < self.open.max(self.close) || self.low > self.open.min(self.close) {
            return Err(Error::MalformedBar(format!(
                "{}: open/close outside the [low, high] range",
                self.date
            )));
        }
        Ok(())
    }
}

/// High, low and close of one day as log returns relative to the open.
///
/// Invariant: `low <= 0 <= high` and `low <= close <= high`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DayStats {
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl DayStats {
    pub fn new(high: f64, low: f64, close: f64) -> Result<Self> {
        let d = Self { high, low, close };
        if !(high.is_finite() && low.is_finite() && close.is_finite()) {
            return Err(Error::MalformedBar(format!("non-finite day {d:?}")));
        }
        if !(low <= 0.0 && 0.0 <= high && low <= close && close <= high) {
            return Err(Error::MalformedBar(format!(
                "day {d:?} violates low <= 0, close <= high"
            )));
        }
        Ok(d)
    }

    pub fn zero() -> Self {
        Self {
            high: 0.0,
            low: 0.0,
            close: 0.0,
        }
    }

    /// `H + L - S`; only this combination of the extremes enters the estimator.
    pub fn range_residual(&self) -> f64 {
        self.high + self.low - self.close
    }

    /// Multiplies every field by a positive factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            high: self.high * factor,
            low: self.low * factor,
            close: self.close * factor,
        }
    }

    /// The day seen through the reflected path `-X`.
    pub fn reflected(&self) -> Self {
        Self {
            high: -self.low,
            low: -self.high,
            close: -self.close,
        }
    }
}

/// Maps a price bar to log returns relative to its open. Overnight gaps are
/// not part of the result.
pub fn day_stats_from_bar(bar: &OhlcBar) -> Result<DayStats> {
    bar.validate()?;
    let high = (bar.high / bar.open).ln();
    let low = (bar.low / bar.open).ln();
    let close = (bar.close / bar.open).ln();
    // ln is monotone, so only rounding could break the ordering.
    DayStats::new(high.max(0.0), low.min(0.0), close.clamp(low, high))
}

/// The nine cross products of `{H, L, S}` between two assets, in the order
/// `HH, HL, LH, LL, HS, LS, SH, SL, SS` (first letter from asset 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossProducts {
    pub z: [f64; 9],
}

impl CrossProducts {
    pub const LABELS: [&'static str; 9] = ["HH", "HL", "LH", "LL", "HS", "LS", "SH", "SL", "SS"];

    pub fn new(d1: &DayStats, d2: &DayStats) -> Self {
        let (h1, l1, s1) = (d1.high, d1.low, d1.close);
        let (h2, l2, s2) = (d2.high, d2.low, d2.close);
        Self {
            z: [
                h1 * h2,
                h1 * l2,
                l1 * h2,
                l1 * l2,
                h1 * s2,
                l1 * s2,
                s1 * h2,
                s1 * l2,
                s1 * s2,
            ],
        }
    }
}

/// The open-to-close product `S1 S2`.
pub fn rho0_day(d1: &DayStats, d2: &DayStats) -> f64 {
    d1.close * d2.close
}

/// The daily range-based estimator
/// `S1 S2 / 2 + (H1 + L1 - S1)(H2 + L2 - S2) / (2(1 - 2b))`.
pub fn rz_day(d1: &DayStats, d2: &DayStats) -> f64 {
    0.5 * (d1.close * d2.close) + range_weight() * (d1.range_residual() * d2.range_residual())
}

/// Same formula as [`rz_day`]; on unstandardized inputs it estimates the
/// covariance of the two log prices over the day.
pub fn sigma12_day(d1: &DayStats, d2: &DayStats) -> f64 {
    rz_day(d1, d2)
}

/// Divides each day by the sample standard deviation of the close returns.
pub fn standardize_series(days: &[DayStats]) -> Result<(Vec<DayStats>, f64)> {
    if days.len() < 2 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 2 days, got {}",
            days.len()
        )));
    }
    let closes: Vec<f64> = days.iter().map(|d| d.close).collect();
    let scale = stats::sample_sd(&closes);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DegenerateSeries(
            "close returns have zero sample standard deviation".into(),
        ));
    }
    let out = days.iter().map(|d| d.scaled(1.0 / scale)).collect();
    Ok((out, scale))
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEstimate {
    pub n_days: usize,
    /// Mean of `S1 S2`.
    pub rho0_mean: f64,
    /// Mean of the raw daily range-based values.
    pub rz_raw_mean: f64,
    /// `phi^-1(rz_raw_mean)`.
    pub rho_rz: f64,
    /// Set when `rz_raw_mean` fell outside `[-1, 1]` and `rho_rz` was clamped.
    pub rz_saturated: bool,
    pub sd_rho0: f64,
    pub sd_rz: f64,
    /// `(sd_rho0 / sd_rz)^2`; infinite when `sd_rz` is zero.
    pub variance_ratio: f64,
    pub ci95_rho0: Interval,
    pub ci95_rz: Interval,
}

/// Aggregates daily estimates over two aligned, standardized series.
pub fn estimate_pair(a: &[DayStats], b: &[DayStats], phi: &PhiTable) -> Result<PairEstimate> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 2 days, got {n}"
        )));
    }
    let rho0: Vec<f64> = a.iter().zip(b).map(|(x, y)| rho0_day(x, y)).collect();
    let rz: Vec<f64> = a.iter().zip(b).map(|(x, y)| rz_day(x, y)).collect();

    let rho0_mean = stats::mean(&rho0);
    let rz_raw_mean = stats::mean(&rz);
    let sd_rho0 = stats::sample_sd(&rho0);
    let sd_rz = stats::sample_sd(&rz);
    if sd_rho0 == 0.0 && sd_rz == 0.0 {
        return Err(Error::DegenerateSeries(
            "daily estimates do not vary; are the series standardized?".into(),
        ));
    }
    let variance_ratio = if sd_rz > 0.0 {
        (sd_rho0 / sd_rz).powi(2)
    } else {
        f64::INFINITY
    };

    let root_n = (n as f64).sqrt();
    let half0 = Z_95 * sd_rho0 / root_n;
    let half_rz = Z_95 * sd_rz / root_n;
    let ci95_rho0 = Interval {
        low: (rho0_mean - half0).clamp(-1.0, 1.0),
        high: (rho0_mean + half0).clamp(-1.0, 1.0),
    };
    let ci95_rz = Interval {
        low: phi.inverse(rz_raw_mean - half_rz).value,
        high: phi.inverse(rz_raw_mean + half_rz).value,
    };
    let inv = phi.inverse(rz_raw_mean);

    Ok(PairEstimate {
        n_days: n,
        rho0_mean,
        rz_raw_mean,
        rho_rz: inv.value,
        rz_saturated: inv.saturated,
        sd_rho0,
        sd_rz,
        variance_ratio,
        ci95_rho0,
        ci95_rz,
    })
}

/// Per-day covariance estimate for `n` assets:
/// `S S^T / 2 + c U U^T` with `U = H + L - S`. Symmetric, PSD, rank at most 2.
pub fn estimate_matrix_day(days: &[DayStats]) -> DMatrix<f64> {
    let n = days.len();
    DMatrix::from_fn(n, n, |i, j| sigma12_day(&days[i], &days[j]))
}
