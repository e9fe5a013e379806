//! Date alignment across assets.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rangecorr::{day_stats_from_bar, standardize_series, DayStats, OhlcBar};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::ingest::Asset;

/// Assets restricted to their common trading days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedPanel {
    pub names: Vec<String>,
    pub dates: Vec<NaiveDate>,
    /// Log-return days per asset, before standardization.
    pub raw: Vec<Vec<DayStats>>,
    /// `raw` divided by each asset's close-return standard deviation.
    pub standardized: Vec<Vec<DayStats>>,
    pub scales: Vec<f64>,
    /// Dates present for some but not all assets.
    pub dropped_dates: usize,
}

impl AlignedPanel {
    pub fn n_assets(&self) -> usize {
        self.names.len()
    }

    pub fn n_days(&self) -> usize {
        self.dates.len()
    }
}

/// Inner join on dates followed by per-asset standardization.
pub fn align(assets: &[Asset]) -> Result<AlignedPanel> {
    if assets.len() < 2 {
        return Err(CliError::Input(format!(
            "need at least 2 assets, got {}",
            assets.len()
        )));
    }
    let by_date: Vec<BTreeMap<NaiveDate, &OhlcBar>> = assets
        .iter()
        .map(|a| a.bars.iter().map(|b| (b.date, b)).collect())
        .collect();

    let union: BTreeSet<NaiveDate> = by_date.iter().flat_map(|m| m.keys().copied()).collect();
    let dates: Vec<NaiveDate> = union
        .iter()
        .copied()
        .filter(|d| by_date.iter().all(|m| m.contains_key(d)))
        .collect();
    if dates.is_empty() {
        return Err(CliError::Input("assets share no common dates".into()));
    }

    let mut raw = Vec::with_capacity(assets.len());
    let mut standardized = Vec::with_capacity(assets.len());
    let mut scales = Vec::with_capacity(assets.len());
    for (asset, bars) in assets.iter().zip(&by_date) {
        let days = dates
            .iter()
            .map(|d| day_stats_from_bar(bars[d]))
            .collect::<rangecorr::Result<Vec<_>>>()?;
        let (std_days, scale) = standardize_series(&days).map_err(|e| {
            CliError::Input(format!("{}: {e}", asset.name))
        })?;
        raw.push(days);
        standardized.push(std_days);
        scales.push(scale);
    }

    Ok(AlignedPanel {
        names: assets.iter().map(|a| a.name.clone()).collect(),
        dropped_dates: union.len() - dates.len(),
        dates,
        raw,
        standardized,
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn asset(name: &str, days: &[(u32, f64)]) -> Asset {
        let bars = days
            .iter()
            .map(|&(d, c)| {
                let date = NaiveDate::from_ymd_opt(2024, 1, d).unwrap();
                OhlcBar::new(date, 100.0, 100.0f64.max(c) + 1.0, 100.0f64.min(c) - 1.0, c).unwrap()
            })
            .collect();
        Asset {
            name: name.into(),
            bars,
        }
    }

    #[test]
    fn identical_dates_keep_everything() {
        let days = [(2, 101.0), (3, 99.0), (4, 100.5)];
        let p = align(&[asset("a", &days), asset("b", &days)]).unwrap();
        assert_eq!(p.n_days(), 3);
        assert_eq!(p.dropped_dates, 0);
        assert!(p.dates.windows(2).all(|w| w[0] < w[1]));
        assert!(p.raw.iter().chain(&p.standardized).all(|s| s.len() == 3));
    }

    #[test]
    fn missing_date_is_dropped_everywhere() {
        let a = asset("a", &[(2, 101.0), (3, 99.0), (4, 100.5), (5, 98.0)]);
        let b = asset("b", &[(2, 100.2), (4, 99.0), (5, 101.0)]);
        let p = align(&[a, b]).unwrap();
        assert_eq!(p.n_days(), 3);
        assert_eq!(p.dropped_dates, 1);
        assert!(!p.dates.contains(&NaiveDate::from_ymd_opt(2024, 1, 3).unwrap()));
    }

    #[test]
    fn disjoint_dates_fail() {
        let a = asset("a", &[(2, 101.0), (3, 99.0)]);
        let b = asset("b", &[(8, 100.2), (9, 99.0)]);
        assert!(matches!(align(&[a, b]), Err(CliError::Input(_))));
    }

    #[test]
    fn single_asset_rejected() {
        assert!(align(&[asset("a", &[(2, 101.0), (3, 99.0)])]).is_err());
    }

    #[test]
    fn standardized_has_unit_close_sd() {
        let a = asset("a", &[(2, 101.0), (3, 99.0), (4, 100.5), (5, 97.0)]);
        let b = asset("b", &[(2, 100.2), (3, 99.7), (4, 99.0), (5, 101.0)]);
        let p = align(&[a, b]).unwrap();
        for s in &p.standardized {
            let closes: Vec<f64> = s.iter().map(|d| d.close).collect();
            assert!((rangecorr::stats::sample_sd(&closes) - 1.0).abs() < 1e-12);
        }
    }
}
