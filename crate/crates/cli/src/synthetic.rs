//! Synthetic OHLC panels with a known common correlation, for fixtures and tests.

use std::io::Write;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rangecorr::OhlcBar;

use crate::ingest::Asset;

#[derive(Debug, Clone)]
pub struct PanelSpec {
    /// Daily volatility of each asset's log price.
    pub vols: Vec<f64>,
    /// Correlation between every pair of assets, in `[0, 1]`.
    pub rho: f64,
    pub n_days: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub start: NaiveDate,
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d;
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d + Days::new(1);
    }
    d
}

/// Equicorrelated Brownian log prices `sqrt(rho) W0 + sqrt(1 - rho) Wi`,
/// sampled `n_steps` times per day. Each day opens at the previous close.
pub fn simulate_panel(spec: &PanelSpec) -> Vec<Asset> {
    let n = spec.vols.len();
    let dt = 1.0 / spec.n_steps as f64;
    let common = spec.rho.sqrt() * dt.sqrt();
    let own = (1.0 - spec.rho).sqrt() * dt.sqrt();

    let mut bars: Vec<Vec<OhlcBar>> = vec![Vec::with_capacity(spec.n_days); n];
    let mut price = vec![100.0f64; n];
    let mut date = next_weekday(spec.start);
    let mut x = vec![0.0f64; n];
    let mut hi = vec![0.0f64; n];
    let mut lo = vec![0.0f64; n];
    for day in 0..spec.n_days {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(day as u64);
        x.fill(0.0);
        hi.fill(0.0);
        lo.fill(0.0);
        for _ in 0..spec.n_steps {
            let z0: f64 = StandardNormal.sample(&mut rng);
            for k in 0..n {
                let zk: f64 = StandardNormal.sample(&mut rng);
                x[k] += spec.vols[k] * (common * z0 + own * zk);
                hi[k] = hi[k].max(x[k]);
                lo[k] = lo[k].min(x[k]);
            }
        }
        for k in 0..n {
            let open = round6(price[k]);
            let bar = OhlcBar {
                date,
                open,
                high: round6(price[k] * hi[k].exp()),
                low: round6(price[k] * lo[k].exp()),
                close: round6(price[k] * x[k].exp()),
            };
            price[k] = bar.close;
            bars[k].push(bar);
        }
        date = next_weekday(date + Days::new(1));
    }

    bars.into_iter()
        .enumerate()
        .map(|(k, bars)| Asset {
            name: format!("asset{k}"),
            bars,
        })
        .collect()
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Writes bars with the default column names.
pub fn write_asset_csv<W: Write>(asset: &Asset, mut out: W) -> std::io::Result<()> {
    writeln!(out, "date,open,high,low,close")?;
    for b in &asset.bars {
        writeln!(out, "{},{},{},{},{}", b.date, b.open, b.high, b.low, b.close)?;
    }
    out.flush()
}
