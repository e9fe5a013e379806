//! Regenerates the synthetic OHLC fixtures used by the CLI tests.
//!
//! `cargo run -p rangecorr-cli --example make_fixtures -- crates/cli/tests/fixtures`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use chrono::NaiveDate;
use rangecorr_cli::synthetic::{simulate_panel, write_asset_csv, PanelSpec};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let spec = PanelSpec {
        vols: vec![0.018, 0.012, 0.021, 0.010],
        rho: 0.3,
        n_days: 1118,
        n_steps: 390,
        seed: 20020204,
        start: NaiveDate::from_ymd_opt(2002, 2, 4).unwrap(),
    };
    for asset in simulate_panel(&spec) {
        let path = dir.join(format!("{}.csv", asset.name));
        write_asset_csv(&asset, BufWriter::new(File::create(&path)?))?;
        println!("{}", path.display());
    }
    Ok(())
}
