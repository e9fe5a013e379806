//! OHLC CSV ingestion.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rangecorr::OhlcBar;

use crate::error::{CliError, Result};

/// Header names of the date, open, high, low and close columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
        }
    }
}

impl ColumnMap {
    /// Parses `"date,open,high,low,close"`-style lists: five header names in
    /// that role order.
    pub fn parse(spec: &str) -> Result<Self> {
        let names: Vec<&str> = spec.split(',').map(str::trim).collect();
        if names.len() != 5 || names.iter().any(|n| n.is_empty()) {
            return Err(CliError::Input(format!(
                "--columns expects five names (date,open,high,low,close), got {spec:?}"
            )));
        }
        Ok(Self {
            date: names[0].into(),
            open: names[1].into(),
            high: names[2].into(),
            low: names[3].into(),
            close: names[4].into(),
        })
    }
}

/// One asset's bars, labelled by the input file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    pub name: String,
    pub bars: Vec<OhlcBar>,
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Reads bars from CSV text. `source` only labels diagnostics. Bars are
/// returned in date order; duplicate dates are rejected.
pub fn parse_bars<R: Read>(reader: R, columns: &ColumnMap, source: &Path) -> Result<Vec<OhlcBar>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: source.to_path_buf(),
        line,
        message,
    };

    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_err(1, format!("missing column {name:?}")))
    };
    let idx = [
        find(&columns.date)?,
        find(&columns.open)?,
        find(&columns.high)?,
        find(&columns.low)?,
        find(&columns.close)?,
    ];

    let mut bars = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let date = parse_date(field(0))
            .ok_or_else(|| parse_err(line, format!("invalid date {:?}", field(0))))?;
        let mut prices = [0.0; 4];
        for (k, p) in prices.iter_mut().enumerate() {
            *p = field(k + 1)
                .parse()
                .map_err(|_| parse_err(line, format!("invalid number {:?}", field(k + 1))))?;
        }
        let bar = OhlcBar::new(date, prices[0], prices[1], prices[2], prices[3])
            .map_err(|e| parse_err(line, e.to_string()))?;
        bars.push(bar);
    }

    bars.sort_by_key(|b| b.date);
    if let Some(w) = bars.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(parse_err(0, format!("duplicate date {}", w[0].date)));
    }
    Ok(bars)
}

pub fn ingest_csv(path: &Path, columns: &ColumnMap) -> Result<Asset> {
    let file = File::open(path).map_err(|e| CliError::io(format!("{}", path.display()), e))?;
    let bars = parse_bars(file, columns, path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(Asset { name, bars })
}

pub fn ingest_all(paths: &[PathBuf], columns: &ColumnMap) -> Result<Vec<Asset>> {
    paths.iter().map(|p| ingest_csv(p, columns)).collect()
}
