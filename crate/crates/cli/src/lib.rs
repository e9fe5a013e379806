//! Library side of the `rangecorr` command: ingestion, alignment, reports
//! and the phi-table cache.

pub mod error;
pub mod ingest;
pub mod panel;
pub mod phi_cache;
pub mod report;
pub mod synthetic;

pub use error::{CliError, Result};
pub use ingest::{ingest_csv, Asset, ColumnMap};
pub use panel::{align, AlignedPanel};
pub use report::{cmd_estimate, cmd_report_plotdata, ReportBundle};
