use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rangecorr::montecarlo::{standard_rho_grid, write_table_csv, DEFAULT_VG_KAPPA};
use rangecorr::special::DEFAULT_STEP;
use rangecorr::CrossProducts;
use rangecorr::{
    build_covariance_matrix, closed_form_weights, constraint_vectors, estimator_variance, run_table,
    solve_weights, Extremes, PhiTable, Process, QuadratureSpec, SimConfig,
};
use rangecorr_cli::error::{CliError, Result};
use rangecorr_cli::ingest::{ingest_all, ColumnMap};
use rangecorr_cli::phi_cache::{self, CacheOutcome, CACHE_DIR_ENV};
use rangecorr_cli::report::{
    cmd_estimate, cmd_report_plotdata, write_bundle_csv, write_bundle_json, write_daily_matrices,
};
use rangecorr_cli::panel::align;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "rangecorr", version, about = "Correlation estimates from daily OHLC bars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate pairwise correlations and variance ratios for a set of assets.
    Estimate(EstimateArgs),
    /// Write per-pair estimates with 95% intervals, one row per pair.
    Report(ReportArgs),
    /// Run the Monte Carlo comparison over a range of correlations.
    Simulate(SimulateArgs),
    /// Build the phi lookup table and store it in the cache.
    PhiTable(PhiTableArgs),
    /// Dump the second-moment matrix, constraints and optimal weights.
    Weights(WeightsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProcessKind {
    Bm,
    BmDrift,
    Vg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtremesKind {
    Discrete,
    Bridge,
}

#[derive(Args)]
struct PhiArgs {
    /// Grid step of the phi table.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Directory for cached phi tables.
    #[arg(long, env = CACHE_DIR_ENV)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct InputArgs {
    /// One CSV file per asset; the file stem names the asset.
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// Header names for date,open,high,low,close.
    #[arg(long, default_value = "date,open,high,low,close")]
    columns: String,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    phi: PhiArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each day's covariance matrix to this file.
    #[arg(long)]
    daily_matrices: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    phi: PhiArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ProcessKind::Bm)]
    process: ProcessKind,
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Correlations to simulate (default -0.9, -0.8, ..., 0.9).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    rho: Vec<f64>,
    /// Drift per unit time. A nonzero drift turns `bm` into `bm_drift`;
    /// `bm_drift` defaults to 0.1.
    #[arg(long, allow_negative_numbers = true)]
    drift: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_VG_KAPPA)]
    vg_kappa: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ExtremesKind::Discrete)]
    extremes: ExtremesKind,
    #[command(flatten)]
    phi: PhiArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhiTableArgs {
    #[command(flatten)]
    phi: PhiArgs,
    /// Also write the table here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_cache_dir() -> Option<PathBuf> {
    std::env::var_os("HOME").map(|h| Path::new(&h).join(".cache").join("rangecorr"))
}

fn load_phi(args: &PhiArgs) -> Result<PhiTable> {
    let dir = args.cache_dir.clone().or_else(default_cache_dir);
    let (table, outcome) = phi_cache::load_or_build(args.step, dir.as_deref(), &QuadratureSpec::default())?;
    if let CacheOutcome::Rebuilt { path, reason } = outcome {
        eprintln!("warning: rebuilt phi cache {} ({reason})", path.display());
    }
    Ok(table)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::io(p.display().to_string(), e))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn out_err(path: Option<&Path>) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::io(path.map_or("stdout".into(), |p| p.display().to_string()), e)
}

fn run_estimate(args: &EstimateArgs) -> Result<()> {
    let columns = ColumnMap::parse(&args.input.columns)?;
    let panel = align(&ingest_all(&args.input.input, &columns)?)?;
    if panel.dropped_dates > 0 {
        eprintln!("note: dropped {} dates not shared by every asset", panel.dropped_dates);
    }
    let phi = load_phi(&args.phi)?;
    let bundle = cmd_estimate(&panel, &phi)?;
    let out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Csv => write_bundle_csv(&bundle, out),
        Format::Json => write_bundle_json(&bundle, out),
    }
    .map_err(out_err(args.out.as_deref()))?;
    if let Some(path) = &args.daily_matrices {
        let out = open_out(Some(path))?;
        write_daily_matrices(&panel, out).map_err(out_err(Some(path)))?;
    }
    Ok(())
}

fn run_report(args: &ReportArgs) -> Result<()> {
    let columns = ColumnMap::parse(&args.input.columns)?;
    let panel = align(&ingest_all(&args.input.input, &columns)?)?;
    let phi = load_phi(&args.phi)?;
    let bundle = cmd_estimate(&panel, &phi)?;
    cmd_report_plotdata(&bundle, open_out(args.out.as_deref())?).map_err(out_err(args.out.as_deref()))
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let process = match args.process {
        ProcessKind::Bm => match args.drift {
            Some(d) if d != 0.0 => Process::BrownianDrift { drift: d },
            _ => Process::Brownian,
        },
        ProcessKind::BmDrift => Process::BrownianDrift {
            drift: args.drift.unwrap_or(0.1),
        },
        ProcessKind::Vg => {
            if args.drift.is_some_and(|d| d != 0.0) {
                return Err(CliError::Input("--drift is not supported for vg".into()));
            }
            Process::VarianceGamma { kappa: args.vg_kappa }
        }
    };
    let extremes = match args.extremes {
        ExtremesKind::Discrete => Extremes::Discrete,
        ExtremesKind::Bridge => Extremes::Bridge,
    };
    let rhos = if args.rho.is_empty() {
        standard_rho_grid()
    } else {
        args.rho.clone()
    };
    let template = SimConfig::new(process, 0.0, args.paths, args.steps, args.seed).with_extremes(extremes);
    for &rho in &rhos {
        SimConfig { rho, ..template }.validate()?;
    }
    let phi = load_phi(&args.phi)?;
    let rows = run_table(&template, &rhos, &phi)?;

    let mut comments = vec![
        format!("process: {}", process.name()),
        format!("paths: {}", args.paths),
        format!("steps: {}", args.steps),
        format!("seed: {}", args.seed),
        format!(
            "extremes: {}",
            match extremes {
                Extremes::Discrete => "discrete",
                Extremes::Bridge => "bridge",
            }
        ),
        format!("phi grid step: {}", phi.step()),
    ];
    match process {
        Process::BrownianDrift { drift } => comments.push(format!("drift: {drift}")),
        Process::VarianceGamma { kappa } => comments.push(format!("vg_kappa: {kappa}")),
        Process::Brownian => {}
    }

    let path = args.out.as_deref();
    let mut out = open_out(path)?;
    match args.format {
        Format::Csv => write_table_csv(&rows, &comments, out),
        Format::Json => {
            #[derive(Serialize)]
            struct Table<'a> {
                config: SimConfig,
                rows: &'a [rangecorr::ExperimentRow],
            }
            let table = Table {
                config: template,
                rows: &rows,
            };
            serde_json::to_writer_pretty(&mut out, &table)
                .map_err(io::Error::from)
                .and_then(|_| writeln!(out))
                .and_then(|_| out.flush())
        }
    }
    .map_err(out_err(path))
}

fn run_phi_table(args: &PhiTableArgs) -> Result<()> {
    let dir = args.phi.cache_dir.clone().or_else(default_cache_dir);
    let table = PhiTable::build(args.phi.step, &QuadratureSpec::default())?;
    if let Some(dir) = &dir {
        let path = phi_cache::cache_path(dir, args.phi.step);
        phi_cache::write_table(&table, &path)?;
        eprintln!("wrote {} ({} points)", path.display(), table.len());
    }
    if let Some(out) = &args.out {
        phi_cache::write_table(&table, out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct WeightsDump {
    terms: Vec<String>,
    v: Vec<Vec<f64>>,
    m: Vec<f64>,
    y: Vec<f64>,
    w_solved: Vec<f64>,
    w_closed_form: Vec<f64>,
    variance: f64,
    max_abs_diff: f64,
}

fn run_weights(args: &WeightsArgs) -> Result<()> {
    let v = build_covariance_matrix();
    let (m, y) = constraint_vectors();
    let solved = solve_weights(&v, &m, &y)?;
    let closed = closed_form_weights();
    let terms: Vec<String> = CrossProducts::LABELS.iter().map(|s| s.to_string()).collect();
    let dump = WeightsDump {
        v: (0..9).map(|i| (0..9).map(|j| v[(i, j)]).collect()).collect(),
        m: m.iter().copied().collect(),
        y: y.iter().copied().collect(),
        w_solved: solved.w.to_vec(),
        w_closed_form: closed.w.to_vec(),
        variance: estimator_variance(&solved, &v),
        max_abs_diff: solved.max_abs_diff(&closed),
        terms,
    };

    let path = args.out.as_deref();
    let mut out = open_out(path)?;
    let write = |out: &mut Box<dyn Write>| -> io::Result<()> {
        match args.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &dump)?;
                writeln!(out)?;
            }
            Format::Csv => {
                writeln!(out, "# minimized variance: {:.16e}", dump.variance)?;
                writeln!(out, "# max |w_solved - w_closed_form|: {:.3e}", dump.max_abs_diff)?;
                writeln!(out, "row,{}", dump.terms.join(","))?;
                let mut line = |name: &str, vals: &[f64]| -> io::Result<()> {
                    write!(out, "{name}")?;
                    for x in vals {
                        write!(out, ",{x:.16e}")?;
                    }
                    writeln!(out)
                };
                for (t, row) in dump.terms.iter().zip(&dump.v) {
                    line(&format!("V_{t}"), row)?;
                }
                line("m", &dump.m)?;
                line("y", &dump.y)?;
                line("w_solved", &dump.w_solved)?;
                line("w_closed_form", &dump.w_closed_form)?;
            }
        }
        out.flush()
    };
    write(&mut out).map_err(out_err(path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Report(a) => run_report(a),
        Command::Simulate(a) => run_simulate(a),
        Command::PhiTable(a) => run_phi_table(a),
        Command::Weights(a) => run_weights(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
