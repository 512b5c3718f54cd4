//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on usage,
//! configuration or setup errors. Thread count follows `RAYON_NUM_THREADS`.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
pub use config::{load_config, ReportFormat, RunConfig};
pub use report::{EquationTag, Record, Report, Summary};

#[derive(Debug, Parser)]
#[command(name = "curvkit", version, about = "Curvature identities, Gauss-Bonnet integrals and metric variations of catalog metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pointwise quadratic curvature identity of a 4-manifold.
    VerifyIdentity,
    /// Euler characteristic by quadrature of the Gauss-Bonnet density.
    GaussBonnet,
    /// Closed-form metric variations against finite differences.
    VariationCheck,
    /// Chern frame search and component expansions.
    ChernBasis,
    /// Curvature reconstruction and norm identity of 3-manifolds.
    ThreeDim,
    /// Reference invariants of catalog metrics.
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentity => "verify-identity",
            Command::GaussBonnet => "gauss-bonnet",
            Command::VariationCheck => "variation-check",
            Command::ChernBasis => "chern-basis",
            Command::ThreeDim => "three-dim",
            Command::Catalog => "catalog",
        }
    }

    fn default_metric(self) -> Option<&'static str> {
        match self {
            Command::ThreeDim => Some("constcurv3"),
            Command::Catalog => None,
            _ => Some("sphere4"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Catalog metric name.
    #[arg(long, global = true)]
    pub metric: Option<String>,
    /// Sphere radius.
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Curvature parameter.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub c1: Option<f64>,
    #[arg(long, global = true)]
    pub c2: Option<f64>,
    /// Perturbation amplitude.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Seed for sample points, searches and seeded metrics.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub a: Option<f64>,
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Inner 3-dimensional metric of a product construction.
    #[arg(long, global = true)]
    pub inner: Option<String>,
    /// Number of sample points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Report path; the report goes to stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Optional CSV summary path.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Also run the integral variation checks.
    #[arg(long, global = true)]
    pub integrals: bool,
}

/// Effective configuration: defaults, then the config file, then flags.
pub fn resolve_config(command: Command, args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    cfg.command = command.name().to_string();
    if let Some(m) = &args.metric {
        cfg.metric = Some(m.clone());
    }
    if cfg.metric.is_none() {
        cfg.metric = command.default_metric().map(String::from);
    }
    let numeric = [("r", args.r), ("c", args.c), ("c1", args.c1), ("c2", args.c2), ("eps", args.eps), ("a", args.a), ("b", args.b)];
    for (key, v) in numeric {
        if let Some(v) = v {
            cfg.params.values.insert(key.to_string(), v);
        }
    }
    if let Some(d) = args.dim {
        cfg.params.values.insert("dim".into(), d as f64);
    }
    if let Some(inner) = &args.inner {
        cfg.params.inner = Some(inner.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.params.values.entry("seed".into()).or_insert(cfg.seed as f64);
    if let Some(p) = args.points {
        cfg.points = p;
    }
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    if args.csv.is_some() {
        cfg.csv = args.csv.clone();
    }
    cfg.integrals |= args.integrals;
    cfg.validate()?;
    Ok(cfg)
}

/// Run a resolved configuration and build the report.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report> {
    let ctx = commands::Context { cfg, name: cfg.metric.clone().unwrap_or_default(), params: cfg.params.clone() };
    let records = match command {
        Command::VerifyIdentity => commands::verify_identity(&ctx)?,
        Command::GaussBonnet => commands::gauss_bonnet(&ctx)?,
        Command::VariationCheck => commands::variation_check(&ctx)?,
        Command::ChernBasis => commands::chern_basis(&ctx)?,
        Command::ThreeDim => commands::three_dim(&ctx)?,
        Command::Catalog => {
            let names = match &cfg.metric {
                Some(m) => vec![m.clone()],
                None => commands::all_catalog_names(),
            };
            commands::catalog(&ctx, &names)?
        }
    };
    Ok(Report::new(cfg.clone(), records))
}

fn write_outputs(report: &Report) -> Result<()> {
    let json = report.to_json();
    match &report.config.output {
        Some(path) => std::fs::write(path, json).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(json.as_bytes()).map_err(|e| Error::Config(format!("cannot write report: {e}")))?;
        }
    }
    if let Some(path) = &report.config.csv {
        report.write_csv(path)?;
    }
    Ok(())
}

/// Probe output paths before doing any work so an unwritable path fails fast.
fn check_writable(cfg: &RunConfig) -> Result<()> {
    for path in [&cfg.output, &cfg.csv].into_iter().flatten() {
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Parse arguments, run, write the report and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = resolve_config(cli.command, &cli.opts).and_then(|cfg| {
        check_writable(&cfg)?;
        let report = execute(cli.command, &cfg)?;
        write_outputs(&report)?;
        Ok(report)
    });
    match outcome {
        Ok(report) => {
            let s = report.summary;
            eprintln!("{}: {} checks, {} passed, {} failed", report.command, s.records, s.passed, s.failed);
            if report.all_pass() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
