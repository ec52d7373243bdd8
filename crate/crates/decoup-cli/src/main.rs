mod config;
mod experiments;
mod plot;
mod report;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{Example, ExperimentConfig, Kind, ModeArg, Policy};
use plot::PlotSpec;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Batch runner for exponential-sum, square-function and wave packet experiments.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on an
/// invalid or infeasible configuration.
#[derive(Parser, Debug)]
#[command(name = "decoup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Discrete Strichartz ratio D(N) over an N sweep, with growth fits.
    StrichartzGrowth(RunArgs),
    /// Level sets, Omega decomposition and pruning against the mass bound.
    HighlowPipeline(RunArgs),
    /// Exact packet decompositions (exact mode) or tube adherence (real mode).
    WavepacketChecks(RunArgs),
    /// Refined Strichartz and refined decoupling in the spacetime lab.
    RefinedLab(RunArgs),
    /// FFT quadrature against the counting oracle.
    OracleVerify(RunArgs),
    /// Redraw a plot from a report CSV.
    Plot(PlotArgs),
}

/// Flags override the matching config keys.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// JSON config; see config.schema.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Random-phase seeds; repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    r: Vec<usize>,
    /// Drop the all-ones coefficients from the sweep.
    #[arg(long)]
    no_all_ones: bool,
    #[arg(long)]
    coeff_file: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    ladder_c: Option<f64>,
    #[arg(long)]
    tilde_c: Option<f64>,
    #[arg(long)]
    c_prime: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    example: Option<Example>,
    #[arg(long)]
    w: Option<usize>,
    #[arg(long, value_enum)]
    policy: Option<Policy>,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: bool,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    log_x: bool,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    title: Option<String>,
    /// SVG file to write.
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(),
        };
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if !self.seed.is_empty() {
            cfg.seeds = Some(self.seed.clone());
        }
        if !self.n.is_empty() {
            cfg.n = Some(self.n.clone());
        }
        if !self.r.is_empty() {
            cfg.r = Some(self.r.clone());
        }
        if self.no_all_ones {
            cfg.all_ones = false;
        }
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f.clone() { cfg.$f = v.into(); })* };
        }
        set!(p, c, d, example, policy);
        macro_rules! set_opt {
            ($($f:ident),*) => { $(if self.$f.is_some() { cfg.$f = self.$f.clone(); })* };
        }
        set_opt!(coeff_file, ladder_c, tilde_c, c_prime, k, w, out);
        cfg.plot |= self.plot;
        Ok(cfg)
    }
}

/// Default plot for each experiment: `(x, y, group, log_x, log_y)`.
fn default_plot(kind: Kind, cfg: &ExperimentConfig) -> PlotSpec {
    let (x, y, group, log_x, log_y) = match kind {
        Kind::StrichartzGrowth => ("n", "ratio", Some("source"), true, true),
        Kind::OracleVerify => ("n", "quadrature", Some("source"), true, true),
        Kind::HighlowPipeline => ("alpha", "measured_mass", Some("source"), true, true),
        Kind::WavepacketChecks if cfg.mode == ModeArg::Exact => ("level", "reconstruction_error", Some("source"), false, true),
        Kind::WavepacketChecks => ("r", "mass_fraction", None, true, false),
        Kind::RefinedLab => ("r", "ratio", Some("example"), true, true),
    };
    PlotSpec {
        x: x.into(),
        y: y.into(),
        group: group.map(Into::into),
        log_x,
        log_y,
        title: kind.name().into(),
    }
}

enum Failure {
    Checks,
    Config(anyhow::Error),
}

fn run_experiment(kind: Kind, args: &RunArgs) -> std::result::Result<PathBuf, Failure> {
    let cfg = args.config().map_err(Failure::Config)?;
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Failure::Config(e.into()))?;
    let report = pool.install(|| experiments::run(kind, &cfg)).map_err(Failure::Config)?;
    let out = cfg.out.clone().unwrap_or_else(|| Path::new("out").join(kind.name()));
    report.write(&out).map_err(Failure::Config)?;
    if cfg.plot {
        let spec = default_plot(kind, &cfg);
        let svg = out.join(format!("{}.svg", kind.name()));
        plot::plot_csv(&report.csv_path(&out), &spec, &svg).map_err(Failure::Config)?;
    }
    println!(
        "{}: {} rows, {} failed, checks {}/{} -> {}",
        kind.name(),
        report.rows.len(),
        report.failed_rows(),
        report.checks.iter().filter(|c| c.pass).count(),
        report.checks.len(),
        report.jsonl_path(&out).display()
    );
    if report.all_pass() {
        Ok(out)
    } else {
        Err(Failure::Checks)
    }
}

fn plot_command(a: &PlotArgs) -> Result<()> {
    let spec = PlotSpec {
        x: a.x.clone(),
        y: a.y.clone(),
        group: a.group.clone(),
        log_x: a.log_x,
        log_y: a.log_y,
        title: a.title.clone().unwrap_or_else(|| format!("{} vs {}", a.y, a.x)),
    };
    plot::plot_csv(&a.csv, &spec, &a.out).with_context(|| format!("plotting {}", a.csv.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::StrichartzGrowth(a) => (Kind::StrichartzGrowth, a),
        Command::HighlowPipeline(a) => (Kind::HighlowPipeline, a),
        Command::WavepacketChecks(a) => (Kind::WavepacketChecks, a),
        Command::RefinedLab(a) => (Kind::RefinedLab, a),
        Command::OracleVerify(a) => (Kind::OracleVerify, a),
        Command::Plot(a) => {
            return match plot_command(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    };
    match run_experiment(kind, args) {
        Ok(_) => ExitCode::SUCCESS,
        Err(Failure::Checks) => {
            eprintln!("some checks failed");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
