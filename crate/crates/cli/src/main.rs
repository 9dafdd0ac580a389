use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hyperdiff_cli::compare::compare_files;
use hyperdiff_cli::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use hyperdiff_cli::run_experiment;

/// Numerical experiments on hyperbolic diffusion models.
#[derive(Parser)]
#[command(name = "hyperdiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the telegraph equation and write the density series.
    Evolve(RunArgs),
    /// Pseudo-Hermiticity, spectrum and metric-norm checks of the Klein-Gordon operator.
    KgCheck(RunArgs),
    /// Persistent random walk ensemble and its histogram.
    Mc(RunArgs),
    /// Cauchy residual against the relaxation time, with a log-log fit.
    ResidualScan(RunArgs),
    /// Small- and large-relaxation-time limit checks.
    Limits(RunArgs),
    /// Martingale defect of an analytic or Klein-Gordon density.
    Martingale(RunArgs),
    /// Compare two result files; exit 1 if they differ beyond the tolerance.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tolerance: f64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> anyhow::Result<bool> {
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let out = args.out.or_else(|| config.output.path.as_ref().map(PathBuf::from)).unwrap_or_else(|| "out".into());
    let format = args.format.or(config.output.format).unwrap_or_default();
    let report = run_experiment(kind, config, &out, format, args.seed)?;
    for c in &report.summary.checks {
        println!("{} {} = {:e} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.condition);
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(report.summary.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(a) => run(ExperimentKind::Evolve, a),
        Command::KgCheck(a) => run(ExperimentKind::KgCheck, a),
        Command::Mc(a) => run(ExperimentKind::Mc, a),
        Command::ResidualScan(a) => run(ExperimentKind::ResidualScan, a),
        Command::Limits(a) => run(ExperimentKind::Limits, a),
        Command::Martingale(a) => run(ExperimentKind::Martingale, a),
        Command::Compare { first, second, tolerance } => compare_files(&first, &second, tolerance).map(|c| {
            c.lines.iter().for_each(|l| println!("{l}"));
            c.passed
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
