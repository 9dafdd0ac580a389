//! Experiment runner behind the `hyperdiff` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};

pub mod compare;
pub mod config;
pub mod experiments;
pub mod output;

use config::{DtSpec, ExperimentConfig, ExperimentKind, OutputFormat};
use output::{Manifest, Summary, MANIFEST_FILE, SUMMARY_FILE};

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
}

/// Run one experiment and write its files into `out_dir`.
///
/// `seed` overrides the seed in `config`. Every result file is followed by a
/// manifest holding the resolved configuration and the wall time.
pub fn run_experiment(
    kind: ExperimentKind,
    config: ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
    seed: Option<u64>,
) -> Result<RunReport> {
    let started = Instant::now();
    let mut config = config.for_experiment(kind)?;
    if let Some(seed) = seed {
        config.seed = Some(seed);
    }
    config.seed = Some(config.seed());
    if kind == ExperimentKind::Evolve {
        let grid = config.grid.build()?;
        let params = config.params.build()?;
        config.time.dt = DtSpec::Fixed(config.time.dt.resolve(&grid, &params)?);
    }
    config.output.format = Some(format);
    config.output.path = Some(out_dir.display().to_string());

    let outcome = experiments::run(&config)?;

    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut files = Vec::new();
    if format == OutputFormat::Csv {
        for (name, table) in &outcome.tables {
            let path = out_dir.join(name);
            table.write(&path)?;
            files.push(path);
        }
    }
    let summary_path = out_dir.join(SUMMARY_FILE);
    outcome.summary.write(&summary_path)?;
    files.push(summary_path);

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        files: files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(RunReport { summary: outcome.summary, files })
}
