//! Configuration, validation and experiment drivers behind the `emspec` binary.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
pub mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

pub use config::{ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use experiments::{execute, Artifacts};

/// Execute `config` on `workers` threads (0 = all cores) and write every
/// artifact plus `run.json` under the configured output directory.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<Vec<PathBuf>, CliError> {
    let started = Instant::now();
    let artifacts = emspec::parallel::with_workers(workers, || execute(config))?;
    let elapsed = started.elapsed().as_secs_f64();
    let warnings: Vec<String> = validate::validate(config).into_iter().map(|d| d.message).collect();

    let dir = config.output_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut written = Vec::new();
    for (name, body) in &artifacts.files {
        written.push(write(&dir, name, body)?);
    }
    let record = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "master_seed": config.master_seed(),
        "realizations": config.realizations(),
        "parallel": emspec::parallel::is_parallel(),
        "wall_seconds": elapsed,
        "files": artifacts.files.keys().collect::<Vec<_>>(),
        "warnings": warnings,
        "summary": artifacts.summary,
    });
    let text = serde_json::to_string_pretty(&record).expect("json value serializes");
    written.push(write(&dir, "run.json", &text)?);
    Ok(written)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
