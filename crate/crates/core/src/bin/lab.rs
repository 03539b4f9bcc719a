//! `lab <experiment> --config <file> [--seed N] [--threads N] [--out PATH] [--format json|csv]`
//!
//! Exit status: 0 when every hard check passed, 1 when a hard check failed
//! (the report is still written), 2 on a configuration or runtime error
//! (nothing is written).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Deserialize;
use serde_json::Value;

use critline::experiments::{run_experiment, ExperimentConfig};
use critline::report::{emit_report, render, Format};
use critline::LabError;

#[derive(Parser, Debug)]
#[command(name = "lab", version, about = "Run one numerical experiment and emit its report")]
struct Cli {
    /// Experiment tag, e.g. `grid` or `barriers`.
    experiment: String,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Report path; overrides the file. Without either the report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Value>,
    seed: Option<u64>,
    out_path: Option<String>,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let path = cli.config.display().to_string();
    let text = std::fs::read_to_string(&cli.config).map_err(|e| LabError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| LabError::Schema(vec![format!("{path}: {e}")]))?;
    if let Some(tag) = &file.experiment {
        if *tag != cli.experiment {
            return Err(LabError::Schema(vec![format!(
                "{path}: file names experiment `{tag}` but `{}` was requested",
                cli.experiment
            )]));
        }
    }
    Ok(ExperimentConfig {
        experiment: cli.experiment.clone(),
        params: file.params,
        seed: cli.seed.or(file.seed),
        out_path: cli.out.as_ref().map(|p| p.display().to_string()).or(file.out_path),
    })
}

fn run(cli: &Cli) -> Result<bool, LabError> {
    let config = load(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| LabError::Schema(vec![format!("--threads: {e}")]))?;
    let report = pool.install(|| run_experiment(&config))?;
    match &config.out_path {
        Some(p) => emit_report(&report, cli.format, Path::new(p))?,
        None => print!("{}", render(&report, cli.format)?),
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("lab: one or more hard checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("lab: {e}");
            ExitCode::from(2)
        }
    }
}
