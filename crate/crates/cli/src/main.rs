use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emspec_cli::validate::{has_errors, validate};
use emspec_cli::{run, CliError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "emspec", version, about = "Emerging spectra of power-mapped correlation matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run(Common),
    /// Check a configuration and print diagnostics as JSON.
    Validate(Common),
    /// Tabulate linear-response predictions over a horizon grid.
    TheoryTable(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overrides the configuration.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Number of Monte Carlo realizations, overrides the configuration.
    #[arg(long, value_name = "N")]
    realizations: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, value_name = "N", env = "EMSPEC_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output directory, overrides the configuration.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, fallback: ExperimentKind) -> Result<ExperimentConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::new(fallback),
        };
        if let Some(seed) = self.seed {
            config.master_seed = Some(seed);
        }
        if let Some(r) = self.realizations {
            config.realizations = Some(r);
        }
        if let Some(out) = &self.out {
            config.output_dir = Some(out.clone());
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run(args) => {
            if args.config.is_none() {
                return Err(CliError::Config("run requires --config PATH".into()));
            }
            let config = args.resolve(ExperimentKind::WoeEmerging)?;
            for path in run(&config, args.workers)? {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let config = args.resolve(ExperimentKind::WoeEmerging)?;
            let diags = validate(&config);
            println!("{}", serde_json::to_string_pretty(&diags).expect("diagnostics serialize"));
            Ok(if has_errors(&diags) { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::TheoryTable(args) => {
            let mut config = args.resolve(ExperimentKind::TheoryTable)?;
            config.experiment = ExperimentKind::TheoryTable;
            let written = run(&config, args.workers)?;
            let table = written.iter().find(|p| p.ends_with("theory_table.csv")).expect("table written");
            let text = std::fs::read_to_string(table).map_err(|e| CliError::io(table, e))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
