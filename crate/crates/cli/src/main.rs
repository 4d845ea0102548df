use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amr_cli::commands;
use amr_cli::config::{DataSource, SynthSource};
use amr_cli::server;
use amr_cli::{CliError, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amr", version, about = "AMR resistance forecasting and grounded policy Q&A")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, short, global = true, default_value = "amr.json")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic surveillance CSV.
    Synth {
        /// Generator seed; the configured synth seed (or 7) when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long, default_value = "synthetic.csv")]
        out: PathBuf,
    },
    /// Validate a CSV and print its summary.
    Ingest {
        /// CSV to check instead of the configured data source.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train all six models.
    Train,
    /// Score the trained models and write the report and figure data.
    Evaluate,
    /// Print the stored evaluation report.
    Report {
        /// Print the raw JSON instead of the text rendering.
        #[arg(long)]
        json: bool,
    },
    /// Build the policy-document index.
    Index,
    /// Answer one policy question.
    Ask { question: String },
    /// Answer the five built-in policy questions.
    EvalRag,
    /// Serve the HTTP API.
    Serve {
        /// Address to bind, overriding the configuration.
        #[arg(long)]
        bind: Option<String>,
    },
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    RunConfig::load(path)
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Synth { seed, out } => {
            // The config file is optional here; it only supplies generator
            // settings when present.
            let source = if cli.config.exists() {
                match load_config(&cli.config)?.data {
                    DataSource::Synth(s) => s,
                    DataSource::Csv(_) => SynthSource::default(),
                }
            } else {
                SynthSource::default()
            };
            let seed = seed.unwrap_or(source.seed);
            commands::synth(&source.config, seed, &out)
        }
        Command::Ingest { csv } => commands::ingest(&load_config(&cli.config)?, csv.as_deref()),
        Command::Train => commands::train(&load_config(&cli.config)?),
        Command::Evaluate => commands::evaluate(&load_config(&cli.config)?),
        Command::Report { json } => commands::report(&load_config(&cli.config)?, json),
        Command::Index => commands::index(&load_config(&cli.config)?),
        Command::Ask { question } => commands::ask(&load_config(&cli.config)?, &question),
        Command::EvalRag => commands::eval_rag_cmd(&load_config(&cli.config)?).map(|r| r.0),
        Command::Serve { bind } => {
            server::serve(&load_config(&cli.config)?, bind.as_deref()).map(|_| String::new())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
