mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::{Command, Overrides, RunConfig, ValidationError, OUT_DIR_ENV};

/// Confidence regions for excursion sets with piecewise continuous limits.
#[derive(Parser, Debug)]
#[command(name = "pwcr", version)]
struct Cli {
    /// Command to run; may instead be given as "command" in the config.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn fail(code: u8, kind: &str, field: Option<&str>, message: &str) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": kind, "field": field, "message": message })
    );
    ExitCode::from(code)
}

fn load(cli: Cli) -> Result<RunConfig, ValidationError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ValidationError {
                field: "config".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            serde_json::from_str(&text).map_err(|e| ValidationError {
                field: "config".into(),
                message: e.to_string(),
            })?
        }
        None => RunConfig::default(),
    };
    if cli.command.is_some() {
        config.command = cli.command;
    }
    config.apply(cli.overrides);
    config.resolve(std::env::var(OUT_DIR_ENV).ok())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(EXIT_VALIDATION, "validation", None, e.to_string().trim()),
    };
    let config = match load(cli) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_VALIDATION, "validation", Some(&e.field), &e.message),
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return fail(EXIT_RUNTIME, "runtime", None, &e.to_string()),
    };
    match pool.install(|| commands::run(&config)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(EXIT_RUNTIME, "runtime", None, &format!("{e:#}")),
    }
}
