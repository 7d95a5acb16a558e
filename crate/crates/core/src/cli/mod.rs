//! Command-line front end.
//!
//! `grafdict train|predict|eval|gen --config PATH [--key=value ...]`.
//! Exit codes: 0 success, 2 input error, 3 label-mode mismatch, 4 numerical failure.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "grafdict", version, about = "Supervised dictionary learning with graph regularization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model and write it with per-iteration metrics.
    Train(Args),
    /// Write test-set predictions.
    Predict(Args),
    /// Print accuracy (single-label) or average precision (multi-label).
    Eval(Args),
    /// Generate a synthetic labelled dataset.
    Gen(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Settings overriding the file, as `--key=value`.
    #[arg(value_name = "--KEY=VALUE", trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ModeMismatch(_) => 3,
        Error::Numerical(_) | Error::NotNormalized { .. } | Error::InvalidGraph(_) => 4,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::Dimension(_)
        | Error::InvalidArgument(_)
        | Error::Config(_) => 2,
    }
}

/// Splits a late `--config PATH` or `--config=PATH` out of the overrides.
fn take_config(args: Args) -> Result<(Option<PathBuf>, Vec<String>), Error> {
    let mut config = args.config;
    let mut rest = Vec::new();
    let mut it = args.overrides.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it.next().ok_or_else(|| Error::Config("--config needs a path".into()))?;
            config = Some(PathBuf::from(p));
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    Ok((config, rest))
}

/// Runs the CLI and returns the process exit code. Output goes to stdout,
/// diagnostics to stderr as a single line.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, args) = match cli.command {
        Command::Train(a) => ("train", a),
        Command::Predict(a) => ("predict", a),
        Command::Eval(a) => ("eval", a),
        Command::Gen(a) => ("gen", a),
    };
    let result = take_config(args).and_then(|(path, overrides)| {
        let config = RunConfig::load(path.as_deref(), &overrides)?;
        if let Some(t) = config.threads {
            // a second call in the same process keeps the first pool
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
        match command {
            "train" => commands::cmd_train(&config),
            "predict" => commands::cmd_predict(&config),
            "eval" => commands::cmd_eval(&config),
            _ => commands::cmd_gen(&config),
        }
    });
    match result {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
            0
        }
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("grafdict {command}: {msg}");
            exit_code(&e)
        }
    }
}
