//! Command-line front end: layered configuration, subcommands and exit codes.

pub mod args;
pub mod commands;
pub mod config;
pub mod units;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::{Config, Layers};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ionhom::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use ionhom::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::Domain(_) | E::Config(_)) => EXIT_CONFIG,
            CliError::Core(E::Parse { .. } | E::Data(_) | E::Io(_)) => EXIT_DATA,
            CliError::Core(E::Numeric(_)) => EXIT_NUMERIC,
        }
    }
}

/// Folds flags that mirror configuration keys into `--set` assignments, so the
/// echoed configuration reproduces the run.
fn assignments(cli: &Cli) -> Vec<String> {
    let mut sets = cli.common.sets.clone();
    if let Some(dir) = &cli.common.out {
        sets.push(format!("output.dir={}", toml::Value::String(dir.display().to_string())));
    }
    if cli.common.strict {
        sets.push("output.strict=true".into());
    }
    match &cli.command {
        Command::Sweep { refine: true, .. } => sets.push("sweep.refine=true".into()),
        Command::Estimate { v, rgen, cperp, fiber_km, arms, dark_rate } => {
            let floats = [("v", v), ("r_gen", rgen), ("c_perp", cperp), ("fiber_km", fiber_km), ("dark_rate", dark_rate)];
            for (k, x) in floats {
                if let Some(x) = x {
                    sets.push(format!("link.{k}={}", toml::Value::Float(*x)));
                }
            }
            if let Some(a) = arms {
                sets.push(format!("link.attenuated_arms={a}"));
            }
        }
        Command::Sample { trials, seed, .. } => {
            if let Some(t) = trials {
                sets.push(format!("sample.trials={t}"));
            }
            if let Some(s) = seed {
                sets.push(format!("sample.seed={s}"));
            }
        }
        _ => {}
    }
    sets
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let sets = assignments(cli);
    let layers = Layers { preset: cli.common.preset.as_deref(), file: cli.common.config.as_deref(), sets: &sets };
    let mut cfg = Config::load(&layers)?;
    match &cli.command {
        Command::Simulate => commands::simulate(&cfg, out),
        Command::Sweep { sweep, jobs, .. } => {
            if let Some(path) = sweep {
                cfg.merge_sweep_file(path)?;
            }
            commands::sweep(&cfg, *jobs, out)
        }
        Command::Analyze { input, subtract_dark, shards } => {
            commands::analyze(&cfg, input, *subtract_dark, *shards, out)
        }
        Command::Estimate { .. } => commands::estimate(&cfg, cfg.output_dir()?.is_some(), out),
        Command::Sample { output, .. } => commands::sample(&cfg, output.as_deref(), out),
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}
