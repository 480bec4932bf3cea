//! Experiment runner behind the `saftkit` binary.

pub mod config;
pub mod experiment;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{ConfigError, Validated};
use output::PlotKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable that replaces the configured base seed.
pub const SEED_ENV: &str = "SAFTKIT_SEED";

#[derive(Debug, Parser)]
#[command(name = "saftkit", version, about = "Seeded sparse-recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run all trials of a configuration and write reports.
    Run {
        config: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration without running it.
    Validate { config: PathBuf },
    /// Regenerate plot data from a report.
    Plotdata {
        report: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Output file; defaults to `plot_<kind>.dat` beside the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn seed_override(env: Option<String>) -> Result<Option<u64>, String> {
    match env {
        None => Ok(None),
        Some(s) => s
            .trim()
            .parse::<u64>()
            .map(Some)
            .map_err(|_| format!("{SEED_ENV} must be an unsigned integer, got {s:?}")),
    }
}

fn load(path: &std::path::Path, err: &mut dyn Write) -> Result<Validated, i32> {
    let seed = seed_override(std::env::var(SEED_ENV).ok()).map_err(|m| {
        let _ = writeln!(err, "error: {m}");
        EXIT_CONFIG
    })?;
    match config::load_config(path, seed) {
        Ok(v) => {
            for w in &v.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            Ok(v)
        }
        Err(ConfigError::Io { .. }) => {
            let _ = writeln!(err, "error: cannot read {}", path.display());
            Err(EXIT_IO)
        }
        Err(ConfigError::Invalid(issues)) => {
            for i in &issues {
                let _ = writeln!(err, "error: {i}");
            }
            Err(EXIT_CONFIG)
        }
    }
}

/// Parse arguments and execute; returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            if e.use_stderr() {
                let _ = write!(err, "{e}");
            } else {
                let _ = write!(out, "{e}");
            }
            return code;
        }
    };
    match cli.command {
        Command::Validate { config } => match load(&config, err) {
            Ok(_) => {
                let _ = writeln!(out, "ok");
                EXIT_OK
            }
            Err(code) => code,
        },
        Command::Run { config, jobs, out: dir } => {
            let v = match load(&config, err) {
                Ok(v) => v,
                Err(code) => return code,
            };
            let (report, meta) = match experiment::run_experiment(&v, jobs) {
                Ok(r) => r,
                Err(issues) => {
                    for i in &issues {
                        let _ = writeln!(err, "error: {i}");
                    }
                    return EXIT_CONFIG;
                }
            };
            let dir = dir
                .or_else(|| v.config.output.dir.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("saftkit-out"));
            if let Err(e) = output::write_outputs(&dir, &report, &meta) {
                let _ = writeln!(err, "error: writing {}: {e}", dir.display());
                return EXIT_IO;
            }
            let a = &report.aggregates;
            let _ = writeln!(
                out,
                "{} trials: {} succeeded, {} stage errors, success rate {} -> {}",
                a.trials,
                a.succeeded,
                a.stage_errors,
                a.success_rate,
                dir.display()
            );
            if a.stage_errors == a.trials {
                for t in report.trials.iter().take(1) {
                    if let experiment::Outcome::Error { message, .. } = &t.outcome {
                        let _ = writeln!(err, "error: every trial failed; first: {message}");
                    }
                }
                EXIT_STAGE
            } else {
                EXIT_OK
            }
        }
        Command::Plotdata { report, kind, out: file } => {
            let rep = match output::read_report(&report) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(err, "error: reading {}: {e}", report.display());
                    return EXIT_IO;
                }
            };
            let path = file.unwrap_or_else(|| {
                report
                    .parent()
                    .unwrap_or_else(|| std::path::Path::new("."))
                    .join(kind.file_name())
            });
            match std::fs::write(&path, output::plot_data(&rep, kind)) {
                Ok(()) => {
                    let _ = writeln!(out, "{}", path.display());
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "error: writing {}: {e}", path.display());
                    EXIT_IO
                }
            }
        }
    }
}
