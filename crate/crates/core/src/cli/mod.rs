//! Command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 numerical
//! invariant failure.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::backend::BackendRegistry;
use commands::{run_constraint, run_correlations, run_lg, run_record, CommandError};
use config::{canonical_key, read_config_file, Format, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "reltime", version, about = "Relational-time history states and Leggett-Garg statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constraint residual of the free history plus the dense kernel oracle.
    Constraint(Flags),
    /// Joint and conditional two-time laws over a phase grid.
    Correlations(Flags),
    /// Leggett-Garg K3 over a phase grid, or the reference table with --table1.
    Lg(Flags),
    /// Every dataset in one JSON document.
    RunRecord(Flags),
    /// List registered correlation backends.
    Backends,
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// key=value file applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Clock lattice size n (even, at least 4)
    #[arg(long)]
    pub clock_n: Option<usize>,
    /// Clock lattice spacing
    #[arg(long)]
    pub dt: Option<f64>,
    /// Harmonic j in omega = 2 pi j / (n dt)
    #[arg(long, allow_hyphen_values = true)]
    pub omega_index: Option<i64>,
    /// Clock index of the first measurement
    #[arg(long)]
    pub ka: Option<usize>,
    /// Clock index of the second measurement
    #[arg(long)]
    pub kb: Option<usize>,
    /// Comma-separated phases; `pi/6`, `2pi/3` and plain numbers accepted.
    #[arg(long, allow_hyphen_values = true)]
    pub phases: Option<String>,
    /// Detections per correlation; 0 keeps exact mode.
    #[arg(long)]
    pub shots: Option<u64>,
    /// Master seed for sampling
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Exact correlation backend (closed-form, history, propagator).
    #[arg(long)]
    pub backend: Option<String>,
    /// Emit the three reference phases with the published theory values.
    #[arg(long)]
    pub table1: bool,
    /// Fit omega per phase with gap kb - ka instead of requiring lattice multiples.
    #[arg(long)]
    pub fit_omega: bool,
    /// Use omega = 2 pi h / (n dt) for any real h, bypassing commensurability.
    #[arg(long, allow_hyphen_values = true)]
    pub incommensurate_harmonic: Option<f64>,
    /// Evaluate grid points on a thread pool; output order is unchanged.
    #[arg(long)]
    pub parallel: bool,
}

impl Flags {
    /// File settings first, then flags.
    pub fn resolve(&self) -> Result<RunConfig, config::ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply(&read_config_file(path)?)?;
        }
        let mut over = std::collections::BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                over.insert(canonical_key(k), v);
            }
        };
        put("clock-n", self.clock_n.map(|v| v.to_string()));
        put("dt", self.dt.map(|v| v.to_string()));
        put("omega-index", self.omega_index.map(|v| v.to_string()));
        put("ka", self.ka.map(|v| v.to_string()));
        put("kb", self.kb.map(|v| v.to_string()));
        put("phases", self.phases.clone());
        put("shots", self.shots.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("format", self.format.clone());
        put("backend", self.backend.clone());
        put("table1", self.table1.then(|| "true".into()));
        put("fit-omega", self.fit_omega.then(|| "true".into()));
        put("incommensurate-harmonic", self.incommensurate_harmonic.map(|v| v.to_string()));
        put("parallel", self.parallel.then(|| "true".into()));
        cfg.apply(&over)?;
        Ok(cfg)
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CommandError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CommandError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CommandError::Io(e.to_string())),
    }
}

fn rows_result(errors: usize) -> Result<(), CommandError> {
    if errors > 0 {
        Err(CommandError::Rows(errors))
    } else {
        Ok(())
    }
}

pub fn execute(command: &Command) -> Result<(), CommandError> {
    let registry = BackendRegistry::with_defaults();
    let flags = match command {
        Command::Backends => {
            let names: Vec<&str> = registry.names().collect();
            println!("{}", names.join("\n"));
            return Ok(());
        }
        Command::Constraint(f) | Command::Correlations(f) | Command::Lg(f) | Command::RunRecord(f) => f,
    };
    let cfg = flags.resolve()?;
    cfg.validate(&registry)?;

    match command {
        Command::Constraint(_) => {
            let report = run_constraint(&cfg)?;
            if !report.commensurate {
                eprintln!(
                    "warning: incommensurate frequency; the constraint residual is not expected to vanish"
                );
            }
            let text = match cfg.format {
                Format::Csv => report.csv(),
                Format::Json => output::json(&report),
            };
            emit(&cfg, &text)?;
            let failures = report.failures();
            if let Some(f) = failures.first() {
                return Err(CommandError::Numerical(format!(
                    "{} residual {} exceeds {}",
                    f.check, f.residual, f.threshold
                )));
            }
            Ok(())
        }
        Command::Correlations(_) => {
            let data = run_correlations(&cfg, &registry)?;
            report_row_errors(data.rows.iter().map(|r| (r.phase, r.error.as_deref())));
            let text = match cfg.format {
                Format::Csv => data.csv(),
                Format::Json => output::json(&data.rows),
            };
            emit(&cfg, &text)?;
            rows_result(data.error_count())
        }
        Command::Lg(_) => {
            let data = run_lg(&cfg, &registry)?;
            report_row_errors(data.rows.iter().map(|r| (r.x, r.error.as_deref())));
            let text = match cfg.format {
                Format::Csv => data.csv(),
                Format::Json => output::json(&data.rows),
            };
            emit(&cfg, &text)?;
            rows_result(data.error_count())
        }
        Command::RunRecord(_) => {
            let start = Instant::now();
            let (mut record, errors) = run_record(&cfg, &registry)?;
            record["duration_s"] = serde_json::json!(start.elapsed().as_secs_f64());
            emit(&cfg, &output::json(&record))?;
            rows_result(errors)
        }
        Command::Backends => unreachable!(),
    }
}

fn report_row_errors<'a>(rows: impl Iterator<Item = (f64, Option<&'a str>)>) {
    for (i, (x, e)) in rows.enumerate() {
        if let Some(e) = e {
            eprintln!("row {i} (phase {x}): {e}");
        }
    }
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
