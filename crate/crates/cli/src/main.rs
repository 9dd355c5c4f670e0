//! `nanospec` command line. Exit status: 0 on success, 1 for a bad
//! configuration, 2 when the computation fails, 3 when verification fails or
//! `--validate` finds a counting violation.

mod config;
mod report;
mod run;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, FileConfig, Flags, RunConfig};

const THREADS_VAR: &str = "NANOSPEC_THREADS";

fn main() -> ExitCode {
    let flags = match Flags::try_parse() {
        Ok(flags) => flags,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cfg = match configure(&flags) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("nanospec: {e}");
            return ExitCode::from(1);
        }
    };
    let report = run::run(&cfg);
    if let Err(e) = emit(&cfg, &report) {
        eprintln!("nanospec: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if let Some(err) = &report.error {
        eprintln!("nanospec: {}", err.message);
        return ExitCode::from(2);
    }
    let verify_failed = report.verify.as_ref().is_some_and(|v| !v.passed);
    let validate_failed = cfg.validate && report.validation.as_ref().is_some_and(|v| !v.passed);
    if verify_failed || validate_failed {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn configure(flags: &Flags) -> Result<RunConfig, ConfigError> {
    let file = match &flags.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(flags, &file)?;
    threads()?;
    Ok(cfg)
}

/// `NANOSPEC_THREADS` sizes the worker pool; 0 or unset lets rayon choose.
fn threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| ConfigError::Field {
        field: THREADS_VAR,
        message: format!("expected a non-negative integer, got {raw:?}"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Field { field: THREADS_VAR, message: e.to_string() })
}

fn emit(cfg: &RunConfig, report: &report::Report) -> io::Result<()> {
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.write(cfg.format, &mut *out)?;
    out.flush()
}
