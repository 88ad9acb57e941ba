//! Configuration, commands and output for the `dunkl-annulus` binary.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use commands::{Command, Outcome};
pub use config::{parse_config, RunConfig};
pub use error::CliError;

#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub kind: String,
    pub message: String,
}

/// Contents of `run.json`.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub command: String,
    pub status: String,
    pub config: Option<RunConfig>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<commands::Check>,
    pub files: Vec<String>,
    pub wall_time_s: f64,
    pub diagnostic: Option<Diagnostic>,
}

pub fn write_csv(path: &Path, table: &commands::Table) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.render()))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `command` and writes `<command>.csv` and `run.json` into `out`.
/// Returns the exit status: 0 success, 1 tolerance or computation failure,
/// 2 configuration error.
pub fn execute(command: Command, config_path: &Path, out: &Path, seed: Option<u64>) -> i32 {
    let start = Instant::now();
    let mut summary = Summary {
        command: command.name().into(),
        status: "error".into(),
        config: None,
        metrics: BTreeMap::new(),
        checks: Vec::new(),
        files: Vec::new(),
        wall_time_s: 0.0,
        diagnostic: None,
    };
    let result = (|| -> Result<bool, CliError> {
        let text = fs::read_to_string(config_path).map_err(|source| CliError::Read { path: config_path.display().to_string(), source })?;
        let mut cfg = parse_config(&text)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        summary.config = Some(cfg.clone());
        let outcome = commands::run(command, &cfg)?;
        fs::create_dir_all(out)?;
        let file = format!("{}.csv", command.name());
        write_csv(&out.join(&file), &outcome.table)?;
        summary.files.push(file);
        let passed = outcome.passed();
        summary.metrics = outcome.metrics;
        summary.checks = outcome.checks;
        Ok(passed)
    })();
    let code = match &result {
        Ok(true) => {
            summary.status = "ok".into();
            0
        }
        Ok(false) => {
            summary.status = "tolerance_failure".into();
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            summary.diagnostic = Some(Diagnostic { kind: e.kind().into(), message: e.to_string() });
            e.exit_code()
        }
    };
    summary.wall_time_s = start.elapsed().as_secs_f64();
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    if let Err(e) = fs::create_dir_all(out).and_then(|_| fs::write(out.join("run.json"), json + "\n")) {
        eprintln!("error: cannot write run.json: {e}");
        return code.max(1);
    }
    for c in summary.checks.iter().filter(|c| !c.passed) {
        eprintln!("check {} failed: {:e} (tolerance {:e})", c.name, c.measured, c.tolerance);
    }
    code
}
