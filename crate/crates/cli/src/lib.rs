//! Command-line front end for the Willmore foliation library.

pub mod commands;
pub mod config;
pub mod report;

use anyhow::Result;
use serde::Serialize;
use std::path::Path;

pub use commands::{run, Check, Outcome};
pub use config::{Command, Overrides, RunConfig};

#[derive(Serialize)]
struct Versions {
    willmore: &'static str,
}

#[derive(Serialize)]
struct RunRecord<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a RunConfig,
    versions: Versions,
    passed: bool,
    checks: &'a [Check],
    failures: &'a [String],
    outputs: Vec<&'a str>,
    traces: &'a [commands::Trace],
}

/// Write every table and `run.json` into the output directory.
pub fn write_outputs(cfg: &RunConfig, out: &Outcome) -> Result<()> {
    let dir: &Path = &cfg.output_dir;
    for (name, t) in &out.tables {
        report::write_table(dir, name, t)?;
    }
    let rec = RunRecord {
        schema_version: report::SCHEMA_VERSION,
        command: cfg.command.map(Command::name).unwrap_or(""),
        config: cfg,
        versions: Versions { willmore: env!("CARGO_PKG_VERSION") },
        passed: out.passed(),
        checks: &out.checks,
        failures: &out.failures,
        outputs: out.tables.iter().map(|(n, _)| n.as_str()).collect(),
        traces: &out.traces,
    };
    let mut v = serde_json::to_vec_pretty(&rec)?;
    v.push(b'\n');
    std::fs::write(dir.join("run.json"), v)?;
    Ok(())
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.failures.is_empty()
    }
}
