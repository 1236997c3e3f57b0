//! Command-line scans of the Happer model: spectra, Chern numbers, loop
//! phases, driven dynamics and the projected-band comparison with a spin
//! semimetal. The `happer` binary is a thin clap wrapper over [`execute`].

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Result;

pub mod commands;
pub mod config;
pub mod output;

use config::{read_config_file, Command, ScanConfig};
use output::Table;

/// Exit status when every check passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when the run finished but a check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for configuration, I/O or numerical errors.
pub const EXIT_ERROR: i32 = 2;

/// Resolve the configuration, run `command` and write its table to `out`
/// (or stdout). Returns the table for inspection.
pub fn execute(command: Command, config_file: Option<&Path>, flags: &BTreeMap<String, String>) -> Result<Table> {
    let file = match config_file {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let cfg = ScanConfig::resolve(command, &file, flags)?;
    let mut table = commands::run(&cfg)?;
    commands::random_checks(&cfg, &mut table)?;
    output::write_bytes(cfg.out.as_deref(), &table.render(cfg.format)?)?;
    Ok(table)
}
