//! CSV artifacts. Every file opens with the command, seed and config digest
//! as `#` lines; `wall_time` (seconds) is always the last column so the rest
//! of each row is reproducible byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::RunConfig;
use crate::CliError;

pub struct Table {
    pub columns: Vec<&'static str>,
    /// Cells without the wall time, and the wall time.
    pub rows: Vec<(Vec<String>, f64)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<String>, wall_time: f64) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push((cells, wall_time));
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

pub fn render(cfg: &RunConfig, table: &Table) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# command={}", cfg.params.command());
    let _ = writeln!(s, "# seed={}", cfg.seed);
    let _ = writeln!(s, "# config_digest={}", cfg.digest());
    let _ = writeln!(s, "{},wall_time", table.columns.join(","));
    for (cells, wall) in &table.rows {
        let cells: Vec<String> = cells.iter().map(|c| quote(c)).collect();
        let _ = writeln!(s, "{},{wall:.6}", cells.join(","));
    }
    s
}

pub fn write(cfg: &RunConfig, table: &Table, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, render(cfg, table))
        .map_err(|e| CliError::compute(format!("cannot write {}: {e}", path.display())))
}

/// Full-precision float cell.
pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}
