//! CSV output with a `#`-prefixed provenance header.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::RunConfig;

/// Marks the one header line that varies between identical runs.
pub const TIMESTAMP_PREFIX: &str = "# timestamp ";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key = value` lines after the config echo.
    pub notes: Vec<(String, String)>,
}

pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, k: &str, v: impl ToString) {
        self.notes.push((k.to_string(), v.to_string()));
    }

    pub fn render(&self, command: &str, cfg: &RunConfig, pass: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tancone {}", env!("CARGO_PKG_VERSION"));
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let _ = writeln!(s, "{TIMESTAMP_PREFIX}{secs}");
        let _ = writeln!(s, "# command = {command}");
        for (k, v) in cfg.echo() {
            let _ = writeln!(s, "# {k} = {v}");
        }
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "# status = {}", if pass { "pass" } else { "fail" });
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}
