//! CSV tables with a provenance header, JSON reports, and file/stdout sinks.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use zs_core::report::Report;

use crate::error::AppError;

/// A numeric table; written as `# zs <version> config=<hash> seed=<seed>`,
/// a column header row, then the records.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, config_hash: &str, seed: u64) -> Result<Vec<u8>, AppError> {
        let mut buf = format!("# zs {} config={config_hash} seed={seed}\n", env!("CARGO_PKG_VERSION")).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let csv_err = |e: csv::Error| AppError::config_msg(format!("csv: {e}"));
            w.write_record(&self.columns).map_err(csv_err)?;
            for r in &self.rows {
                w.write_record(r).map_err(csv_err)?;
            }
            w.flush().map_err(|e| AppError::config_msg(format!("csv: {e}")))?;
        }
        Ok(buf)
    }
}

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// The artifacts of one run, written only after the run has finished.
#[derive(Debug, Default)]
pub struct Artifacts {
    /// (destination, bytes); `None` means stdout
    pub files: Vec<(Option<PathBuf>, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: Option<&Path>, bytes: Vec<u8>) {
        self.files.push((path.map(Path::to_path_buf), bytes));
    }

    pub fn write(&self) -> Result<(), AppError> {
        for (path, bytes) in &self.files {
            match path {
                Some(p) => std::fs::write(p, bytes).map_err(|e| AppError::io(p, e))?,
                None => {
                    let mut out = std::io::stdout().lock();
                    out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| AppError::io(Path::new("<stdout>"), e))?
                }
            }
        }
        Ok(())
    }
}

/// Seconds since the epoch, from SOURCE_DATE_EPOCH when set so that
/// reports are reproducible.
pub fn timestamp() -> String {
    if let Ok(s) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(v) = s.trim().parse::<u64>() {
            return v.to_string();
        }
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string()
}

pub fn report_json(report: &Report) -> Vec<u8> {
    let mut r = report.clone();
    r.timestamp = timestamp();
    let mut bytes = serde_json::to_vec_pretty(&r).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

pub fn json_bytes(value: &impl serde::Serialize) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("value serializes");
    bytes.push(b'\n');
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_columns() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), num(0.5)]);
        let text = String::from_utf8(t.render("abc", 7).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], format!("# zs {} config=abc seed=7", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,5e-1");
    }
}
