//! Run directory: `report.json`, data files and a log.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use super::CliError;

pub const SCHEMA: &str = "v1";

/// A numeric result with the tolerance it was tested against.
pub fn num(value: f64, tol: f64) -> Value {
    json!({ "value": finite(value), "tol": tol })
}

/// An integer result; integers are compared exactly.
pub fn exact(value: i64) -> Value {
    json!({ "value": value, "tol": 0 })
}

/// A complex result as `[re, im]` with its tolerance.
pub fn complex(value: num_complex::Complex64, tol: f64) -> Value {
    json!({ "value": [finite(value.re), finite(value.im)], "tol": tol })
}

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

pub struct RunDir {
    path: PathBuf,
    log: Vec<String>,
    files: Vec<String>,
}

impl RunDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(RunDir { path: path.to_path_buf(), log: Vec::new(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn log(&mut self, line: impl Into<String>) {
        self.log.push(line.into());
    }

    /// Write a CSV file with a header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let p = self.path.join(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", p.display()));
        let mut w = csv::Writer::from_path(&p).map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(&r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    /// Open a file in the run directory for a writer that produces its own
    /// format.
    pub fn create_file(&mut self, name: &str) -> Result<fs::File, CliError> {
        let p = self.path.join(name);
        let f = fs::File::create(&p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        self.files.push(name.to_string());
        Ok(f)
    }

    /// Write `report.json`, `run.json` (timestamp) and `run.log`.
    pub fn finish(mut self, command: &str, seed: u64, status: &str, results: Map<String, Value>, elapsed: f64) -> Result<(), CliError> {
        self.files.sort();
        let report = json!({
            "schema": SCHEMA,
            "command": command,
            "seed": seed,
            "status": status,
            "results": Value::Object(results),
            "files": self.files,
        });
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))? + "\n";
        let write = |name: &str, body: &str| fs::write(self.path.join(name), body).map_err(|e| CliError::Io(format!("{name}: {e}")));
        write("report.json", &text)?;
        let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let run = json!({ "timestamp": stamp, "elapsed_seconds": elapsed });
        write("run.json", &(serde_json::to_string_pretty(&run).map_err(|e| CliError::Io(e.to_string()))? + "\n"))?;
        let mut log = self.log.join("\n");
        log.push('\n');
        write("run.log", &log)
    }
}
