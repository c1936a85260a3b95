//! Run artifacts: `summary.json`, `data.csv`, and `figure.svg` in the run
//! directory, each written atomically (temp file + rename). The summary
//! isolates the only run-varying field, the timestamp, inside `metadata`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::errors::CliError;

pub struct RunDir {
    pub dir: PathBuf,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<RunDir, CliError> {
        fs::create_dir_all(dir).map_err(|e| {
            CliError::Config(format!("cannot create output dir {}: {e}", dir.display()))
        })?;
        Ok(RunDir { dir: dir.to_path_buf() })
    }

    /// The worker count is deliberately absent: results must not depend on
    /// it, so recording it would break the byte-stability contract of the
    /// summary (everything outside `metadata.timestamp` is reproducible).
    pub fn write_summary(
        &self,
        command: &str,
        seed: u64,
        config: Value,
        results: Value,
    ) -> Result<PathBuf, CliError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let summary = json!({
            "metadata": {
                "tool": "wrl",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "timestamp": timestamp,
                "seed": seed,
            },
            "config": config,
            "results": results,
        });
        let path = self.dir.join("summary.json");
        let mut text = serde_json::to_string_pretty(&summary)
            .map_err(|e| CliError::Numerical(format!("summary serialization: {e}")))?;
        text.push('\n');
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn write_csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let mut text = String::new();
        text.push_str(&header.join(","));
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let path = self.dir.join("data.csv");
        atomic_write(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn write_svg(&self, svg: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join("figure.svg");
        atomic_write(&path, svg.as_bytes())?;
        Ok(path)
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, bytes)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::Config(format!("cannot move into place {}: {e}", path.display())))?;
    Ok(())
}

/// Shortest round-trip decimal for CSV cells.
pub fn num(x: f64) -> String {
    format!("{x}")
}
