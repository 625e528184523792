//! Output directory, CSV writers and the JSON summary/provenance pair.
//!
//! Data files and `summary.json` depend only on the configuration and seed;
//! wall-clock information goes to `provenance.json` alone.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

pub const MARGINALS_HEADER: [&str; 3] = ["k", "x", "p"];
pub const COVARIANCE_HEADER: [&str; 3] = ["i", "j", "cov"];
pub const SWEEP_HEADER: [&str; 5] = ["lambda", "H", "quantity", "value", "stderr"];
pub const COUPLING_HEADER: [&str; 4] = ["lambda", "N", "p_no_meet", "stderr"];
pub const TV_HEADER: [&str; 3] = ["lambda", "N", "tv"];

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    wall_clock: u64,
}

impl Output {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            wall_clock: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_path(self.dir.join(name))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(
        mut self,
        command: &str,
        config_hash: &str,
        seed: u64,
        results: impl Serialize,
    ) -> std::io::Result<()> {
        self.files.sort();
        let summary = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": config_hash,
            "seed": seed,
            "files": self.files,
            "results": serde_json::to_value(results).map_err(std::io::Error::other)?,
        });
        write_json(&self.dir.join("summary.json"), &summary)?;
        let provenance = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_hash": config_hash,
            "seed": seed,
            "wall_clock_unix": self.wall_clock,
            "elapsed_seconds": self.started.elapsed().as_secs_f64(),
        });
        write_json(&self.dir.join("provenance.json"), &provenance)
    }
}

fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    fs::write(
        path,
        serde_json::to_string_pretty(value).map_err(std::io::Error::other)? + "\n",
    )
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
