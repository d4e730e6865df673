//! Deterministic artifact writers. Every file embeds the resolved
//! configuration and the toolkit version; nothing time-dependent is
//! written, so identical runs produce identical bytes.

use crate::config::RunConfig;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    toolkit_version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    data: T,
}

pub struct Sink<'a> {
    pub dir: PathBuf,
    pub command: &'a str,
    pub config: &'a RunConfig,
}

impl<'a> Sink<'a> {
    pub fn new(dir: &Path, command: &'a str, config: &'a RunConfig) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            command,
            config,
        })
    }

    /// JSON artifact with the config envelope; struct key order is stable.
    pub fn write_json<T: Serialize>(&self, name: &str, data: &T) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let envelope = Envelope {
            toolkit_version: VERSION,
            command: self.command,
            config: self.config,
            data,
        };
        let mut file = std::fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut file, &envelope)?;
        file.write_all(b"\n")?;
        Ok(path)
    }

    /// CSV artifact, RFC-4180 quoting, preceded by `#` comment lines that
    /// carry the version and the resolved configuration.
    pub fn write_csv(
        &self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        let mut file = std::fs::File::create(&path)?;
        writeln!(file, "# depletion {VERSION} {}", self.command)?;
        writeln!(
            file,
            "# config = {}",
            serde_json::to_string(self.config).expect("config serializes")
        )?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        Ok(path)
    }
}

/// Shortest-round-trip float formatting shared by all CSV writers.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::from("nan")
    }
}
