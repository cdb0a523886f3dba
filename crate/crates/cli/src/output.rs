//! Deterministic, atomic output writing and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Collects output files for one run and writes each atomically
/// (temp file in the same directory, then rename).
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
    warnings: Vec<String>,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            warnings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let tmp = self.dir.join(format!(".tmp.{name}"));
        let target = self.dir.join(name);
        fs::write(&tmp, contents)?;
        fs::rename(&tmp, &target)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("json serialization: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Finish the run: write the manifest recording the config hash,
    /// seed, toolkit version, wall time, outputs and warnings.
    pub fn finish(self, kind: &str, config_text: &str, seed: Option<u64>) -> Result<(), CliError> {
        let manifest = serde_json::json!({
            "kind": kind,
            "config_sha256": sha256_hex(config_text.as_bytes()),
            "seed": seed,
            "toolkit_version": env!("CARGO_PKG_VERSION"),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "outputs": self.written,
            "warnings": self.warnings,
        });
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Io(format!("json serialization: {e}")))?;
        text.push('\n');
        let tmp = self.dir.join(".tmp.manifest.json");
        fs::write(&tmp, text)?;
        fs::rename(tmp, self.dir.join("manifest.json"))?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// CSV assembly with a fixed header; floats use Rust's shortest
/// round-trip formatting, so identical values always produce identical
/// bytes.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut buf = String::with_capacity(4096);
        buf.push_str(header);
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match f {
                CsvField::Int(v) => self.buf.push_str(&v.to_string()),
                CsvField::Float(v) => self.buf.push_str(&v.to_string()),
                CsvField::Str(s) => self.buf.push_str(s),
            }
        }
        self.buf.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}

pub enum CsvField<'a> {
    Int(i64),
    Float(f64),
    Str(&'a str),
}
