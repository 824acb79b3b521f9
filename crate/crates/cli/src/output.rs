//! File output: atomic writes, CSV number formatting, config hashing and run
//! manifests.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const OUT_ENV: &str = "STRAINGRID_OUT";
pub const DEFAULT_OUT: &str = "straingrid-out";

/// `--out`, then `$STRAINGRID_OUT`, then `./straingrid-out`.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| {
        io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name")
    })?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn write_output(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    write_atomic(path, contents)
        .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))
}

/// Shortest decimal that round-trips to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Rounds to 15 significant digits for human-facing JSON.
pub fn sig15(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Hex SHA-256 of the config with object keys sorted.
pub fn config_hash(config: &Value) -> String {
    // serde_json's default map is ordered by key.
    let canonical = serde_json::to_string(config).expect("JSON values serialize");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub arguments: Vec<String>,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub rng: &'static str,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &Value, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            arguments: std::env::args().skip(1).collect(),
            config_sha256: config_hash(config),
            seed,
            rng: straingrid_core::config::RNG_NAME,
            wall_time_seconds: 0.0,
            outputs: Vec::new(),
            error: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_output(path, text.as_bytes())
    }
}
