//! CSV/JSON writers and the run manifest.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Command;

/// Full-precision numeric field: 17 significant digits, enough to round-trip
/// any `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Opens a CSV writer over any sink. Fields are quoted only when needed, and
/// records end in CRLF.
pub fn csv_writer<W: Write>(sink: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(sink)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub config_path: String,
    /// The config file exactly as read.
    pub config_text: String,
    /// The config after defaults and flag overrides were applied.
    pub resolved: serde_json::Value,
    /// The invocation, flags included.
    pub invocation: Command,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn load(path: &Path) -> io::Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Manifest location: the explicit path, else next to the primary output,
/// else `<command>-manifest.json` in the working directory.
pub fn manifest_path(explicit: Option<&Path>, out: Option<&Path>, command: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    match out {
        Some(o) => {
            let mut name = o.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            name.push(".manifest.json");
            o.with_file_name(name)
        }
        None => PathBuf::from(format!("{command}-manifest.json")),
    }
}
