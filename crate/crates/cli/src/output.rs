//! Output plumbing: headers, writers and input readers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Provenance carried by every report and table.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config_sha256: String,
}

impl Header {
    pub fn new(command: &'static str, seed: Option<u64>, config: &impl Serialize) -> Self {
        let text = serde_json::to_string(config).expect("configs serialise");
        Self {
            tool: "treeprune",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config_sha256: format!("{:x}", Sha256::digest(text.as_bytes())),
        }
    }

    /// Comment line placed above CSV tables.
    pub fn csv_comment(&self) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        format!(
            "# {} {} command={} seed={} config_sha256={}\n",
            self.tool, self.version, self.command, seed, self.config_sha256
        )
    }
}

pub fn runtime_io(e: io::Error) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}

/// Buffered writer on a file, or on stdout when no path is given.
pub fn writer(path: Option<&str>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Runtime(format!("cannot create {p}: {e}")))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn create_dir(path: &str) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("cannot create {path}: {e}")))
}

/// Reader on a file, or on stdin for "-".
pub fn reader(path: &str) -> CliResult<Box<dyn BufRead>> {
    if path == "-" {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot open {path}: {e}")))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_to_string(path: &str) -> CliResult<String> {
    let mut text = String::new();
    reader(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
    Ok(text)
}
