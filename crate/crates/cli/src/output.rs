//! Artifact writing: deterministic JSON, hashes, run ids and sidecars.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_bytes(&fs::read(path).map_err(|e| CliError::io(path, e))?))
}

/// Deterministic run id from the command name, its effective
/// configuration and the hashes of its inputs.
pub fn run_id<T: Serialize>(command: &str, config: &T, input_hashes: &[String]) -> Result<String> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(serde_json::to_vec(config).map_err(|e| CliError::Data(e.to_string()))?);
    for i in input_hashes {
        h.update(i.as_bytes());
    }
    Ok(hex::encode(h.finalize())[..16].to_string())
}

/// Non-deterministic run facts kept out of primary outputs.
pub struct Sidecar {
    path: PathBuf,
    started: Instant,
    started_unix: u64,
}

impl Sidecar {
    pub fn start(out: &Path, command: &str) -> Self {
        Sidecar {
            path: out.join(format!("{command}.run.json")),
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn finish(self, run_id: &str, extra: serde_json::Value) -> Result<()> {
        let v = serde_json::json!({
            "run_id": run_id,
            "started_unix": self.started_unix,
            "elapsed_s": self.started.elapsed().as_secs_f64(),
            "workers": rayon::current_num_threads(),
            "details": extra,
        });
        write_json(&self.path, &v)
    }
}
