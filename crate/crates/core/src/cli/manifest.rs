//! Run manifests written next to every command output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(InputDigest { path: path.to_path_buf(), sha256: sha256_hex(&fs::read(path)?) })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub rng: String,
    pub seed: u64,
    pub workers: usize,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn start(command: &str, seed: u64, workers: usize, config: serde_json::Value, inputs: &[&Path]) -> Result<Self> {
        let inputs = inputs.iter().map(InputDigest::of).collect::<Result<Vec<_>>>()?;
        let now = timestamp();
        Ok(RunManifest {
            command: command.to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: rng::GENERATOR.to_string(),
            seed,
            workers,
            config,
            inputs,
            outputs: Vec::new(),
            started: now.clone(),
            finished: now,
        })
    }

    /// Stamps the end time and writes the manifest for `output`.
    pub fn finish(mut self, output: &Path) -> Result<PathBuf> {
        self.outputs = vec![output.to_path_buf()];
        self.finished = timestamp();
        let path = manifest_path(output);
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")?;
        Ok(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Re-hashes every input; any change since the run is a consistency error.
    pub fn verify_inputs(&self) -> Result<()> {
        for input in &self.inputs {
            let now = InputDigest::of(&input.path)?;
            if now.sha256 != input.sha256 {
                return Err(Error::Consistency(format!("{} changed since the run", input.path.display())));
            }
        }
        Ok(())
    }
}

/// `<output>.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
