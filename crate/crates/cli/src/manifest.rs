//! Run manifests: a JSON sidecar recording everything that determines a
//! command's output, plus a digest of those fields that outputs refer back to.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::ResolvedConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// The digest covers these fields only. Paths are left out so that moving
/// files around does not change it; contents are covered by their hashes.
#[derive(Serialize)]
struct Deterministic<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: ResolvedConfig,
    inputs: BTreeMap<&'a str, &'a str>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u128,
    pub threads: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ResolvedConfig,
    pub inputs: BTreeMap<String, InputDigest>,
    pub outputs: Vec<PathBuf>,
    pub digest: String,
    /// Not part of the digest.
    pub timing: Timing,
}

pub struct ManifestBuilder {
    command: String,
    config: ResolvedConfig,
    inputs: BTreeMap<String, InputDigest>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            config: ResolvedConfig::default(),
            inputs: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    pub fn config(&mut self) -> &mut ResolvedConfig {
        &mut self.config
    }

    pub fn input(&mut self, role: &str, path: &Path) -> anyhow::Result<()> {
        let sha256 = file_digest(path)?;
        self.inputs.insert(
            role.to_owned(),
            InputDigest {
                path: path.to_owned(),
                sha256,
            },
        );
        Ok(())
    }

    pub fn digest(&self) -> String {
        let core = Deterministic {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: {
                let mut config = self.config.clone();
                if let Some(e) = config.embeddings.as_mut() {
                    e.path = PathBuf::new();
                }
                config
            },
            inputs: self
                .inputs
                .iter()
                .map(|(role, d)| (role.as_str(), d.sha256.as_str()))
                .collect(),
        };
        let bytes = serde_json::to_vec(&core).expect("manifest fields serialize");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn finish(self, outputs: Vec<PathBuf>) -> RunManifest {
        RunManifest {
            digest: self.digest(),
            tool: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: self.command,
            config: self.config,
            inputs: self.inputs,
            outputs,
            timing: Timing {
                elapsed_ms: self.started.elapsed().as_millis(),
                threads: rayon::current_num_threads(),
            },
        }
    }
}

impl RunManifest {
    /// Writes `<primary>.manifest.json` next to the primary output.
    pub fn write_beside(&self, primary: &Path) -> anyhow::Result<PathBuf> {
        let path = sidecar_path(primary);
        let file =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        serde_json::to_writer_pretty(file, self)?;
        Ok(path)
    }
}

pub fn sidecar_path(primary: &Path) -> PathBuf {
    let mut name = primary.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn file_digest(path: &Path) -> anyhow::Result<String> {
    let file = File::open(path).map_err(|e| anygram::Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    io::copy(&mut BufReader::new(file), &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}
