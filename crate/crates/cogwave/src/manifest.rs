//! Run manifests.
//!
//! Every command leaves a `manifest.json` holding the fully resolved
//! configuration, so `cogwave replay` can regenerate the same bytes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    /// Version of the crate that produced the run.
    pub version: String,
    /// Resolved configuration; file references are inlined where possible.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    /// SHA-256 of the mask file the run used or produced.
    pub mask_sha256: Option<String>,
    /// SHA-256 of every input file still read by path.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: &impl Serialize) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).expect("configs serialize"),
            seeds: Vec::new(),
            mask_sha256: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        io::write_json(&dir.join(FILE_NAME), self)
    }

    /// Decode the configuration snapshot.
    pub fn config<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        io::parse_json(&self.config.to_string(), "manifest config")
    }

    /// Record an input file by content hash.
    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.inputs.insert(path.display().to_string(), io::sha256_hex(&bytes));
        Ok(())
    }

    /// Fail if an input changed since the run was recorded.
    pub fn check_inputs(&self) -> Result<()> {
        for (path, hash) in &self.inputs {
            let bytes = std::fs::read(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            if &io::sha256_hex(&bytes) != hash {
                return Err(Error::format(path.clone(), "input changed since the manifest was written"));
            }
        }
        Ok(())
    }
}
