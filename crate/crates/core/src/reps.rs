//! Serialized selection results: which nodes a selector picked, under what
//! budget and seed, so evaluation can run on a separate invocation.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentativeSet {
    pub selector: String,
    pub seed: u64,
    pub k: usize,
    pub nodes: Vec<usize>,
}

impl RepresentativeSet {
    pub fn new(selector: impl Into<String>, seed: u64, nodes: Vec<usize>) -> Self {
        RepresentativeSet {
            selector: selector.into(),
            seed,
            k: nodes.len(),
            nodes,
        }
    }

    /// Exactly k distinct in-range nodes.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        if self.nodes.len() != self.k {
            return Err(Error::Invalid(format!(
                "{} nodes recorded for k = {}",
                self.nodes.len(),
                self.k
            )));
        }
        let mut seen = HashSet::with_capacity(self.k);
        for &v in &self.nodes {
            if v >= num_nodes {
                return Err(Error::Invalid(format!(
                    "representative {v} out of range for {num_nodes} nodes"
                )));
            }
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("representative {v} repeated")));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("representative set serializes");
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}
