//! Instance and parameter files.
//!
//! An instance file is JSON `{"spins": N, "couplings": [[i, j, J_ij], ...]}`
//! with 1-based spin indices. Parameter files are JSON objects with the fields
//! of [`SimParams`]; missing fields take their defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hamiltonian::SimParams;
use crate::lhz::IsingInstance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub spins: usize,
    pub couplings: Vec<(usize, usize, f64)>,
}

impl InstanceFile {
    pub fn from_instance(instance: &IsingInstance<f64>) -> Self {
        InstanceFile {
            spins: instance.spins(),
            couplings: instance.couplings().map(|((i, j), &v)| (i + 1, j + 1, v)).collect(),
        }
    }

    pub fn to_instance(&self) -> Result<IsingInstance<f64>> {
        let pairs = self
            .couplings
            .iter()
            .map(|&(i, j, v)| {
                if i == 0 || j == 0 {
                    return Err(Error::InvalidInstance(format!("spin indices are 1-based, got ({i}, {j})")));
                }
                Ok(((i - 1, j - 1), v))
            })
            .collect::<Result<Vec<_>>>()?;
        IsingInstance::new(self.spins, pairs)
    }
}

/// SHA-256 of the instance's canonical JSON, hex encoded.
pub fn instance_hash(instance: &IsingInstance<f64>) -> String {
    let json = serde_json::to_vec(&InstanceFile::from_instance(instance)).expect("instance serializes");
    hex::encode(Sha256::digest(&json))
}

pub fn load_instance(path: &Path) -> Result<IsingInstance<f64>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str::<InstanceFile>(&text)?.to_instance()
}

pub fn save_instance(path: &Path, instance: &IsingInstance<f64>) -> Result<()> {
    let text = serde_json::to_string_pretty(&InstanceFile::from_instance(instance))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<SimParams> {
    let params: SimParams = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    params.validate()?;
    Ok(params)
}
