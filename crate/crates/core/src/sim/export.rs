//! JSON export of a tree (genealogy and recorded positions).

use serde::{Deserialize, Serialize};

use super::engine::{Fate, StopReason};
use super::tree::ParticleTree;
use crate::error::{Error, Result};

pub const TREE_SCHEMA: &str = "bbm-tree/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord {
    pub id: usize,
    pub parent: Option<usize>,
    pub birth: f64,
    pub death: f64,
    pub fate: Fate,
    pub times: Vec<f64>,
    /// Row-major, `dim` entries per time.
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeExport {
    pub schema: String,
    pub dim: usize,
    pub horizon: f64,
    pub stop_reason: StopReason,
    pub grid_step: Option<f64>,
    pub particles: Vec<ParticleRecord>,
}

impl From<&ParticleTree> for TreeExport {
    fn from(tree: &ParticleTree) -> Self {
        Self {
            schema: TREE_SCHEMA.to_string(),
            dim: tree.dim(),
            horizon: tree.horizon,
            stop_reason: tree.stop_reason,
            grid_step: tree.grid_step.is_finite().then_some(tree.grid_step),
            particles: tree
                .particles
                .iter()
                .map(|p| ParticleRecord {
                    id: p.id,
                    parent: p.parent,
                    birth: p.birth,
                    death: p.death,
                    fate: p.fate,
                    times: p.trajectory.times().to_vec(),
                    positions: p.trajectory.values().to_vec(),
                })
                .collect(),
        }
    }
}

pub fn tree_to_json(tree: &ParticleTree) -> Result<String> {
    serde_json::to_string(&TreeExport::from(tree)).map_err(|e| Error::Invalid(e.to_string()))
}

pub fn tree_from_json(text: &str) -> Result<TreeExport> {
    let t: TreeExport = serde_json::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
    if t.schema != TREE_SCHEMA {
        return Err(Error::Invalid(format!("unsupported schema {}", t.schema)));
    }
    Ok(t)
}
