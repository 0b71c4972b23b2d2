//! Versioned JSON checkpoints.
//!
//! Parameters are stored as JSON decimals in shortest round-trip form, which
//! reproduces every finite `f64` exactly on load.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{Algorithm, RunConfig};
use crate::error::{Error, LoadError, Result};
use crate::net::ParamVector;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Progress {
    /// Episodes (DDPG/TD3) or generations (CEM variants) completed.
    pub iterations: u64,
    pub env_steps: u64,
    pub actor_updates: u64,
    pub best_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub algorithm: Algorithm,
    /// Policy to deploy: the learner's actor, or the distribution mean for
    /// the CEM variants.
    pub actor: ParamVector,
    pub critics: Vec<ParamVector>,
    pub config: RunConfig,
    pub progress: Progress,
}

impl Checkpoint {
    pub fn new(
        algorithm: Algorithm,
        actor: ParamVector,
        critics: Vec<ParamVector>,
        config: RunConfig,
        progress: Progress,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            algorithm,
            actor,
            critics,
            config,
            progress,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("checkpoint not serializable: {e}")))
    }

    /// Parses and validates a document; `path` only labels errors.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let fail = |cause| Error::load(path, cause);
        let doc: Value =
            serde_json::from_str(text).map_err(|e| fail(LoadError::Malformed(e.to_string())))?;
        let version = doc
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| fail(LoadError::Malformed("missing format_version".into())))?;
        if version != FORMAT_VERSION as u64 {
            return Err(fail(LoadError::Version {
                found: version.min(u32::MAX as u64) as u32,
                expected: FORMAT_VERSION,
            }));
        }
        let ckpt: Checkpoint =
            serde_json::from_value(doc).map_err(|e| fail(LoadError::Malformed(e.to_string())))?;
        let networks = std::iter::once(("actor".to_string(), &ckpt.actor)).chain(
            ckpt.critics
                .iter()
                .enumerate()
                .map(|(i, c)| (format!("critic {i}"), c)),
        );
        for (what, net) in networks {
            net.spec()
                .validate()
                .map_err(|e| fail(LoadError::Malformed(format!("{what}: {e}"))))?;
            if net.len() != net.spec().param_count() {
                return Err(fail(LoadError::Length {
                    what,
                    expected: net.spec().param_count(),
                    found: net.len(),
                }));
            }
        }
        Ok(ckpt)
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    std::fs::write(path, checkpoint.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text, path)
}
