//! Run configuration and its text format.
//!
//! One `key = value` pair per line; `#` starts a comment. Top-level keys are
//! `algorithm`, `seed`, `budget` and `output_dir`; everything else is
//! `section.field` with sections `env`, `robot`, `normalizers`, `rl`, `cem`
//! and `train`. Values are read as JSON scalars or arrays when they parse
//! (`0.99`, `true`, `[64, 64]`, `null`) and as bare strings otherwise.
//! Unknown keys are errors.
//!
//! ```text
//! algorithm = cem_td3
//! seed = 3
//! budget = 200        # generations for CEM variants, episodes otherwise
//! env.t_max = 500
//! cem.population_size = 10
//! train.hidden = [64, 64]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cem::CemConfig;
use crate::env::{Normalizers, RobotConfig};
use crate::error::{Error, Result};
use crate::rl::RlHyperparams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[serde(alias = "DDPG")]
    Ddpg,
    #[serde(alias = "TD3")]
    Td3,
    #[serde(alias = "cem-ddpg", alias = "CEM-DDPG")]
    CemDdpg,
    #[serde(alias = "cem-td3", alias = "CEM-TD3")]
    CemTd3,
}

impl Algorithm {
    pub fn is_cem(self) -> bool {
        matches!(self, Algorithm::CemDdpg | Algorithm::CemTd3)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ddpg => "ddpg",
            Algorithm::Td3 => "td3",
            Algorithm::CemDdpg => "cem_ddpg",
            Algorithm::CemTd3 => "cem_td3",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ddpg" => Ok(Algorithm::Ddpg),
            "td3" => Ok(Algorithm::Td3),
            "cem_ddpg" => Ok(Algorithm::CemDdpg),
            "cem_td3" => Ok(Algorithm::CemTd3),
            _ => Err(Error::Config(format!("unknown algorithm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub t_max: usize,
    pub rough_amplitude: f64,
    pub cell_size: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            t_max: 1000,
            rough_amplitude: 0.03,
            cell_size: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Hidden layer widths shared by actor and critics.
    pub hidden: Vec<usize>,
    /// Random-action steps before gradient training starts (DDPG/TD3 only).
    pub warmup_steps: usize,
    pub replay_capacity: usize,
    /// Writes elapsed milliseconds into the metrics file. Off by default so
    /// that repeated runs produce identical files.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            warmup_steps: 1000,
            replay_capacity: 1_000_000,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    /// Episodes for DDPG/TD3, generations for the CEM variants.
    pub budget: usize,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub robot: RobotConfig,
    pub normalizers: Normalizers,
    pub rl: RlHyperparams,
    pub cem: CemConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Td3,
            seed: 0,
            budget: 100,
            output_dir: PathBuf::from("runs/default"),
            env: EnvConfig::default(),
            robot: RobotConfig::default(),
            normalizers: Normalizers::default(),
            rl: RlHyperparams::default(),
            cem: CemConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.env.t_max == 0 {
            return Err(Error::Config("env.t_max must be at least 1".into()));
        }
        if !(self.env.rough_amplitude >= 0.0) || !(self.env.cell_size > 0.0) {
            return Err(Error::Config(
                "env.rough_amplitude must be >= 0 and env.cell_size > 0".into(),
            ));
        }
        if self.train.hidden.contains(&0) {
            return Err(Error::Config("train.hidden widths must be positive".into()));
        }
        if self.train.replay_capacity == 0 {
            return Err(Error::Config(
                "train.replay_capacity must be at least 1".into(),
            ));
        }
        self.robot.validate()?;
        self.rl.validate()?;
        if self.algorithm.is_cem() {
            self.cem.validate()?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut root = Map::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            let parsed = serde_json::from_str::<Value>(value)
                .unwrap_or_else(|_| Value::String(value.to_string()));
            insert_dotted(&mut root, key, parsed)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        let config: RunConfig = serde_json::from_value(Value::Object(root))
            .map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn insert_dotted(
    root: &mut Map<String, Value>,
    key: &str,
    value: Value,
) -> std::result::Result<(), String> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut node = root;
    for part in parts {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        node = entry
            .as_object_mut()
            .ok_or_else(|| format!("'{part}' is both a value and a section"))?;
    }
    if node.insert(last.to_string(), value).is_some() {
        return Err(format!("duplicate key '{key}'"));
    }
    Ok(())
}
