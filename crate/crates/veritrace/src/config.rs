//! One declarative TOML document configures every command: store and
//! engine access, reward composition, scheduler hyperparameters, the
//! simulation, the scoring service, and judge endpoints. Every value has a
//! default and every value can be overridden by a flag; precedence is
//! flag over file over default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::judge::JudgeEndpoint;
use crate::rewards::ScoreConfig;
use crate::scheduler::SchedulerParams;
use crate::sim::Granularity;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub store: StoreSection,
    pub engine: EngineSection,
    pub reward: ScoreConfig,
    pub scheduler: SchedulerParams,
    pub sim: SimSection,
    pub service: ServiceSection,
    pub judges: Vec<JudgeEndpoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoreSection {
    /// Analysis store file; created on first write.
    pub path: PathBuf,
}

impl Default for StoreSection {
    fn default() -> StoreSection {
        StoreSection {
            path: PathBuf::from("analysis.jsonl"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    /// Path to a UCI engine binary. Unset means store-only operation
    /// unless `mock` is on.
    pub path: Option<PathBuf>,
    /// Use the built-in deterministic engine instead of a binary.
    pub mock: bool,
    /// Search depth for training-time analysis.
    pub train_depth: u32,
    /// Search depth for held-out evaluation analysis.
    pub eval_depth: u32,
    /// Scored moves requested per position.
    pub multipv: u32,
}

impl Default for EngineSection {
    fn default() -> EngineSection {
        EngineSection {
            path: None,
            mock: false,
            train_depth: 25,
            eval_depth: 30,
            multipv: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub steps: usize,
    pub batch: usize,
    /// Candidates analyzed per emitted trace.
    pub candidates: usize,
    pub seed: u64,
    /// Policy learning rate.
    pub eta: f64,
    pub granularity: Granularity,
}

impl Default for SimSection {
    fn default() -> SimSection {
        SimSection {
            steps: 300,
            batch: 128,
            candidates: 3,
            seed: 0,
            eta: 0.01,
            granularity: Granularity::PerBatch,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSection {
    /// TCP address to listen on; unset serves stdio.
    pub bind: Option<String>,
    /// Keep a scheduler session: batch-end markers update weights.
    pub session: bool,
    /// Concurrent TCP connections served.
    pub max_connections: usize,
}

impl Default for ServiceSection {
    fn default() -> ServiceSection {
        ServiceSection {
            bind: None,
            session: false,
            max_connections: 16,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
}

impl Config {
    /// Defaults when no file is given; otherwise the parsed file with
    /// defaults filling whatever it leaves out.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
