use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actor::{ActionSet, ActorConfig, MotivatorConfig};
use crate::predictor::PredictorConfig;
use crate::replay::BufferConfig;
use crate::{Error, Result};

use super::scenes::NONSTATIONARY_HALF_EXTENT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The scene is reset after every interaction.
    Stationary,
    /// The scene persists until a body leaves the arena.
    Nonstationary,
}

/// Everything that defines a run. Serialized verbatim into `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Object count of the scene layout: 3, 6 or 8.
    pub scene: usize,
    pub actions: ActionSet,
    pub mode: Mode,
    pub seed: u64,
    pub max_interactions: usize,
    /// The run stops once action coverage reaches this value.
    pub halt_coverage: f64,
    pub max_force: f64,
    /// Arena half-extent for non-stationary runs.
    pub bounds_half_extent: f64,
    pub motivator: MotivatorConfig,
    pub actor: ActorConfig,
    pub predictor: PredictorConfig,
    pub buffers: BufferConfig,
    /// Replace the predictor's loss by this constant (and skip predictor
    /// training), isolating the exploration mechanism.
    pub stub_loss: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: 3,
            actions: ActionSet::Cube27,
            mode: Mode::Stationary,
            seed: 0,
            max_interactions: 75_000,
            halt_coverage: 1.0,
            max_force: 400.0,
            bounds_half_extent: NONSTATIONARY_HALF_EXTENT,
            motivator: MotivatorConfig::default(),
            actor: ActorConfig::default(),
            predictor: PredictorConfig::default(),
            buffers: BufferConfig::default(),
            stub_loss: None,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if ![3, 6, 8].contains(&self.scene) {
            return Err(Error::Config(format!("scene must be 3, 6 or 8, got {}", self.scene)));
        }
        if self.actions == ActionSet::Planar9 && self.mode != Mode::Nonstationary {
            return Err(Error::Config("the 9-action set is only used in non-stationary runs".into()));
        }
        if !(self.max_force.is_finite() && self.max_force > 0.0) {
            return Err(Error::Config(format!("max force must be positive, got {}", self.max_force)));
        }
        if self.mode == Mode::Nonstationary && !(self.bounds_half_extent > 0.0) {
            return Err(Error::Config("non-stationary runs need positive bounds".into()));
        }
        if !(0.0..=1.0).contains(&self.halt_coverage) {
            return Err(Error::Config(format!("halt coverage must lie in [0, 1], got {}", self.halt_coverage)));
        }
        if let Some(c) = self.stub_loss {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Config(format!("stub loss must be a non-negative number, got {c}")));
            }
        }
        self.motivator.validate()?;
        self.actor.validate()?;
        self.buffers.validate()
    }
}
