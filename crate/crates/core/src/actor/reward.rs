use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Monotone map applied to the prediction loss before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi {
    #[default]
    Identity,
    Sqrt,
    Log1p,
}

impl Phi {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::Sqrt => x.sqrt(),
            Self::Log1p => x.ln_1p(),
        }
    }
}

/// Default `U`: above the largest loss of an untrained predictor times the
/// triple count of the 6-object scene.
pub const DEFAULT_UPPER_BOUND: f64 = 1e8;

fn default_upper_bound() -> Option<f64> {
    Some(DEFAULT_UPPER_BOUND)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotivatorConfig {
    #[serde(default)]
    pub phi: Phi,
    /// `None` (JSON `null`) means unbounded: `φ(loss)` is only clipped at 1.
    #[serde(default = "default_upper_bound")]
    pub upper_bound: Option<f64>,
}

impl Default for MotivatorConfig {
    fn default() -> Self {
        Self { phi: Phi::Identity, upper_bound: default_upper_bound() }
    }
}

impl MotivatorConfig {
    pub fn validate(&self) -> Result<()> {
        match self.upper_bound {
            Some(u) if !(u.is_finite() && u > 0.0) => {
                Err(Error::Config(format!("upper bound must be positive and finite, got {u}")))
            }
            _ => Ok(()),
        }
    }
}

/// Intrinsic reward in `[0, 1]` from a prediction loss.
pub fn motivate(loss: f64, cfg: &MotivatorConfig) -> Result<f64> {
    if loss.is_nan() {
        return Err(Error::NonFinite("prediction loss".into()));
    }
    if loss < 0.0 {
        return Err(Error::NegativeLoss(loss));
    }
    let v = cfg.phi.apply(loss);
    let scaled = match cfg.upper_bound {
        Some(u) => v / u,
        None => v,
    };
    Ok(scaled.min(1.0))
}

/// Regression target for the taken triple. `next_max` is the largest
/// normalized Q of the following state, or `None` after a reset.
pub fn q_target(reward: f64, next_max: Option<f64>, gamma: f64) -> f64 {
    match next_max {
        None => reward,
        Some(q) => (reward + gamma * q).min(1.0),
    }
}
