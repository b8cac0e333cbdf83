use serde::{Deserialize, Serialize};

use crate::physics::Vec3;
use crate::{Error, Result};

/// Discrete force directions, scaled by the maximum force when applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum ActionSet {
    /// `x, y ∈ {-1, 0, 1}`, `z = 0`.
    Planar9,
    /// `x, y ∈ {-1, 0, 1}`, `z ∈ {0, 0.75, 1}`.
    Cube27,
    /// `x, y ∈ {-1, -0.5, 0, 0.5, 1}`, `z ∈ {0, 0.75, 1}`.
    Fine75,
}

impl ActionSet {
    pub fn from_count(count: usize) -> Result<Self> {
        match count {
            9 => Ok(Self::Planar9),
            27 => Ok(Self::Cube27),
            75 => Ok(Self::Fine75),
            other => Err(Error::Config(format!("no action set with {other} actions"))),
        }
    }

    pub fn len(self) -> usize {
        match self {
            Self::Planar9 => 9,
            Self::Cube27 => 27,
            Self::Fine75 => 75,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    fn axes(self) -> (&'static [f64], &'static [f64]) {
        const COARSE: &[f64] = &[-1.0, 0.0, 1.0];
        const FINE: &[f64] = &[-1.0, -0.5, 0.0, 0.5, 1.0];
        const LIFT: &[f64] = &[0.0, 0.75, 1.0];
        const FLAT: &[f64] = &[0.0];
        match self {
            Self::Planar9 => (COARSE, FLAT),
            Self::Cube27 => (COARSE, LIFT),
            Self::Fine75 => (FINE, LIFT),
        }
    }

    /// All actions; the index runs over `x` (slowest), then `y`, then `z`.
    pub fn actions(self) -> Vec<Action> {
        let (xy, zs) = self.axes();
        let mut out = Vec::with_capacity(self.len());
        for &x in xy {
            for &y in xy {
                for &z in zs {
                    out.push(Action { index: out.len(), direction: Vec3::new(x, y, z) });
                }
            }
        }
        out
    }

    pub fn action(self, index: usize) -> Result<Action> {
        self.actions()
            .get(index)
            .copied()
            .ok_or(Error::IndexOutOfRange { index, len: self.len() })
    }
}

impl TryFrom<usize> for ActionSet {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::from_count(n)
    }
}

impl From<ActionSet> for usize {
    fn from(a: ActionSet) -> usize {
        a.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub index: usize,
    pub direction: Vec3,
}

/// Focus object, relation object and action picked by the actor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleChoice {
    pub focus: usize,
    pub relation: usize,
    pub action: Action,
}
