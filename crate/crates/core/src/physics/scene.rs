use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result};

/// Overlap allowed between initial bodies, and below the floor.
pub const PENETRATION_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereBody {
    pub position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
    pub radius: f64,
    pub mass: f64,
    /// Cleared after every frame.
    #[serde(default)]
    pub external_force: Vec3,
}

impl SphereBody {
    /// A body resting on the floor at `(x, y)`.
    pub fn resting(x: f64, y: f64, radius: f64, mass: f64) -> Self {
        Self {
            position: Vec3::new(x, y, radius),
            velocity: Vec3::ZERO,
            radius,
            mass,
            external_force: Vec3::ZERO,
        }
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocity.norm_squared()
    }
}

fn default_gravity() -> f64 {
    9.8
}

fn default_friction() -> f64 {
    0.5
}

/// Initial conditions and contact parameters of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub bodies: Vec<SphereBody>,
    /// Magnitude of downward gravitational acceleration (m/s²).
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub restitution: f64,
    #[serde(default = "default_friction")]
    pub friction_mu: f64,
    /// Half side of the square xy region; present only in non-stationary mode.
    #[serde(default)]
    pub bounds_half_extent: Option<f64>,
}

impl SceneSpec {
    pub fn new(bodies: Vec<SphereBody>) -> Self {
        Self {
            bodies,
            gravity: default_gravity(),
            restitution: 0.0,
            friction_mu: default_friction(),
            bounds_half_extent: None,
        }
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bodies.is_empty() {
            return Err(Error::InvalidScene("scene has no bodies".into()));
        }
        if !self.gravity.is_finite() || self.gravity < 0.0 {
            return Err(Error::InvalidScene(format!("bad gravity {}", self.gravity)));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(Error::InvalidScene(format!(
                "restitution {} outside [0, 1]",
                self.restitution
            )));
        }
        if !self.friction_mu.is_finite() || self.friction_mu < 0.0 {
            return Err(Error::InvalidScene(format!("bad friction {}", self.friction_mu)));
        }
        if let Some(h) = self.bounds_half_extent {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::InvalidScene(format!("bad bounds half extent {h}")));
            }
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if !(b.radius.is_finite() && b.radius > 0.0) {
                return Err(Error::InvalidScene(format!("body {i}: radius {}", b.radius)));
            }
            if !(b.mass.is_finite() && b.mass > 0.0) {
                return Err(Error::InvalidScene(format!("body {i}: mass {}", b.mass)));
            }
            if !(b.position.is_finite() && b.velocity.is_finite() && b.external_force.is_finite())
            {
                return Err(Error::InvalidScene(format!("body {i}: non-finite state")));
            }
            if b.position.z < b.radius - PENETRATION_TOLERANCE {
                return Err(Error::InvalidScene(format!("body {i} starts below the floor")));
            }
        }
        for i in 0..self.bodies.len() {
            for j in (i + 1)..self.bodies.len() {
                let (a, b) = (&self.bodies[i], &self.bodies[j]);
                let gap = (a.position - b.position).norm() - (a.radius + b.radius);
                if gap < -PENETRATION_TOLERANCE {
                    return Err(Error::InvalidScene(format!(
                        "bodies {i} and {j} interpenetrate by {:.4} m",
                        -gap
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-body change of position and velocity across one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDelta {
    pub dpos: Vec<Vec3>,
    pub dvel: Vec<Vec3>,
}

impl FrameDelta {
    pub fn len(&self) -> usize {
        self.dpos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dpos.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.dpos.iter().chain(&self.dvel).all(|v| *v == Vec3::ZERO)
    }
}
