use serde::{Deserialize, Serialize};

use crate::physics::{SphereBody, Vec3, World, FRAME_DT};

pub const FEATURE_DIM: usize = 8;

/// Fixed divisors applied to `[x, y, z, vx, vy, vz, r, m]` before they reach
/// any network, so inputs are O(1).
pub(crate) const INPUT_SCALE: [f64; FEATURE_DIM] = [1.0, 1.0, 1.0, 10.0, 10.0, 10.0, 0.1, 1.0];
/// Network outputs are multiplied by these to give meters and m/s.
pub(crate) const DPOS_SCALE: f64 = 0.1;
pub(crate) const DVEL_SCALE: f64 = 10.0;

/// Object-centric feature vector `[x, y, z, vx, vy, vz, r, m]`.
///
/// `x, y` are offsets from the object's episode-initial position, `z` is the
/// gap between the sphere and the floor, velocities are world-frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectFeatures(pub [f64; FEATURE_DIM]);

impl ObjectFeatures {
    pub fn new(offset: Vec3, velocity: Vec3, radius: f64, mass: f64) -> Self {
        Self([
            offset.x, offset.y, offset.z, velocity.x, velocity.y, velocity.z, radius, mass,
        ])
    }

    /// Features of `body` relative to where it started the episode.
    pub fn from_body(body: &SphereBody, initial: &SphereBody) -> Self {
        let offset = Vec3::new(
            body.position.x - initial.position.x,
            body.position.y - initial.position.y,
            body.position.z - body.radius,
        );
        Self::new(offset, body.velocity, body.radius, body.mass)
    }

    pub fn offset(&self) -> Vec3 {
        Vec3::from_slice(&self.0[0..3])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::from_slice(&self.0[3..6])
    }

    pub fn radius(&self) -> f64 {
        self.0[6]
    }

    pub fn mass(&self) -> f64 {
        self.0[7]
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite()) && self.radius() > 0.0 && self.mass() > 0.0
    }

    /// Folds an external force held for one frame into the velocity the
    /// predictor sees: `v + F·Δt_frame / m`.
    pub fn with_force(mut self, force: Vec3) -> Self {
        if force != Vec3::ZERO {
            let v = self.velocity() + force * (FRAME_DT / self.mass());
            self.0[3..6].copy_from_slice(&v.to_array());
        }
        self
    }

    /// Applies a per-frame delta to position and velocity.
    pub fn advanced(mut self, delta: &ObjectDelta) -> Self {
        let p = self.offset() + delta.dpos;
        let v = self.velocity() + delta.dvel;
        self.0[0..3].copy_from_slice(&p.to_array());
        self.0[3..6].copy_from_slice(&v.to_array());
        self
    }

    pub(crate) fn scaled(&self) -> [f64; FEATURE_DIM] {
        let mut out = self.0;
        for (v, s) in out.iter_mut().zip(INPUT_SCALE) {
            *v /= s;
        }
        out
    }
}

/// Features of every body in `world`, relative to the scene's initial layout.
pub fn scene_features(world: &World) -> Vec<ObjectFeatures> {
    world
        .bodies()
        .iter()
        .zip(&world.spec().bodies)
        .map(|(b, init)| ObjectFeatures::from_body(b, init))
        .collect()
}

/// Applies per-object forces (one per object) to a feature snapshot.
pub fn condition_on_forces(features: &[ObjectFeatures], forces: &[Vec3]) -> Vec<ObjectFeatures> {
    features
        .iter()
        .zip(forces.iter().chain(std::iter::repeat(&Vec3::ZERO)))
        .map(|(f, force)| f.with_force(*force))
        .collect()
}

/// Change of position and velocity of one object over one frame, either
/// predicted or observed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectDelta {
    pub dpos: Vec3,
    pub dvel: Vec3,
}

impl ObjectDelta {
    pub const ZERO: ObjectDelta = ObjectDelta { dpos: Vec3::ZERO, dvel: Vec3::ZERO };

    pub fn is_finite(&self) -> bool {
        self.dpos.is_finite() && self.dvel.is_finite()
    }
}

/// Deltas produced by the predictor.
pub type PredictedDelta = ObjectDelta;
