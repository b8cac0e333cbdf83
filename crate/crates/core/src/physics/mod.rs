//! Deterministic impulse-based rigid-sphere simulator.
//!
//! Spheres slide (no rotational state) on an infinite floor at z = 0. Each
//! substep integrates velocities then positions (semi-implicit Euler), solves
//! floor and sphere-sphere contacts with sequential impulses (restitution and
//! Coulomb friction), then projects positions out of overlap. Contact pairs
//! are visited in fixed lexicographic order so trajectories are bit-for-bit
//! reproducible.

mod scene;
mod trajectory;
mod vec3;
mod world;

pub use scene::{FrameDelta, SceneSpec, SphereBody, PENETRATION_TOLERANCE};
pub use trajectory::{Trajectory, TrajectoryRow};
pub use vec3::Vec3;
pub use world::{World, FRAME_DT, SOLVER_ITERATIONS, SUBSTEPS_PER_FRAME, SUBSTEP_DT};
