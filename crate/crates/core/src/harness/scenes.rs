use std::f64::consts::TAU;

use crate::physics::{SceneSpec, SphereBody};
use crate::{Error, Result};

pub const MASSES: [f64; 4] = [1.0, 0.75, 0.5, 0.25];
pub const RADII: [f64; 2] = [0.05, 0.075];
/// Half-extent of the square arena used by non-stationary runs.
pub const NONSTATIONARY_HALF_EXTENT: f64 = 1.5;

/// Spheres resting on the floor, evenly spaced on a circle:
///
/// | kind | circle radius (m) | first body at |
/// |------|-------------------|---------------|
/// | 3    | 0.30              | (0.30, 0)     |
/// | 6    | 0.35              | (0.35, 0)     |
/// | 8    | 0.40              | (0.40, 0)     |
///
/// Body `k` sits at angle `2πk/N`, has mass `MASSES[k % 4]` and radius
/// `RADII[k % 2]`.
pub fn make_scene(kind: usize) -> Result<SceneSpec> {
    let ring = match kind {
        3 => 0.30,
        6 => 0.35,
        8 => 0.40,
        other => return Err(Error::InvalidScene(format!("no layout for {other} objects"))),
    };
    let bodies = (0..kind)
        .map(|k| {
            let angle = TAU * k as f64 / kind as f64;
            SphereBody::resting(ring * angle.cos(), ring * angle.sin(), RADII[k % 2], MASSES[k % 4])
        })
        .collect();
    let spec = SceneSpec::new(bodies);
    spec.validate()?;
    Ok(spec)
}

/// The same layout with the arena bounds set.
pub fn make_bounded_scene(kind: usize, half_extent: f64) -> Result<SceneSpec> {
    let mut spec = make_scene(kind)?;
    spec.bounds_half_extent = Some(half_extent);
    spec.validate()?;
    Ok(spec)
}
