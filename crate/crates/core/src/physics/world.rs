use super::{FrameDelta, SceneSpec, SphereBody, Vec3};
use crate::{Error, Result};

/// Integrator substep (s).
pub const SUBSTEP_DT: f64 = 1.0 / 240.0;
/// 240 Hz physics at 30 frames per second.
pub const SUBSTEPS_PER_FRAME: usize = 8;
/// Duration of one observed frame (s).
pub const FRAME_DT: f64 = SUBSTEP_DT * SUBSTEPS_PER_FRAME as f64;
/// Sequential-impulse sweeps per substep.
pub const SOLVER_ITERATIONS: usize = 4;
/// Upper bound on positional projection sweeps per substep.
const PROJECTION_ITERATIONS: usize = 32;
const PROJECTION_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
enum ContactKind {
    Floor(usize),
    Pair(usize, usize),
}

#[derive(Debug, Clone)]
struct Contact {
    kind: ContactKind,
    /// Points from the first body (or the floor) towards the second body.
    normal: Vec3,
    effective_mass: f64,
    /// Separating normal velocity the solver drives towards.
    target: f64,
    normal_impulse: f64,
    tangent_impulse: Vec3,
}

/// A live simulation of a [`SceneSpec`].
#[derive(Debug, Clone)]
pub struct World {
    spec: SceneSpec,
    bodies: Vec<SphereBody>,
    frame: u64,
    pair_contacts_last_frame: usize,
}

impl World {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let mut world = Self {
            bodies: Vec::new(),
            spec,
            frame: 0,
            pair_contacts_last_frame: 0,
        };
        world.reset();
        Ok(world)
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn bodies(&self) -> &[SphereBody] {
        &self.bodies
    }

    pub fn bodies_mut(&mut self) -> &mut [SphereBody] {
        &mut self.bodies
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    /// Frames stepped since construction or the last reset.
    pub fn frame(&self) -> u64 {
        self.frame
    }

    /// Number of sphere-sphere contacts detected during the last frame,
    /// summed over substeps.
    pub fn pair_contacts_last_frame(&self) -> usize {
        self.pair_contacts_last_frame
    }

    /// Restores every body to its initial state and clears forces.
    pub fn reset(&mut self) {
        self.bodies = self.spec.bodies.clone();
        for b in &mut self.bodies {
            b.external_force = Vec3::ZERO;
        }
        self.frame = 0;
        self.pair_contacts_last_frame = 0;
    }

    /// Sets the focus body's force to `direction * max_force` for the next frame.
    pub fn apply_action(&mut self, focus: usize, direction: Vec3, max_force: f64) -> Result<()> {
        let len = self.bodies.len();
        let body = self
            .bodies
            .get_mut(focus)
            .ok_or(Error::IndexOutOfRange { index: focus, len })?;
        body.external_force = direction * max_force;
        Ok(())
    }

    pub fn out_of_bounds(&self) -> Result<bool> {
        let half = self
            .spec
            .bounds_half_extent
            .ok_or_else(|| Error::Config("out_of_bounds queried without bounds".into()))?;
        Ok(self
            .bodies
            .iter()
            .any(|b| b.position.x.abs() > half || b.position.y.abs() > half))
    }

    /// Kinetic plus gravitational potential energy (floor at z = 0).
    pub fn total_energy(&self) -> f64 {
        self.bodies
            .iter()
            .map(|b| b.kinetic_energy() + b.mass * self.spec.gravity * b.position.z)
            .sum()
    }

    pub fn total_momentum(&self) -> Vec3 {
        self.bodies
            .iter()
            .fold(Vec3::ZERO, |acc, b| acc + b.velocity * b.mass)
    }

    /// Advances eight substeps with the current external forces, then clears them.
    pub fn step_frame(&mut self) -> FrameDelta {
        let pre: Vec<(Vec3, Vec3)> = self.bodies.iter().map(|b| (b.position, b.velocity)).collect();
        let mut pair_contacts = 0;
        for _ in 0..SUBSTEPS_PER_FRAME {
            pair_contacts += self.step_substep();
        }
        for b in &mut self.bodies {
            b.external_force = Vec3::ZERO;
        }
        self.frame += 1;
        self.pair_contacts_last_frame = pair_contacts;
        let (dpos, dvel) = self
            .bodies
            .iter()
            .zip(&pre)
            .map(|(b, (p, v))| (b.position - *p, b.velocity - *v))
            .unzip();
        FrameDelta { dpos, dvel }
    }

    /// One semi-implicit Euler substep followed by contact resolution.
    /// Returns the number of sphere-sphere contacts found.
    pub fn step_substep(&mut self) -> usize {
        let dt = SUBSTEP_DT;
        let gravity = Vec3::new(0.0, 0.0, -self.spec.gravity);
        let pre_velocity: Vec<Vec3> = self.bodies.iter().map(|b| b.velocity).collect();

        for b in &mut self.bodies {
            b.velocity += (gravity + b.external_force / b.mass) * dt;
            b.position += b.velocity * dt;
        }

        let mut contacts = self.detect_contacts(&pre_velocity);
        let pair_count = contacts
            .iter()
            .filter(|c| matches!(c.kind, ContactKind::Pair(..)))
            .count();
        for _ in 0..SOLVER_ITERATIONS {
            for c in &mut contacts {
                solve_contact(&mut self.bodies, c, self.spec.friction_mu);
            }
        }
        self.project_positions();
        pair_count
    }

    fn detect_contacts(&self, pre_velocity: &[Vec3]) -> Vec<Contact> {
        let e = self.spec.restitution;
        let mut contacts = Vec::new();
        for (i, b) in self.bodies.iter().enumerate() {
            if b.position.z < b.radius {
                let approach = -pre_velocity[i].z;
                contacts.push(Contact {
                    kind: ContactKind::Floor(i),
                    normal: Vec3::UP,
                    effective_mass: b.mass,
                    target: e * approach.max(0.0),
                    normal_impulse: 0.0,
                    tangent_impulse: Vec3::ZERO,
                });
            }
        }
        let n = self.bodies.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&self.bodies[i], &self.bodies[j]);
                let d = b.position - a.position;
                let dist = d.norm();
                if dist >= a.radius + b.radius {
                    continue;
                }
                let normal = contact_normal(d, dist);
                let approach = -normal.dot(pre_velocity[j] - pre_velocity[i]);
                contacts.push(Contact {
                    kind: ContactKind::Pair(i, j),
                    normal,
                    effective_mass: 1.0 / (1.0 / a.mass + 1.0 / b.mass),
                    target: e * approach.max(0.0),
                    normal_impulse: 0.0,
                    tangent_impulse: Vec3::ZERO,
                });
            }
        }
        contacts
    }

    /// Removes remaining overlap by moving bodies apart along contact normals.
    /// Pair corrections are split in proportion to inverse mass.
    fn project_positions(&mut self) {
        let n = self.bodies.len();
        for _ in 0..PROJECTION_ITERATIONS {
            let mut worst: f64 = 0.0;
            for b in &mut self.bodies {
                let pen = b.radius - b.position.z;
                if pen > 0.0 {
                    b.position.z = b.radius;
                    worst = worst.max(pen);
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = self.bodies[j].position - self.bodies[i].position;
                    let dist = d.norm();
                    let pen = self.bodies[i].radius + self.bodies[j].radius - dist;
                    if pen <= 0.0 {
                        continue;
                    }
                    worst = worst.max(pen);
                    let normal = contact_normal(d, dist);
                    let wi = 1.0 / self.bodies[i].mass;
                    let wj = 1.0 / self.bodies[j].mass;
                    let share = pen / (wi + wj);
                    self.bodies[i].position -= normal * (share * wi);
                    self.bodies[j].position += normal * (share * wj);
                }
            }
            if worst <= PROJECTION_EPS {
                break;
            }
        }
    }
}

fn contact_normal(d: Vec3, dist: f64) -> Vec3 {
    if dist > 1e-12 {
        d / dist
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    }
}

fn solve_contact(bodies: &mut [SphereBody], c: &mut Contact, mu: f64) {
    let (first, second) = match c.kind {
        ContactKind::Floor(i) => (None, i),
        ContactKind::Pair(i, j) => (Some(i), j),
    };
    let v_first = first.map_or(Vec3::ZERO, |i| bodies[i].velocity);
    let rel = bodies[second].velocity - v_first;
    let vn = c.normal.dot(rel);

    let old = c.normal_impulse;
    c.normal_impulse = (old + c.effective_mass * (c.target - vn)).max(0.0);
    let applied = c.normal * (c.normal_impulse - old);
    apply_impulse(bodies, first, second, applied);

    if mu > 0.0 {
        let v_first = first.map_or(Vec3::ZERO, |i| bodies[i].velocity);
        let rel = bodies[second].velocity - v_first;
        let vt = rel - c.normal * c.normal.dot(rel);
        let old_t = c.tangent_impulse;
        let mut new_t = old_t - vt * c.effective_mass;
        let limit = mu * c.normal_impulse;
        let mag = new_t.norm();
        if mag > limit {
            new_t = if mag > 0.0 { new_t * (limit / mag) } else { Vec3::ZERO };
        }
        c.tangent_impulse = new_t;
        apply_impulse(bodies, first, second, new_t - old_t);
    }
}

/// Applies `impulse` to `second` and its reaction to `first`.
fn apply_impulse(bodies: &mut [SphereBody], first: Option<usize>, second: usize, impulse: Vec3) {
    let m = bodies[second].mass;
    bodies[second].velocity += impulse / m;
    if let Some(i) = first {
        let m = bodies[i].mass;
        bodies[i].velocity -= impulse / m;
    }
}
