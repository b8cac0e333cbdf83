use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::Rng;
use serde::Serialize;

use crate::actor::ActionSet;
use crate::physics::{SceneSpec, Vec3, World};
use crate::predictor::{rollout, scene_features, DeltaPredictor, ObjectDelta, ObjectFeatures};
use crate::Result;

pub const ROLLOUT_HORIZONS: [usize; 7] = [1, 2, 4, 10, 15, 30, 45];

/// Runs the simulator itself; its predictions are exact.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    pub spec: SceneSpec,
}

impl DeltaPredictor for OraclePredictor {
    fn predict(&self, features: &[ObjectFeatures], forces: &[Vec3], objects: &[usize]) -> Result<Vec<ObjectDelta>> {
        let mut world = World::new(self.spec.clone())?;
        for ((body, init), f) in world.bodies_mut().iter_mut().zip(&self.spec.bodies).zip(features) {
            let o = f.offset();
            body.position = Vec3::new(init.position.x + o.x, init.position.y + o.y, o.z + body.radius);
            body.velocity = f.velocity();
        }
        for (body, force) in world.bodies_mut().iter_mut().zip(forces) {
            body.external_force = *force;
        }
        let before = scene_features(&world);
        world.step_frame();
        let after = scene_features(&world);
        Ok(objects
            .iter()
            .map(|&k| ObjectDelta {
                dpos: after[k].offset() - before[k].offset(),
                dvel: after[k].velocity() - before[k].velocity(),
            })
            .collect())
    }
}

/// Mean Euclidean errors over all objects of one case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseError {
    pub case: usize,
    pub focus_count: usize,
    pub position_error: f64,
    pub velocity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub position_error: f64,
    pub velocity_error: f64,
    pub cases: Vec<CaseError>,
}

impl EvalReport {
    fn from_cases(cases: Vec<CaseError>) -> Self {
        let n = cases.len().max(1) as f64;
        Self {
            position_error: cases.iter().map(|c| c.position_error).sum::<f64>() / n,
            velocity_error: cases.iter().map(|c| c.velocity_error).sum::<f64>() / n,
            cases,
        }
    }
}

/// Predicted against simulated one-frame deltas of every object, starting
/// from the scene's initial layout with `forces` applied.
pub fn frame_errors<P: DeltaPredictor + ?Sized>(p: &P, spec: &SceneSpec, forces: &[Vec3]) -> Result<(f64, f64)> {
    let mut world = World::new(spec.clone())?;
    let features = scene_features(&world);
    for (body, f) in world.bodies_mut().iter_mut().zip(forces) {
        body.external_force = *f;
    }
    let truth = world.step_frame();
    let all: Vec<usize> = (0..features.len()).collect();
    let pred = p.predict(&features, forces, &all)?;
    let n = features.len() as f64;
    let pos = pred.iter().zip(&truth.dpos).map(|(d, t)| (d.dpos - *t).norm()).sum::<f64>() / n;
    let vel = pred.iter().zip(&truth.dvel).map(|(d, t)| (d.dvel - *t).norm()).sum::<f64>() / n;
    Ok((pos, vel))
}

/// Cases with a random number (in `focus_counts`) of distinct focus objects,
/// each pushed with an independently drawn action.
pub fn eval_multi_focus<P: DeltaPredictor + ?Sized, R: Rng + ?Sized>(
    p: &P,
    spec: &SceneSpec,
    action_set: ActionSet,
    max_force: f64,
    n_cases: usize,
    focus_counts: RangeInclusive<usize>,
    rng: &mut R,
) -> Result<EvalReport> {
    let n = spec.len();
    let actions = action_set.actions();
    let mut cases = Vec::with_capacity(n_cases);
    for case in 0..n_cases {
        let count = if focus_counts.start() == focus_counts.end() {
            *focus_counts.start()
        } else {
            rng.gen_range(focus_counts.clone())
        };
        let count = count.clamp(1, n);
        let mut forces = vec![Vec3::ZERO; n];
        for focus in sample(rng, n, count).into_vec() {
            forces[focus] = actions[rng.gen_range(0..actions.len())].direction * max_force;
        }
        let (position_error, velocity_error) = frame_errors(p, spec, &forces)?;
        log::debug!("case {case}: {count} focus objects, position {position_error:.5} m, velocity {velocity_error:.5} m/s");
        cases.push(CaseError { case, focus_count: count, position_error, velocity_error });
    }
    Ok(EvalReport::from_cases(cases))
}

/// Single focus object and action per trial.
pub fn eval_one_frame<P: DeltaPredictor + ?Sized, R: Rng + ?Sized>(
    p: &P,
    spec: &SceneSpec,
    action_set: ActionSet,
    max_force: f64,
    n_trials: usize,
    rng: &mut R,
) -> Result<EvalReport> {
    eval_multi_focus(p, spec, action_set, max_force, n_trials, 1..=1, rng)
}

/// Several objects pushed at once (between 2 and all of them).
pub fn eval_generalization<P: DeltaPredictor + ?Sized, R: Rng + ?Sized>(
    p: &P,
    spec: &SceneSpec,
    action_set: ActionSet,
    max_force: f64,
    n_cases: usize,
    rng: &mut R,
) -> Result<EvalReport> {
    eval_multi_focus(p, spec, action_set, max_force, n_cases, 2..=spec.len(), rng)
}

/// A push on one object from the initial layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutCase {
    pub focus: usize,
    pub action: usize,
    pub forces: Vec<Vec3>,
    /// First frame (1-based) with a sphere-sphere contact.
    pub first_contact: usize,
}

/// Seeded rejection sampling of pushes that make two spheres touch within
/// `horizon` frames.
pub fn collision_suite<R: Rng + ?Sized>(
    spec: &SceneSpec,
    action_set: ActionSet,
    max_force: f64,
    n_cases: usize,
    horizon: usize,
    rng: &mut R,
) -> Result<Vec<RolloutCase>> {
    let actions = action_set.actions();
    let mut cases = Vec::with_capacity(n_cases);
    let mut attempts = 0;
    while cases.len() < n_cases {
        attempts += 1;
        if attempts > 1000 * n_cases.max(1) {
            return Err(crate::Error::InvalidScene("no pushes in this scene lead to collisions".into()));
        }
        let focus = rng.gen_range(0..spec.len());
        let action = rng.gen_range(0..actions.len());
        let mut forces = vec![Vec3::ZERO; spec.len()];
        forces[focus] = actions[action].direction * max_force;
        let mut world = World::new(spec.clone())?;
        world.bodies_mut()[focus].external_force = forces[focus];
        let contact = (1..=horizon).find(|_| {
            world.step_frame();
            world.pair_contacts_last_frame() > 0
        });
        if let Some(first_contact) = contact {
            cases.push(RolloutCase { focus, action, forces, first_contact });
        }
    }
    Ok(cases)
}

/// Mean errors over cases and objects at one rollout horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorizonError {
    pub horizon: usize,
    pub position_error: f64,
    pub velocity_error: f64,
}

/// Feeds predictions back for `max(horizons)` frames and compares the
/// predicted features with the simulator at each horizon.
pub fn eval_rollout<P: DeltaPredictor + ?Sized>(
    p: &P,
    spec: &SceneSpec,
    cases: &[RolloutCase],
    horizons: &[usize],
) -> Result<Vec<HorizonError>> {
    if horizons.contains(&0) {
        return Err(crate::Error::Config("rollout horizons start at 1 frame".into()));
    }
    let longest = horizons.iter().copied().max().unwrap_or(0);
    let mut sums = vec![(0.0, 0.0); horizons.len()];
    for case in cases {
        let mut world = World::new(spec.clone())?;
        let initial = scene_features(&world);
        let predicted = rollout(p, &initial, &case.forces, longest)?;
        for (body, f) in world.bodies_mut().iter_mut().zip(&case.forces) {
            body.external_force = *f;
        }
        let mut truth = Vec::with_capacity(longest);
        for _ in 0..longest {
            world.step_frame();
            truth.push(scene_features(&world));
        }
        for (slot, &h) in horizons.iter().enumerate() {
            let (pred, real) = (&predicted[h - 1], &truth[h - 1]);
            let n = real.len() as f64;
            sums[slot].0 += pred.iter().zip(real).map(|(a, b)| (a.offset() - b.offset()).norm()).sum::<f64>() / n;
            sums[slot].1 += pred.iter().zip(real).map(|(a, b)| (a.velocity() - b.velocity()).norm()).sum::<f64>() / n;
        }
    }
    let n = cases.len().max(1) as f64;
    Ok(horizons
        .iter()
        .zip(sums)
        .map(|(&horizon, (p, v))| HorizonError { horizon, position_error: p / n, velocity_error: v / n })
        .collect())
}
