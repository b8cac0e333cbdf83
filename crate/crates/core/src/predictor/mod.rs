//! Graph physics network: relation encoder, aggregation and per-relation
//! position/velocity decoders, plus its loss, trainer and rollout.

mod features;
mod net;
mod observation;
mod train;

pub use features::{
    condition_on_forces, scene_features, ObjectDelta, ObjectFeatures, PredictedDelta, FEATURE_DIM,
};
pub use net::{GraphGrads, GraphPhysicsNet, DECODER_INPUT, DECODER_SIZES, ENCODER_SIZES};
pub use observation::{
    relation_slot, slot_partner, ObjectState, ObservedObject, Observation, RelationMatrix, RelationVector,
    RELATION_DIM, STATE_DIM,
};
pub use train::{loss_and_grads, transition_loss, Predictor, PredictorConfig};

pub(crate) use net::PairRows;

use crate::physics::Vec3;
use crate::Result;

/// Mean over the three components of `(a − b)²`.
pub fn mse3(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm_squared() / 3.0
}

/// Position plus velocity MSE of one object.
pub fn delta_loss(pred: &ObjectDelta, truth: &ObjectDelta) -> f64 {
    mse3(pred.dpos, truth.dpos) + mse3(pred.dvel, truth.dvel)
}

/// Loss restricted to the focus and relation objects.
pub fn prediction_loss(
    pred_focus: &ObjectDelta,
    pred_rel: &ObjectDelta,
    truth_focus: &ObjectDelta,
    truth_rel: &ObjectDelta,
) -> f64 {
    delta_loss(pred_focus, truth_focus) + delta_loss(pred_rel, truth_rel)
}

/// Anything that maps a feature snapshot and per-object forces to one-frame
/// deltas, expressed relative to the unforced snapshot.
pub trait DeltaPredictor {
    fn predict(&self, features: &[ObjectFeatures], forces: &[Vec3], objects: &[usize]) -> Result<Vec<ObjectDelta>>;
}

impl DeltaPredictor for GraphPhysicsNet {
    /// The network sees force-conditioned velocities and predicts the change
    /// from them; the velocity kick of the force is added back here.
    fn predict(&self, features: &[ObjectFeatures], forces: &[Vec3], objects: &[usize]) -> Result<Vec<ObjectDelta>> {
        let conditioned = condition_on_forces(features, forces);
        let mut out = self.predict_objects(&conditioned, objects)?;
        for (d, &k) in out.iter_mut().zip(objects) {
            d.dvel += conditioned[k].velocity() - features[k].velocity();
        }
        Ok(out)
    }
}

/// Predicts `frames` successive snapshots, feeding each prediction back in.
/// `forces` act during the first frame only. Element `t` holds the features
/// after `t + 1` frames.
pub fn rollout<P: DeltaPredictor + ?Sized>(
    predictor: &P,
    initial: &[ObjectFeatures],
    forces: &[Vec3],
    frames: usize,
) -> Result<Vec<Vec<ObjectFeatures>>> {
    if frames == 0 {
        return Err(crate::Error::Config("rollout needs at least one frame".into()));
    }
    let all: Vec<usize> = (0..initial.len()).collect();
    let mut current = initial.to_vec();
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let f: &[Vec3] = if t == 0 { forces } else { &[] };
        let deltas = predictor.predict(&current, f, &all)?;
        current = current.iter().zip(&deltas).map(|(x, d)| x.advanced(d)).collect();
        out.push(current.clone());
    }
    Ok(out)
}

/// Always predicts no change.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPredictor;

impl DeltaPredictor for ZeroPredictor {
    fn predict(&self, _: &[ObjectFeatures], _: &[Vec3], objects: &[usize]) -> Result<Vec<ObjectDelta>> {
        Ok(vec![ObjectDelta::ZERO; objects.len()])
    }
}

#[cfg(test)]
mod tests;
