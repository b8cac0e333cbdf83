use std::collections::hash_map::Entry;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::features::{condition_on_forces, ObjectDelta, ObjectFeatures};
use super::net::{GraphGrads, GraphPhysicsNet, PairRows};
use super::{prediction_loss, DeltaPredictor};
use crate::nn::{Adam, AdamConfig};
use crate::physics::Vec3;
use crate::replay::Transition;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub adam: AdamConfig,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self { adam: AdamConfig::with_lr(1e-3) }
    }
}

/// A [`GraphPhysicsNet`] with one Adam optimizer per sub-network.
#[derive(Debug, Clone)]
pub struct Predictor {
    pub net: GraphPhysicsNet,
    enc_opt: Adam,
    pos_opt: Adam,
    vel_opt: Adam,
}

impl Predictor {
    pub fn new(net: GraphPhysicsNet, config: PredictorConfig) -> Self {
        Self {
            enc_opt: Adam::new(&net.encoder, config.adam),
            pos_opt: Adam::new(&net.pos_decoder, config.adam),
            vel_opt: Adam::new(&net.vel_decoder, config.adam),
            net,
        }
    }

    pub fn steps(&self) -> u64 {
        self.enc_opt.steps()
    }

    /// Loss of one interaction under the current weights.
    pub fn interaction_loss(&self, t: &Transition) -> Result<f64> {
        transition_loss(&self.net, t)
    }

    /// One optimizer step on the batch mean loss; returns the loss before the step.
    pub fn train(&mut self, batch: &[&Transition]) -> Result<f64> {
        let (loss, grads) = loss_and_grads(&self.net, batch)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("prediction loss {loss}")));
        }
        self.enc_opt.step(&mut self.net.encoder, &grads.encoder)?;
        self.pos_opt.step(&mut self.net.pos_decoder, &grads.pos_decoder)?;
        self.vel_opt.step(&mut self.net.vel_decoder, &grads.vel_decoder)?;
        Ok(loss)
    }
}

/// Focus-plus-relation loss of any predictor on a recorded transition.
pub fn transition_loss<P: DeltaPredictor + ?Sized>(p: &P, t: &Transition) -> Result<f64> {
    let forces = focus_forces(t);
    let pred = p.predict(&t.features, &forces, &[t.choice.focus, t.choice.relation])?;
    Ok(prediction_loss(&pred[0], &pred[1], &t.focus_truth, &t.relation_truth))
}

fn focus_forces(t: &Transition) -> Vec<Vec3> {
    let mut forces = vec![Vec3::ZERO; t.features.len()];
    forces[t.choice.focus] = t.force;
    forces
}

fn dedup_key(t: &Transition) -> Vec<u64> {
    let mut key: Vec<u64> = t.features.iter().flat_map(|f| f.0).map(f64::to_bits).collect();
    for v in [t.force, t.focus_truth.dpos, t.focus_truth.dvel, t.relation_truth.dpos, t.relation_truth.dvel] {
        key.extend(v.to_array().map(f64::to_bits));
    }
    key.extend([t.choice.focus as u64, t.choice.relation as u64]);
    key
}

/// Mean batch loss and its gradient with respect to every network parameter.
/// Identical transitions are evaluated once and weighted by multiplicity, and
/// identical (conditioned snapshot, object) groups share one forward pass.
pub fn loss_and_grads(net: &GraphPhysicsNet, batch: &[&Transition]) -> Result<(f64, GraphGrads)> {
    if batch.is_empty() {
        return Err(Error::Empty("prediction batch"));
    }
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique: Vec<(&Transition, usize)> = Vec::new();
    for t in batch {
        if t.choice.focus >= t.features.len() || t.choice.relation >= t.features.len() {
            return Err(Error::IndexOutOfRange {
                index: t.choice.focus.max(t.choice.relation),
                len: t.features.len(),
            });
        }
        match index.entry(dedup_key(t)) {
            Entry::Occupied(e) => unique[*e.get()].1 += 1,
            Entry::Vacant(e) => {
                e.insert(unique.len());
                unique.push((t, 1));
            }
        }
    }

    let conditioned: Vec<Vec<ObjectFeatures>> =
        unique.iter().map(|(t, _)| condition_on_forces(&t.features, &focus_forces(t))).collect();
    let mut group_index: HashMap<(Vec<u64>, usize), usize> = HashMap::new();
    let mut groups: Vec<(usize, [usize; 1])> = Vec::new();
    let mut slots: Vec<[usize; 2]> = Vec::with_capacity(unique.len());
    for (u, ((t, _), c)) in unique.iter().zip(&conditioned).enumerate() {
        let bits: Vec<u64> = c.iter().flat_map(|f| f.0).map(f64::to_bits).collect();
        slots.push([t.choice.focus, t.choice.relation].map(|k| {
            *group_index.entry((bits.clone(), k)).or_insert_with(|| {
                groups.push((u, [k]));
                groups.len() - 1
            })
        }));
    }
    let rows = PairRows::build(groups.iter().map(|(u, k)| (conditioned[*u].as_slice(), k.as_slice())));
    let pass = net.forward_pass(rows)?;

    let total = batch.len() as f64;
    let mut loss = 0.0;
    let mut grad_pred = vec![ObjectDelta::default(); groups.len()];
    for (((t, count), c), slot) in unique.iter().zip(&conditioned).zip(&slots) {
        let w = *count as f64 / total;
        let objects = [t.choice.focus, t.choice.relation];
        let mut full = slot.map(|g| pass.predictions[g]);
        for (d, &k) in full.iter_mut().zip(&objects) {
            d.dvel += c[k].velocity() - t.features[k].velocity();
        }
        loss += w * prediction_loss(&full[0], &full[1], &t.focus_truth, &t.relation_truth);
        for ((d, truth), &g) in full.iter().zip([&t.focus_truth, &t.relation_truth]).zip(slot) {
            grad_pred[g].dpos += (d.dpos - truth.dpos) * (2.0 * w / 3.0);
            grad_pred[g].dvel += (d.dvel - truth.dvel) * (2.0 * w / 3.0);
        }
    }
    let mut grads = net.zero_grads();
    net.backward_pass(&pass, &grad_pred, &mut grads)?;
    Ok((loss, grads))
}
