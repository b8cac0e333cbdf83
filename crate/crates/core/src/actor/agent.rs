use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::ActionSet;
use super::q::{Normalization, QTensor};
use super::reward::q_target;
use crate::nn::{softmax_backward, Adam, AdamConfig, Mlp, MlpGrads};
use crate::predictor::{ObjectFeatures, Observation, PairRows, DECODER_INPUT};
use crate::replay::Experience;
use crate::{Error, Result};

pub const Q_HIDDEN: [usize; 2] = [128, 128];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActorConfig {
    pub adam: AdamConfig,
    pub gamma: f64,
    pub normalization: Normalization,
}

impl Default for ActorConfig {
    fn default() -> Self {
        Self { adam: AdamConfig::with_lr(3e-4), gamma: 0.9, normalization: Normalization::Global }
    }
}

impl ActorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        Ok(())
    }
}

pub fn q_head_sizes(action_set: ActionSet) -> [usize; 4] {
    [DECODER_INPUT, Q_HIDDEN[0], Q_HIDDEN[1], action_set.len()]
}

/// Q head shared by every (focus, relation) slot, with its optimizer.
///
/// Relations come from the predictor's encoder, which the actor reads but
/// never updates.
#[derive(Debug, Clone)]
pub struct QActor {
    pub head: Mlp,
    pub action_set: ActionSet,
    pub config: ActorConfig,
    opt: Adam,
}

impl QActor {
    /// Random hidden layers and a zero output layer, so every triple starts
    /// with the same value.
    pub fn new<R: Rng + ?Sized>(action_set: ActionSet, config: ActorConfig, rng: &mut R) -> Self {
        let mut head = Mlp::new(&q_head_sizes(action_set), rng);
        let last = head.layers().len() - 1;
        head.layers_mut()[last].weight.fill(0.0);
        Self::with_head(head, action_set, config)
    }

    pub fn with_head(head: Mlp, action_set: ActionSet, config: ActorConfig) -> Self {
        let opt = Adam::new(&head, config.adam);
        Self { head, action_set, config, opt }
    }

    /// Q tensor from a prebuilt observation.
    pub fn q_forward(&self, obs: &Observation) -> Result<QTensor> {
        let n = obs.len();
        let mut input = Array2::zeros((n * n.saturating_sub(1), DECODER_INPUT));
        let mut p = 0;
        for o in &obs.objects {
            let scaled = o.state.features.scaled();
            for r in &o.relations.rows {
                let row = scaled.iter().chain(&o.state.aggregate.0).chain(&r.0);
                for (dst, v) in input.row_mut(p).iter_mut().zip(row) {
                    *dst = *v;
                }
                p += 1;
            }
        }
        let raw = self.head.forward_batch(input.view())?.into_output();
        QTensor::from_raw(n, self.action_set, raw.into_raw_vec_and_offset().0, self.config.normalization)
    }

    /// Q tensor of a feature snapshot, encoding relations with `encoder`.
    pub fn q_tensor(&self, encoder: &Mlp, features: &[ObjectFeatures]) -> Result<QTensor> {
        Ok(self.q_tensors(encoder, &[features])?.remove(0))
    }

    fn head_input(encoder: &Mlp, snapshots: &[&[ObjectFeatures]]) -> Result<Array2<f64>> {
        if let Some(s) = snapshots.iter().find(|s| s.len() < 2) {
            return Err(Error::Config(format!("Q values need at least 2 objects, got {}", s.len())));
        }
        let all: Vec<Vec<usize>> = snapshots.iter().map(|s| (0..s.len()).collect()).collect();
        let rows = PairRows::build(snapshots.iter().zip(&all).map(|(s, a)| (*s, a.as_slice())));
        let relations = encoder.forward_batch(rows.enc_input.view())?.into_output();
        Ok(rows.head_input(&relations))
    }

    pub fn q_tensors(&self, encoder: &Mlp, snapshots: &[&[ObjectFeatures]]) -> Result<Vec<QTensor>> {
        let input = Self::head_input(encoder, snapshots)?;
        let raw = self.head.forward_batch(input.view())?.into_output();
        self.split(snapshots, &raw)
    }

    fn split(&self, snapshots: &[&[ObjectFeatures]], raw: &Array2<f64>) -> Result<Vec<QTensor>> {
        let mut start = 0;
        snapshots
            .iter()
            .map(|s| {
                let n = s.len();
                let rows = n * (n - 1);
                let block = raw.slice(ndarray::s![start..start + rows, ..]);
                start += rows;
                QTensor::from_raw(n, self.action_set, block.iter().copied().collect(), self.config.normalization)
            })
            .collect()
    }

    /// Targets for a batch: the reward after a reset, otherwise bootstrapped
    /// from the current head's normalized Q of the next state.
    pub fn targets(&self, encoder: &Mlp, batch: &[&Experience]) -> Result<Vec<f64>> {
        let next: Vec<&[ObjectFeatures]> = batch.iter().filter_map(|e| e.next.as_deref()).collect();
        let mut next_q = if next.is_empty() { Vec::new() } else { self.q_tensors(encoder, &next)? }.into_iter();
        Ok(batch
            .iter()
            .map(|e| {
                let max = e.next.as_ref().map(|_| next_q.next().expect("one tensor per next state").max_normalized());
                q_target(e.reward, max, self.config.gamma)
            })
            .collect())
    }

    /// One optimizer step on the mean squared error between the normalized Q
    /// of each stored triple and its target; returns the pre-step loss.
    pub fn train(&mut self, encoder: &Mlp, batch: &[&Experience]) -> Result<f64> {
        let (loss, grads) = self.loss_and_grads(encoder, batch)?;
        self.opt.step(&mut self.head, &grads)?;
        Ok(loss)
    }

    /// Batch loss and its gradient with respect to the head parameters.
    /// Experiences sharing a snapshot share one forward pass.
    pub fn loss_and_grads(&self, encoder: &Mlp, batch: &[&Experience]) -> Result<(f64, MlpGrads)> {
        if batch.is_empty() {
            return Err(Error::Empty("actor batch"));
        }
        let targets = self.targets(encoder, batch)?;

        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut snapshots: Vec<&[ObjectFeatures]> = Vec::new();
        let mut owner = Vec::with_capacity(batch.len());
        for e in batch {
            let key: Vec<u64> = e.features.iter().flat_map(|f| f.0).map(f64::to_bits).collect();
            let id = *index.entry(key).or_insert_with(|| {
                snapshots.push(&e.features);
                snapshots.len() - 1
            });
            owner.push(id);
        }

        let input = Self::head_input(encoder, &snapshots)?;
        let cache = self.head.forward_batch(input.view())?;
        let tensors = self.split(&snapshots, cache.output())?;

        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut grad_p: Vec<Vec<f64>> = tensors.iter().map(|q| vec![0.0; q.len()]).collect();
        for ((e, y), &id) in batch.iter().zip(&targets).zip(&owner) {
            let q = &tensors[id];
            let k = q.index(e.choice.focus, e.choice.relation, e.choice.action.index);
            let diff = q.normalized[k] - y;
            loss += scale * diff * diff;
            grad_p[id][k] += 2.0 * scale * diff;
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("actor loss {loss}")));
        }

        let actions = self.action_set.len();
        let mut grad_raw = Vec::with_capacity(cache.output().len());
        for (q, g) in tensors.iter().zip(&grad_p) {
            for d in self.config.normalization.domains(q.len(), actions) {
                grad_raw.extend(softmax_backward(&q.normalized[d.clone()], &g[d]));
            }
        }
        let grad_raw = Array2::from_shape_vec(cache.output().dim(), grad_raw).expect("same layout as output");
        let mut grads = self.head.zero_grads();
        self.head.backward_batch(&cache, grad_raw.view(), &mut grads)?;
        Ok((loss, grads))
    }
}
