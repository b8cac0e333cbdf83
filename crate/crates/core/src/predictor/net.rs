use std::ops::Range;

use ndarray::{s, Array2, ArrayView2};
use rand::Rng;

use super::features::{ObjectDelta, ObjectFeatures, DPOS_SCALE, DVEL_SCALE, FEATURE_DIM};
use super::observation::{
    ObjectState, ObservedObject, Observation, RelationMatrix, RelationVector, RELATION_DIM, STATE_DIM,
};
use crate::nn::{ForwardCache, Mlp, MlpGrads};
use crate::physics::Vec3;
use crate::{Error, Result};

pub const ENCODER_SIZES: [usize; 4] = [2 * FEATURE_DIM, 64, 64, RELATION_DIM];
pub const DECODER_INPUT: usize = STATE_DIM + RELATION_DIM;
pub const DECODER_SIZES: [usize; 4] = [DECODER_INPUT, 128, 128, 3];

/// Relation encoder plus position and velocity decoders.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPhysicsNet {
    pub encoder: Mlp,
    pub pos_decoder: Mlp,
    pub vel_decoder: Mlp,
}

/// Gradients for the three networks of a [`GraphPhysicsNet`].
#[derive(Debug, Clone)]
pub struct GraphGrads {
    pub encoder: MlpGrads,
    pub pos_decoder: MlpGrads,
    pub vel_decoder: MlpGrads,
}

/// Directed pair rows for a set of (scene, object) groups. Row `p` of group
/// `g` encodes `(k, j)` where `k` is the group's object and `j` runs over the
/// other objects of the same scene in ascending order.
#[derive(Debug, Clone)]
pub(crate) struct PairRows {
    pub enc_input: Array2<f64>,
    pub groups: Vec<Range<usize>>,
}

impl PairRows {
    /// `scenes` pairs a feature snapshot with the objects to expand.
    pub fn build<'a>(scenes: impl IntoIterator<Item = (&'a [ObjectFeatures], &'a [usize])>) -> Self {
        let mut data = Vec::new();
        let mut groups = Vec::new();
        let mut rows = 0;
        for (features, objects) in scenes {
            let scaled: Vec<_> = features.iter().map(ObjectFeatures::scaled).collect();
            for &k in objects {
                let start = rows;
                for (j, dj) in scaled.iter().enumerate() {
                    if j == k {
                        continue;
                    }
                    data.extend_from_slice(&scaled[k]);
                    data.extend_from_slice(dj);
                    rows += 1;
                }
                groups.push(start..rows);
            }
        }
        let enc_input = Array2::from_shape_vec((rows, 2 * FEATURE_DIM), data).expect("row-major pairs");
        Self { enc_input, groups }
    }

    /// Builds `[d_k, e_k, r_kj]` rows from encoder outputs `relations`.
    pub fn head_input(&self, relations: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.enc_input.nrows(), DECODER_INPUT));
        for g in &self.groups {
            let rows = relations.slice(s![g.clone(), ..]);
            let e = rows.sum_axis(ndarray::Axis(0));
            for p in g.clone() {
                let mut row = out.row_mut(p);
                row.slice_mut(s![0..FEATURE_DIM])
                    .assign(&self.enc_input.slice(s![p, 0..FEATURE_DIM]));
                row.slice_mut(s![FEATURE_DIM..STATE_DIM]).assign(&e);
                row.slice_mut(s![STATE_DIM..]).assign(&relations.row(p));
            }
        }
        out
    }

    /// Maps a gradient on [`head_input`](Self::head_input) rows back onto the
    /// relation rows: direct term plus the group-wide aggregate term.
    pub fn relation_grad(&self, head_grad: ArrayView2<f64>) -> Array2<f64> {
        let mut out = head_grad.slice(s![.., STATE_DIM..]).to_owned();
        for g in &self.groups {
            let e_grad = head_grad
                .slice(s![g.clone(), FEATURE_DIM..STATE_DIM])
                .sum_axis(ndarray::Axis(0));
            for p in g.clone() {
                let mut row = out.row_mut(p);
                row += &e_grad;
            }
        }
        out
    }
}

/// Forward state of the full predictor over a [`PairRows`] batch.
pub(crate) struct PredictorPass {
    rows: PairRows,
    encoder: ForwardCache,
    pos: ForwardCache,
    vel: ForwardCache,
    /// One prediction per group.
    pub predictions: Vec<ObjectDelta>,
}

impl GraphPhysicsNet {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            encoder: Mlp::new(&ENCODER_SIZES, rng),
            pos_decoder: Mlp::new(&DECODER_SIZES, rng),
            vel_decoder: Mlp::new(&DECODER_SIZES, rng),
        }
    }

    pub fn zeros() -> Self {
        Self {
            encoder: Mlp::zeros(&ENCODER_SIZES),
            pos_decoder: Mlp::zeros(&DECODER_SIZES),
            vel_decoder: Mlp::zeros(&DECODER_SIZES),
        }
    }

    pub fn zero_grads(&self) -> GraphGrads {
        GraphGrads {
            encoder: self.encoder.zero_grads(),
            pos_decoder: self.pos_decoder.zero_grads(),
            vel_decoder: self.vel_decoder.zero_grads(),
        }
    }

    /// `r_ij = f_r(d_i, d_j)`.
    pub fn encode_relation(&self, d_i: &ObjectFeatures, d_j: &ObjectFeatures) -> RelationVector {
        let mut input = [0.0; 2 * FEATURE_DIM];
        input[..FEATURE_DIM].copy_from_slice(&d_i.scaled());
        input[FEATURE_DIM..].copy_from_slice(&d_j.scaled());
        let out = self.encoder.forward(&input).expect("encoder input width is fixed");
        RelationVector::from_slice(&out)
    }

    /// Encodes all `N(N-1)` directed relations and aggregates them per object.
    pub fn build_observation(&self, features: &[ObjectFeatures]) -> Result<Observation> {
        if features.len() < 2 {
            return Err(Error::Config(format!(
                "an observation needs at least 2 objects, got {}",
                features.len()
            )));
        }
        let all: Vec<usize> = (0..features.len()).collect();
        let rows = PairRows::build([(features, all.as_slice())]);
        let relations = self.encoder.forward_batch(rows.enc_input.view())?.into_output();
        let objects = rows
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let matrix = RelationMatrix {
                    partners: (0..features.len()).filter(|&j| j != i).collect(),
                    rows: g
                        .clone()
                        .map(|p| RelationVector::from_slice(relations.row(p).as_slice().expect("contiguous")))
                        .collect(),
                };
                ObservedObject {
                    state: ObjectState { features: features[i], aggregate: matrix.aggregate() },
                    relations: matrix,
                }
            })
            .collect();
        Ok(Observation { objects })
    }

    /// Sums the per-relation decoder outputs for one object.
    pub fn predict_delta(&self, state: &ObjectState, relations: &RelationMatrix) -> Result<ObjectDelta> {
        let scaled = state.features.scaled();
        let mut input = Array2::zeros((relations.len(), DECODER_INPUT));
        for (p, r) in relations.rows.iter().enumerate() {
            let mut row = input.row_mut(p);
            for (k, v) in scaled.iter().chain(&state.aggregate.0).chain(&r.0).enumerate() {
                row[k] = *v;
            }
        }
        let pos = self.pos_decoder.forward_batch(input.view())?.into_output();
        let vel = self.vel_decoder.forward_batch(input.view())?.into_output();
        Ok(sum_rows(&pos, &vel, 0..relations.len()))
    }

    /// Predicts deltas for `objects` of one already-conditioned snapshot.
    pub fn predict_objects(&self, features: &[ObjectFeatures], objects: &[usize]) -> Result<Vec<ObjectDelta>> {
        if features.len() < 2 {
            return Err(Error::Config("prediction needs at least 2 objects".into()));
        }
        if let Some(&bad) = objects.iter().find(|&&k| k >= features.len()) {
            return Err(Error::IndexOutOfRange { index: bad, len: features.len() });
        }
        Ok(self.forward_pass(PairRows::build([(features, objects)]))?.predictions)
    }

    pub fn predict_all(&self, features: &[ObjectFeatures]) -> Result<Vec<ObjectDelta>> {
        let all: Vec<usize> = (0..features.len()).collect();
        self.predict_objects(features, &all)
    }

    pub(crate) fn forward_pass(&self, rows: PairRows) -> Result<PredictorPass> {
        let encoder = self.encoder.forward_batch(rows.enc_input.view())?;
        let head = rows.head_input(encoder.output());
        let pos = self.pos_decoder.forward_batch(head.view())?;
        let vel = self.vel_decoder.forward_batch(head.view())?;
        let predictions = rows
            .groups
            .iter()
            .map(|g| sum_rows(pos.output(), vel.output(), g.clone()))
            .collect();
        Ok(PredictorPass { rows, encoder, pos, vel, predictions })
    }

    /// Backpropagates per-group gradients on the predicted deltas (in meters
    /// and m/s) through decoders and encoder.
    pub(crate) fn backward_pass(
        &self,
        pass: &PredictorPass,
        grad_predictions: &[ObjectDelta],
        grads: &mut GraphGrads,
    ) -> Result<()> {
        let rows = pass.rows.enc_input.nrows();
        let mut gpos = Array2::zeros((rows, 3));
        let mut gvel = Array2::zeros((rows, 3));
        for (g, d) in pass.rows.groups.iter().zip(grad_predictions) {
            let dp = d.dpos * DPOS_SCALE;
            let dv = d.dvel * DVEL_SCALE;
            for p in g.clone() {
                gpos.row_mut(p).assign(&ndarray::arr1(&dp.to_array()));
                gvel.row_mut(p).assign(&ndarray::arr1(&dv.to_array()));
            }
        }
        let mut head_grad = self.pos_decoder.backward_batch(&pass.pos, gpos.view(), &mut grads.pos_decoder)?;
        head_grad += &self.vel_decoder.backward_batch(&pass.vel, gvel.view(), &mut grads.vel_decoder)?;
        let rel_grad = pass.rows.relation_grad(head_grad.view());
        self.encoder.backward_batch(&pass.encoder, rel_grad.view(), &mut grads.encoder)?;
        Ok(())
    }
}

fn sum_rows(pos: &Array2<f64>, vel: &Array2<f64>, rows: Range<usize>) -> ObjectDelta {
    let p = pos.slice(s![rows.clone(), ..]).sum_axis(ndarray::Axis(0));
    let v = vel.slice(s![rows, ..]).sum_axis(ndarray::Axis(0));
    ObjectDelta {
        dpos: Vec3::new(p[0], p[1], p[2]) * DPOS_SCALE,
        dvel: Vec3::new(v[0], v[1], v[2]) * DVEL_SCALE,
    }
}
