use rand::Rng;
use serde::{Deserialize, Serialize};

use super::action::{ActionSet, TripleChoice};
use crate::nn::softmax_in_place;
use crate::predictor::{relation_slot, slot_partner};
use crate::{Error, Result};

/// Domain over which raw Q values are softmax-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// One softmax over every (focus, relation, action) triple.
    #[default]
    Global,
    /// A separate softmax over the actions of each (focus, relation) pair.
    PerSlot,
}

impl Normalization {
    /// Splits a flat tensor into the index ranges that are normalized together.
    pub(crate) fn domains(self, len: usize, actions: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
        let step = match self {
            Self::Global => len.max(1),
            Self::PerSlot => actions,
        };
        (0..len).step_by(step).map(move |s| s..(s + step).min(len))
    }
}

/// Q values laid out as `[focus][relation slot][action]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QTensor {
    pub objects: usize,
    pub action_set: ActionSet,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl QTensor {
    pub fn from_raw(objects: usize, action_set: ActionSet, raw: Vec<f64>, norm: Normalization) -> Result<Self> {
        let expected = objects * objects.saturating_sub(1) * action_set.len();
        if raw.len() != expected || expected == 0 {
            return Err(Error::DimensionMismatch { expected, got: raw.len() });
        }
        let normalized = normalize_q(&raw, action_set.len(), norm)?;
        Ok(Self { objects, action_set, raw, normalized })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn num_actions(&self) -> usize {
        self.action_set.len()
    }

    pub fn index(&self, focus: usize, relation: usize, action: usize) -> usize {
        (focus * (self.objects - 1) + relation_slot(focus, relation)) * self.num_actions() + action
    }

    pub fn choice(&self, index: usize) -> TripleChoice {
        let a = self.num_actions();
        let pair = index / a;
        let focus = pair / (self.objects - 1);
        let relation = slot_partner(focus, pair % (self.objects - 1));
        let action = self.action_set.action(index % a).expect("index within tensor");
        TripleChoice { focus, relation, action }
    }

    pub fn normalized_at(&self, c: &TripleChoice) -> f64 {
        self.normalized[self.index(c.focus, c.relation, c.action.index)]
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Softmax of `raw` over each normalization domain.
pub fn normalize_q(raw: &[f64], actions: usize, norm: Normalization) -> Result<Vec<f64>> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("raw Q values".into()));
    }
    let mut out = raw.to_vec();
    for d in norm.domains(raw.len(), actions) {
        softmax_in_place(&mut out[d]);
    }
    Ok(out)
}

/// Greedy triple over the normalized tensor; exact ties are broken uniformly.
pub fn select_action<R: Rng + ?Sized>(q: &QTensor, rng: &mut R) -> TripleChoice {
    let best = q.max_normalized();
    let mut seen = 0usize;
    let mut pick = 0;
    // reservoir sampling over the maximal entries
    for (k, v) in q.normalized.iter().enumerate() {
        if *v == best {
            seen += 1;
            if rng.gen_range(0..seen) == 0 {
                pick = k;
            }
        }
    }
    q.choice(pick)
}
