//! Actor and prediction replay buffers.
//!
//! The actor buffer samples a per-focus-object stratified batch; the
//! prediction buffer samples uniformly. Both evict oldest-first and sample
//! with replacement.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actor::{Action, TripleChoice};
use crate::physics::Vec3;
use crate::predictor::{ObjectDelta, ObjectFeatures, FEATURE_DIM};
use crate::{Error, Result};

/// Reward record used to train the actor.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    /// Feature snapshot; relations are re-encoded at training time.
    pub features: Vec<ObjectFeatures>,
    pub choice: TripleChoice,
    pub reward: f64,
    /// `None` when the scene was reset after this interaction.
    pub next: Option<Vec<ObjectFeatures>>,
}

/// Physical outcome record used to train the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    /// Pre-frame features of every object (without the applied force).
    pub features: Vec<ObjectFeatures>,
    pub choice: TripleChoice,
    /// Force applied to the focus object during the frame.
    pub force: Vec3,
    pub focus_truth: ObjectDelta,
    pub relation_truth: ObjectDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferConfig {
    pub actor_capacity: usize,
    pub prediction_capacity: usize,
    pub actor_batch: usize,
    pub prediction_batch: usize,
}

impl Default for BufferConfig {
    fn default() -> Self {
        Self {
            actor_capacity: 100_000,
            prediction_capacity: 2_500_000,
            actor_batch: 1024,
            prediction_batch: 1024,
        }
    }
}

impl BufferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.actor_batch == 0 || self.prediction_batch == 0 {
            return Err(Error::Config("batch sizes must be positive".into()));
        }
        if self.actor_capacity <= self.actor_batch || self.prediction_capacity <= self.prediction_batch {
            return Err(Error::Config("buffer capacities must exceed batch sizes".into()));
        }
        Ok(())
    }
}

/// FIFO store of experiences, indexed by focus object for stratified sampling.
#[derive(Debug, Clone)]
pub struct ActorBuffer {
    capacity: usize,
    items: VecDeque<Experience>,
    /// Sequence number of `items[0]`.
    base: u64,
    strata: Vec<VecDeque<u64>>,
}

impl ActorBuffer {
    pub fn new(capacity: usize, num_objects: usize) -> Self {
        Self {
            capacity: capacity.max(1),
            items: VecDeque::new(),
            base: 0,
            strata: vec![VecDeque::new(); num_objects],
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items.iter()
    }

    pub fn stratum_len(&self, focus: usize) -> usize {
        self.strata.get(focus).map_or(0, VecDeque::len)
    }

    pub fn push(&mut self, exp: Experience) -> Result<()> {
        let focus = exp.choice.focus;
        if focus >= self.strata.len() {
            return Err(Error::IndexOutOfRange { index: focus, len: self.strata.len() });
        }
        if self.items.len() == self.capacity {
            let old = self.items.pop_front().expect("full buffer");
            let popped = self.strata[old.choice.focus].pop_front();
            debug_assert_eq!(popped, Some(self.base));
            self.base += 1;
        }
        let seq = self.base + self.items.len() as u64;
        self.strata[focus].push_back(seq);
        self.items.push_back(exp);
        Ok(())
    }

    /// Per-object sample counts: an even split over non-empty strata with the
    /// remainder handed out in object order.
    pub fn stratum_quota(&self, batch: usize) -> Vec<usize> {
        let live: Vec<usize> = (0..self.strata.len()).filter(|&i| !self.strata[i].is_empty()).collect();
        let mut quota = vec![0; self.strata.len()];
        if live.is_empty() {
            return quota;
        }
        let base = batch / live.len();
        let extra = batch % live.len();
        for (rank, &i) in live.iter().enumerate() {
            quota[i] = base + usize::from(rank < extra);
        }
        quota
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Experience>> {
        if self.items.is_empty() {
            return Err(Error::Empty("actor replay buffer"));
        }
        let mut out = Vec::with_capacity(batch);
        for (stratum, count) in self.strata.iter().zip(self.stratum_quota(batch)) {
            for _ in 0..count {
                let seq = stratum[rng.gen_range(0..stratum.len())];
                out.push(&self.items[(seq - self.base) as usize]);
            }
        }
        Ok(out)
    }
}

/// Bounded FIFO store of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct PredictionBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    saturated: bool,
}

impl PredictionBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), items: VecDeque::new(), saturated: false }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// True once the buffer has evicted at least one transition.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            if !self.saturated {
                log::warn!(
                    "prediction replay buffer saturated at {} transitions; evicting oldest",
                    self.capacity
                );
                self.saturated = true;
            }
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::Empty("prediction replay buffer"));
        }
        Ok((0..batch).map(|_| &self.items[rng.gen_range(0..self.items.len())]).collect())
    }
}

const DUMP_MAGIC: &[u8; 8] = b"CPHYSRB1";

#[derive(Debug, Serialize, Deserialize)]
struct DumpManifest {
    num_objects: usize,
    action_set: usize,
    actor_capacity: usize,
    prediction_capacity: usize,
    experiences: usize,
    transitions: usize,
}

/// Writes both buffers as `magic, u64 manifest length, JSON manifest,
/// experience records, transition records`, all little-endian.
pub fn dump(
    path: impl AsRef<Path>,
    action_set: crate::actor::ActionSet,
    actor: &ActorBuffer,
    prediction: &PredictionBuffer,
) -> Result<()> {
    let manifest = DumpManifest {
        num_objects: actor.strata.len(),
        action_set: action_set.len(),
        actor_capacity: actor.capacity,
        prediction_capacity: prediction.capacity,
        experiences: actor.len(),
        transitions: prediction.len(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header = serde_json::to_vec(&manifest)?;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(&header)?;
    let mut rec = Vec::new();
    for e in actor.iter() {
        rec.clear();
        put_features(&mut rec, &e.features);
        put_choice(&mut rec, &e.choice);
        put_f64(&mut rec, e.reward);
        match &e.next {
            Some(next) => {
                rec.push(1);
                put_features(&mut rec, next);
            }
            None => rec.push(0),
        }
        w.write_all(&rec)?;
    }
    for t in prediction.iter() {
        rec.clear();
        put_features(&mut rec, &t.features);
        put_choice(&mut rec, &t.choice);
        for v in [t.force, t.focus_truth.dpos, t.focus_truth.dvel, t.relation_truth.dpos, t.relation_truth.dvel] {
            put_vec3(&mut rec, v);
        }
        w.write_all(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump written by [`dump`].
pub fn restore(path: impl AsRef<Path>) -> Result<(crate::actor::ActionSet, ActorBuffer, PredictionBuffer)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Format("not a replay buffer dump".into()));
    }
    let len = read_u64(&mut r)? as usize;
    let mut header = vec![0u8; len];
    r.read_exact(&mut header)?;
    let m: DumpManifest = serde_json::from_slice(&header)?;
    let set = crate::actor::ActionSet::from_count(m.action_set)?;
    let mut actor = ActorBuffer::new(m.actor_capacity, m.num_objects);
    for _ in 0..m.experiences {
        let features = read_features(&mut r)?;
        let choice = read_choice(&mut r, set)?;
        let reward = read_f64(&mut r)?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let next = match flag[0] {
            0 => None,
            1 => Some(read_features(&mut r)?),
            other => return Err(Error::Format(format!("bad next-state flag {other}"))),
        };
        actor.push(Experience { features, choice, reward, next })?;
    }
    let mut prediction = PredictionBuffer::new(m.prediction_capacity);
    for _ in 0..m.transitions {
        let features = read_features(&mut r)?;
        let choice = read_choice(&mut r, set)?;
        let mut v = [Vec3::ZERO; 5];
        for slot in &mut v {
            *slot = read_vec3(&mut r)?;
        }
        prediction.push(Transition {
            features,
            choice,
            force: v[0],
            focus_truth: ObjectDelta { dpos: v[1], dvel: v[2] },
            relation_truth: ObjectDelta { dpos: v[3], dvel: v[4] },
        });
    }
    Ok((set, actor, prediction))
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_vec3(buf: &mut Vec<u8>, v: Vec3) {
    for c in v.to_array() {
        put_f64(buf, c);
    }
}

fn put_features(buf: &mut Vec<u8>, f: &[ObjectFeatures]) {
    buf.extend_from_slice(&(f.len() as u32).to_le_bytes());
    for obj in f {
        for v in obj.0 {
            put_f64(buf, v);
        }
    }
}

fn put_choice(buf: &mut Vec<u8>, c: &TripleChoice) {
    for v in [c.focus, c.relation, c.action.index] {
        buf.extend_from_slice(&(v as u32).to_le_bytes());
    }
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

fn read_vec3(r: &mut impl Read) -> Result<Vec3> {
    Ok(Vec3::new(read_f64(r)?, read_f64(r)?, read_f64(r)?))
}

fn read_features(r: &mut impl Read) -> Result<Vec<ObjectFeatures>> {
    let n = read_u32(r)? as usize;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut d = [0.0; FEATURE_DIM];
        for v in &mut d {
            *v = read_f64(r)?;
        }
        out.push(ObjectFeatures(d));
    }
    Ok(out)
}

fn read_choice(r: &mut impl Read, set: crate::actor::ActionSet) -> Result<TripleChoice> {
    let focus = read_u32(r)? as usize;
    let relation = read_u32(r)? as usize;
    let action: Action = set.action(read_u32(r)? as usize)?;
    Ok(TripleChoice { focus, relation, action })
}
