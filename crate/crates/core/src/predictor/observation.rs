use super::features::{ObjectFeatures, FEATURE_DIM};

pub const RELATION_DIM: usize = 32;
pub const STATE_DIM: usize = FEATURE_DIM + RELATION_DIM;

/// Directed relation embedding `r_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationVector(pub [f64; RELATION_DIM]);

impl RelationVector {
    pub fn zeros() -> Self {
        Self([0.0; RELATION_DIM])
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = [0.0; RELATION_DIM];
        v.copy_from_slice(s);
        Self(v)
    }
}

/// All relations of one object `i`, one row per partner `j != i` in
/// ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationMatrix {
    pub partners: Vec<usize>,
    pub rows: Vec<RelationVector>,
}

impl RelationMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Element-wise sum of the rows.
    pub fn aggregate(&self) -> RelationVector {
        let mut e = [0.0; RELATION_DIM];
        for row in &self.rows {
            for (acc, v) in e.iter_mut().zip(&row.0) {
                *acc += v;
            }
        }
        RelationVector(e)
    }
}

/// `s_i = [d_i, e_i]` with `e_i` the sum of the object's relation rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub features: ObjectFeatures,
    pub aggregate: RelationVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservedObject {
    pub state: ObjectState,
    pub relations: RelationMatrix,
}

/// Every object's state and relation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub objects: Vec<ObservedObject>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

/// Position of partner `j` in the relation rows of object `i`.
pub fn relation_slot(i: usize, j: usize) -> usize {
    debug_assert_ne!(i, j);
    if j < i {
        j
    } else {
        j - 1
    }
}

/// Inverse of [`relation_slot`].
pub fn slot_partner(i: usize, slot: usize) -> usize {
    if slot < i {
        slot
    } else {
        slot + 1
    }
}
