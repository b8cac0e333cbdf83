use crate::actor::{ActionSet, TripleChoice};
use crate::predictor::relation_slot;

/// Binary record of which (focus, relation, action) triples were taken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageMatrix {
    objects: usize,
    actions: usize,
    marks: Vec<bool>,
}

impl CoverageMatrix {
    pub fn new(objects: usize, action_set: ActionSet) -> Self {
        let actions = action_set.len();
        Self { objects, actions, marks: vec![false; objects * objects.saturating_sub(1) * actions] }
    }

    pub fn objects(&self) -> usize {
        self.objects
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    fn index(&self, focus: usize, relation: usize, action: usize) -> usize {
        (focus * (self.objects - 1) + relation_slot(focus, relation)) * self.actions + action
    }

    pub fn mark(&mut self, c: &TripleChoice) {
        let k = self.index(c.focus, c.relation, c.action.index);
        self.marks[k] = true;
    }

    pub fn is_marked(&self, focus: usize, relation: usize, action: usize) -> bool {
        self.marks[self.index(focus, relation, action)]
    }

    pub fn fill(&mut self) {
        self.marks.fill(true);
    }

    /// Number of marked triples.
    pub fn visited(&self) -> usize {
        self.marks.iter().filter(|m| **m).count()
    }

    /// Fraction of actions taken on every (focus, relation) pair.
    pub fn coverage(&self) -> f64 {
        action_coverage(self)
    }
}

pub fn action_coverage(m: &CoverageMatrix) -> f64 {
    if m.actions == 0 || m.marks.is_empty() {
        return 0.0;
    }
    let pairs = m.marks.len() / m.actions;
    let full = (0..m.actions)
        .filter(|&a| (0..pairs).all(|p| m.marks[p * m.actions + a]))
        .count();
    full as f64 / m.actions as f64
}
