//! Object-oriented Q actor: a shared Q head over (focus, relation) pairs,
//! softmax-normalized values, greedy selection and intrinsic rewards.

mod action;
mod agent;
mod q;
mod reward;

pub use action::{Action, ActionSet, TripleChoice};
pub use agent::{q_head_sizes, ActorConfig, QActor, Q_HIDDEN};
pub use q::{normalize_q, select_action, Normalization, QTensor};
pub use reward::{motivate, q_target, MotivatorConfig, Phi, DEFAULT_UPPER_BOUND};
