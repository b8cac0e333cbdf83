//! Intrinsically motivated intuitive-physics learning on colliding spheres.
//!
//! The crate is split along the data flow of one interaction:
//!
//! - [`physics`]: deterministic impulse-based sphere simulator (ground truth).
//! - [`nn`]: dense MLPs, reverse-mode gradients, Adam, softmax, checkpoints.
//! - [`predictor`]: relation encoder plus position/velocity decoders that
//!   predict per-frame deltas.
//! - [`actor`]: object-oriented Q actor with normalized intrinsic rewards.
//! - [`replay`]: actor and prediction replay buffers.
//! - [`harness`]: scenes, stationary / non-stationary loops, metrics, evals.

pub mod actor;
pub mod error;
pub mod harness;
pub mod nn;
pub mod physics;
pub mod predictor;
pub mod replay;

pub use error::{Error, Result};
