//! Dense neural-network substrate.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
mod mlp;
mod softmax;

pub use adam::{Adam, AdamConfig};
pub use mlp::{Dense, ForwardCache, Mlp, MlpGrads};
pub use softmax::{softmax, softmax_backward};
pub(crate) use softmax::softmax_in_place;
