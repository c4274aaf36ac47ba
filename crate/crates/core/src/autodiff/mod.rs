//! Minimal reverse-mode differentiation over dense `f64` tensors.

mod nn;
mod params;
mod tape;
mod tensor;

pub use nn::{zeros, GruCell, Linear, Mlp};
pub use params::{AdamConfig, ParamId, ParamStore};
pub use tape::{sigmoid, Activation, Tape, Var};
pub use tensor::Tensor;
