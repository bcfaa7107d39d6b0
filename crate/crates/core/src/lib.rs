//! Patient-level classification over sparse k-nearest-neighbour patch graphs.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod graph;
pub mod model;
pub mod scalar;
pub mod nn;
pub mod tensor;
pub mod train;
pub mod util;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases used by the pipeline and the CLI.
pub type Tensor = tensor::Tensor<f64>;
pub type Tape = autodiff::Tape<f64>;
pub type PatchGraph = graph::PatchGraph<f64>;
pub type ModelParams = model::ModelParams<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Tensor = crate::tensor::Tensor<f32>;
    pub type Tape = crate::autodiff::Tape<f32>;
    pub type PatchGraph = crate::graph::PatchGraph<f32>;
    pub type ModelParams = crate::model::ModelParams<f32>;
}

#[cfg(test)]
mod testing;
