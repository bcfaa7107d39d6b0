//! Differentiable graph layers recorded on a [`Tape`](crate::autodiff::Tape).
//!
//! Parameters are passed as already-bound [`Var`](crate::autodiff::Var)s so
//! the same functions serve training, inference and gradient checks.

mod conv;
mod mlp;
mod pool;
mod readout;

pub use conv::{gat_forward, gcn_forward, propagate, GatHead, GatOutput};
pub use mlp::{mlp_forward, Dense};
pub use pool::{pooled_size, sagpool, top_rank, topk_pool, PoolOutput};
pub use readout::readout;
