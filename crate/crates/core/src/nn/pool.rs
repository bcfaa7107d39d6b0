use std::cmp::Ordering;
use std::sync::Arc;

use crate::autodiff::{Activation, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{induced_subgraph, normalized_adjacency, PatchGraph};
use crate::scalar::Scalar;
use crate::util::ceil_fraction;

use super::propagate;

#[derive(Debug, Clone)]
pub struct PoolOutput<T> {
    /// Subgraph induced by the kept nodes.
    pub graph: PatchGraph<T>,
    /// Gated features of the kept nodes `[n'×F]`.
    pub x: Var,
    /// Kept node indices into the input graph, ascending.
    pub kept: Vec<usize>,
    /// Score of every input node `[N]`.
    pub scores: Var,
}

/// Number of nodes kept out of `n` at the given ratio: `⌈ratio·n⌉`.
pub fn pooled_size(n: usize, ratio: f64) -> usize {
    ceil_fraction(n, ratio)
}

/// Indices of the `count` largest scores (ties by lower index), ascending.
pub fn top_rank<T: Scalar>(scores: &[T], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    order.truncate(count);
    order.sort_unstable();
    order
}

fn check_ratio(ratio: f64) -> Result<()> {
    if ratio > 0.0 && ratio <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("pooling ratio {ratio} outside (0, 1]")))
    }
}

fn keep_and_gate<T: Scalar>(
    tape: &mut Tape<T>,
    g: &PatchGraph<T>,
    x: Var,
    scores: Var,
    gate: Var,
    ratio: f64,
) -> Result<PoolOutput<T>> {
    let n = g.num_nodes();
    let kept = top_rank(tape.value(scores).data(), pooled_size(n, ratio));
    let idx: Arc<[usize]> = kept.clone().into();
    let rows = tape.gather_rows(x, Arc::clone(&idx))?;
    let gates = tape.gather_rows(gate, idx)?;
    let x = tape.mul_rows(rows, gates)?;
    let graph = induced_subgraph(g, &kept)?;
    Ok(PoolOutput { graph, x, kept, scores })
}

/// Self-attention graph pooling.
///
/// Scores `Z = tanh(Â·X·Θ)` use the symmetric normalized adjacency of `g`;
/// the top `⌈ratio·N⌉` nodes are kept and their features multiplied by their
/// score.
pub fn sagpool<T: Scalar>(
    tape: &mut Tape<T>,
    g: &PatchGraph<T>,
    x: Var,
    theta: Var,
    ratio: f64,
) -> Result<PoolOutput<T>> {
    check_ratio(ratio)?;
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph("cannot pool an empty graph".into()));
    }
    let adj = normalized_adjacency(g);
    let projected = tape.matmul(x, theta)?;
    let z = propagate(tape, &adj, projected)?;
    let z = tape.reshape(z, vec![n])?;
    let z = tape.activation(z, Activation::Tanh);
    keep_and_gate(tape, g, x, z, z, ratio)
}

/// Projection-score pooling: `y = X·p/‖p‖`, keep the top `⌈ratio·N⌉`,
/// gate kept rows by `sigmoid(y)`.
pub fn topk_pool<T: Scalar>(
    tape: &mut Tape<T>,
    g: &PatchGraph<T>,
    x: Var,
    projection: Var,
    ratio: f64,
) -> Result<PoolOutput<T>> {
    check_ratio(ratio)?;
    let n = g.num_nodes();
    if n == 0 {
        return Err(Error::EmptyGraph("cannot pool an empty graph".into()));
    }
    let norm = tape.norm(projection);
    if tape.value(norm).data()[0] == T::zero() {
        return Err(Error::DegenerateProjection);
    }
    let raw = tape.matmul(x, projection)?;
    let y = tape.div_scalar(raw, norm)?;
    let y = tape.reshape(y, vec![n])?;
    let gate = tape.activation(y, Activation::Sigmoid);
    keep_and_gate(tape, g, x, y, gate, ratio)
}
