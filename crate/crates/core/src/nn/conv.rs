use std::sync::Arc;

use crate::autodiff::{Activation, SegmentIndex, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{NormalizedAdjacency, PatchGraph};
use crate::scalar::Scalar;

/// One attention head: projection `W [F_in×F_out]` and attention vector
/// `a [2·F_out×1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GatHead {
    pub weight: Var,
    pub attention: Var,
}

#[derive(Debug, Clone)]
pub struct GatOutput {
    /// Head-averaged node features `[N×F_out]`.
    pub out: Var,
    /// Per head, attention coefficient of every edge of the input graph.
    pub attention: Vec<Var>,
}

/// Graph attention layer with head averaging.
///
/// For each edge `v → u` (self-loops included) the score is
/// `LeakyReLU(aᵀ[W h_u ⊕ W h_v])`; coefficients are a softmax over the
/// in-neighbourhood of `u` and the output is `Σ α_uv W h_v`.
/// The graph must carry a self-loop on every node.
pub fn gat_forward<T: Scalar>(
    tape: &mut Tape<T>,
    g: &PatchGraph<T>,
    x: Var,
    heads: &[GatHead],
) -> Result<GatOutput> {
    if heads.is_empty() {
        return Err(Error::Config("GAT layer needs at least one head".into()));
    }
    if !g.has_all_self_loops() {
        return Err(Error::Contract("GAT input graph is missing self-loops".into()));
    }
    let n = g.num_nodes();
    if tape.shape(x).first() != Some(&n) {
        return Err(Error::Dimension(format!(
            "features {:?} for a graph of {n} nodes",
            tape.shape(x)
        )));
    }
    let src: Arc<[usize]> = g.edges().iter().map(|e| e.0).collect::<Vec<_>>().into();
    let dst: Arc<[usize]> = g.edges().iter().map(|e| e.1).collect::<Vec<_>>().into();
    let by_dst = Arc::new(SegmentIndex::new(dst.to_vec(), n)?);
    let e = g.num_edges();

    let mut outputs = Vec::with_capacity(heads.len());
    let mut attention = Vec::with_capacity(heads.len());
    for head in heads {
        let wh = tape.matmul(x, head.weight)?;
        let wh_u = tape.gather_rows(wh, Arc::clone(&dst))?;
        let wh_v = tape.gather_rows(wh, Arc::clone(&src))?;
        let pair = tape.concat(&[wh_u, wh_v], 1)?;
        let raw = tape.matmul(pair, head.attention)?;
        let raw = tape.reshape(raw, vec![e])?;
        let scores = tape.activation(raw, Activation::LEAKY);
        let alpha = tape.segment_softmax(scores, &by_dst)?;
        let messages = tape.mul_rows(wh_v, alpha)?;
        outputs.push(tape.segment_sum(messages, &by_dst)?);
        attention.push(alpha);
    }
    let mut out = outputs[0];
    for &o in &outputs[1..] {
        out = tape.add(out, o)?;
    }
    if outputs.len() > 1 {
        out = tape.scale(out, T::one() / T::of(outputs.len() as f64));
    }
    Ok(GatOutput { out, attention })
}

/// `Â·x` for the sparse normalized adjacency `Â`.
pub fn propagate<T: Scalar>(tape: &mut Tape<T>, adj: &NormalizedAdjacency<T>, x: Var) -> Result<Var> {
    let n = adj.num_nodes();
    if tape.shape(x).first() != Some(&n) {
        return Err(Error::Dimension(format!(
            "features {:?} for an adjacency over {n} nodes",
            tape.shape(x)
        )));
    }
    // entry (u, v) carries x_v into row u
    let src: Arc<[usize]> = adj.edges().iter().map(|e| e.1).collect::<Vec<_>>().into();
    let rows = Arc::new(SegmentIndex::new(adj.edges().iter().map(|e| e.0).collect(), n)?);
    let weights = tape.constant(crate::tensor::Tensor::vector(adj.weights().to_vec()));
    let gathered = tape.gather_rows(x, src)?;
    let weighted = tape.mul_rows(gathered, weights)?;
    tape.segment_sum(weighted, &rows)
}

/// Graph convolution `(Â·X)·W`; the caller applies any activation.
pub fn gcn_forward<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &NormalizedAdjacency<T>,
    x: Var,
    weight: Var,
) -> Result<Var> {
    let agg = propagate(tape, adj, x)?;
    tape.matmul(agg, weight)
}
