use super::{BoundConv, BoundModel, ModelConfig, PoolKind};
use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{normalized_adjacency, PatchGraph};
use crate::nn::{gat_forward, gcn_forward, mlp_forward, readout, sagpool, topk_pool};
use crate::scalar::Scalar;

/// What one block did to the graph.
#[derive(Debug, Clone)]
pub struct BlockTrace<T> {
    /// Graph after pooling; `node_origin` points back into the input bag.
    pub graph: PatchGraph<T>,
    /// Kept indices into the block's input graph.
    pub kept: Vec<usize>,
    /// Pooling score of every input node.
    pub scores: Var,
    /// Per GAT head, the attention of every edge (self-loops included).
    pub attention: Vec<Var>,
    /// Mean ⊕ max of the pooled features.
    pub readout: Var,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput<T> {
    /// Two class logits.
    pub logits: Var,
    pub blocks: Vec<BlockTrace<T>>,
}

/// Runs the network on one bag graph.
///
/// Each block adds self-loops, applies the conv layer and activation, pools,
/// and reads out; the concatenated readouts feed the MLP head.
pub fn mustang_forward<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &PatchGraph<T>,
    model: &BoundModel,
    cfg: &ModelConfig,
) -> Result<ForwardOutput<T>> {
    if graph.num_nodes() == 0 {
        return Err(Error::EmptyBag("graph has no nodes".into()));
    }
    if graph.features().cols() != cfg.input_dim {
        return Err(Error::Dimension(format!(
            "bag features have width {}, model expects {}",
            graph.features().cols(),
            cfg.input_dim
        )));
    }
    let mut g = graph.clone();
    let mut x = tape.constant(graph.features().clone());
    let mut traces = Vec::with_capacity(model.blocks.len());
    let mut readouts = Vec::with_capacity(model.blocks.len());
    for block in &model.blocks {
        let (h, attention) = match &block.conv {
            BoundConv::Gat(heads) => {
                let out = gat_forward(tape, &g.with_self_loops(), x, heads)?;
                (out.out, out.attention)
            }
            BoundConv::Gcn(w) => (gcn_forward(tape, &normalized_adjacency(&g), x, *w)?, Vec::new()),
        };
        let h = tape.activation(h, cfg.activation);
        let pooled = match cfg.pool {
            PoolKind::Sag => sagpool(tape, &g, h, block.pool, cfg.pooling_ratio)?,
            PoolKind::TopK => topk_pool(tape, &g, h, block.pool, cfg.pooling_ratio)?,
        };
        let r = readout(tape, pooled.x)?;
        readouts.push(r);
        x = pooled.x;
        traces.push(BlockTrace {
            graph: pooled.graph.clone(),
            kept: pooled.kept,
            scores: pooled.scores,
            attention,
            readout: r,
        });
        g = pooled.graph;
    }
    let summary = tape.concat(&readouts, 0)?;
    let logits = mlp_forward(tape, summary, &model.mlp, cfg.activation)?;
    Ok(ForwardOutput { logits, blocks: traces })
}

/// Softmax probability of class 1 from two logits.
pub fn positive_probability<T: Scalar>(logits: &[T]) -> T {
    let m = logits[0].max(logits[1]);
    let a = (logits[0] - m).exp();
    let b = (logits[1] - m).exp();
    b / (a + b)
}
