use serde::Serialize;

use super::{ConvKind, ModelConfig, PoolKind};
use crate::nn::pooled_size;

/// Analytic cost of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceEstimate {
    pub flops: u64,
    /// Part of `flops` proportional to the edge count.
    pub edge_flops: f64,
    /// Part of `flops` independent of the edge count.
    pub dense_flops: f64,
    /// Part of `dense_flops` proportional to per-block node counts.
    pub node_flops: f64,
    /// Per-graph constant part of `dense_flops` (MLP head, readout concat).
    pub fixed_flops: f64,
    /// Stored intermediate scalars.
    pub activations: f64,
    /// Values plus gradients of inputs, parameters and intermediates at
    /// 8 bytes each.
    pub peak_bytes: u64,
}

#[derive(Default)]
struct Counter {
    edge: f64,
    dense: f64,
    fixed: f64,
    edge_values: f64,
    dense_values: f64,
}

impl Counter {
    /// An op on `e` edge rows and `n` node rows, `flops` and `values` per row.
    fn op(&mut self, e: f64, n: f64, flops: f64, values: f64) {
        self.edge += e * flops;
        self.dense += n * flops;
        self.edge_values += e * values;
        self.dense_values += n * values;
    }

    fn fixed(&mut self, flops: f64, values: f64) {
        self.fixed += flops;
        self.dense_values += values;
    }
}

/// Symmetrized-edge share of a directed k-NN edge set; mutual neighbours
/// collapse, so the undirected support is between E and 2E.
const SYMMETRIC_EDGE_FACTOR: f64 = 1.5;

/// Counts forward-pass operations the same way the tape does, for a bag of
/// `n` nodes and a k-NN graph of out-degree `min(k, n-1)`.
///
/// Edge counts of pooled graphs assume kept nodes are a uniform sample, so
/// block `b` keeps `(n_b/n_{b-1})²` of the previous edges.
pub fn resource_estimate(n: usize, k: usize, cfg: &ModelConfig) -> ResourceEstimate {
    let h = cfg.hidden_dim as f64;
    let fin0 = cfg.input_dim as f64;
    let mut c = Counter::default();
    let mut nodes = n;
    let mut edges = (n * k.min(n.saturating_sub(1))) as f64;
    for b in 0..cfg.num_blocks {
        let nf = nodes as f64;
        let fin = if b == 0 { fin0 } else { h };
        let sym = SYMMETRIC_EDGE_FACTOR * edges;
        match cfg.conv {
            ConvKind::Gat => {
                let m = cfg.heads as f64;
                for _ in 0..cfg.heads {
                    c.op(0.0, nf, 2.0 * fin * h, h);
                    // gathers and concat: storage only
                    c.op(edges, nf, 0.0, 4.0 * h);
                    c.op(edges, nf, 4.0 * h, 1.0);
                    c.op(edges, nf, 0.0, 1.0);
                    c.op(edges, nf, 1.0, 1.0);
                    c.op(edges, nf, 4.0, 1.0);
                    c.op(edges, nf, h, h);
                    c.op(edges, 0.0, h, 0.0);
                    c.op(0.0, nf, h, h);
                }
                if cfg.heads > 1 {
                    c.op(0.0, nf * m, h, h);
                }
            }
            ConvKind::Gcn => {
                c.op(sym, nf, 0.0, fin);
                c.op(sym, nf, fin, fin);
                c.op(sym, nf, fin, 0.0);
                c.op(0.0, nf, 0.0, fin);
                c.op(0.0, nf, 2.0 * fin * h, h);
            }
        }
        c.op(0.0, nf, h, h);
        let kept = pooled_size(nodes, cfg.pooling_ratio);
        let kf = kept as f64;
        match cfg.pool {
            PoolKind::Sag => {
                c.op(0.0, nf, 2.0 * h, 1.0);
                c.op(sym, nf, 0.0, 1.0);
                c.op(sym, nf, 1.0, 1.0);
                c.op(sym, nf, 1.0, 0.0);
                c.op(0.0, nf, 1.0, 3.0);
            }
            PoolKind::TopK => {
                c.fixed(2.0 * h, 1.0);
                c.op(0.0, nf, 2.0 * h, 1.0);
                c.op(0.0, nf, 2.0, 3.0);
            }
        }
        c.op(0.0, kf, h, 2.0 * h + 1.0);
        c.op(0.0, kf, 2.0 * h, 0.0);
        c.fixed(0.0, 4.0 * h);
        if nodes > 0 {
            edges *= (kf / nf) * (kf / nf);
        }
        nodes = kept;
    }
    let dims = cfg.mlp_dims();
    c.fixed(0.0, 2.0 * dims[0] as f64);
    for (i, w) in dims.windows(2).enumerate() {
        let (a, o) = (w[0] as f64, w[1] as f64);
        let act = if i + 2 < dims.len() { 1.0 } else { 0.0 };
        c.fixed(2.0 * a * o + o + act * o, (2.0 + act) * o);
    }
    c.fixed(0.0, 2.0);

    let params: usize = super::param_layout(cfg).iter().map(|s| s.numel()).sum();
    let activations = c.edge_values + c.dense_values;
    let stored = (n * cfg.input_dim) as f64 + 2.0 * params as f64 + 2.0 * activations;
    ResourceEstimate {
        flops: (c.edge + c.dense + c.fixed).round() as u64,
        edge_flops: c.edge,
        dense_flops: c.dense + c.fixed,
        node_flops: c.dense,
        fixed_flops: c.fixed,
        activations,
        peak_bytes: (8.0 * stored).round() as u64,
    }
}
