use serde::Serialize;

use super::{weakly_connected_components, PatchGraph};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub components: usize,
    /// Fraction of edges joining nodes from different slides; 0 without edges.
    pub mixing: f64,
}

impl GraphStats {
    pub fn weakly_connected(&self) -> bool {
        self.components == 1
    }
}

pub fn graph_stats<T: Scalar>(g: &PatchGraph<T>) -> GraphStats {
    let tags = g.slide_tags();
    let cross = g.edges().iter().filter(|&&(s, d)| tags[s] != tags[d]).count();
    GraphStats {
        num_nodes: g.num_nodes(),
        num_edges: g.num_edges(),
        components: weakly_connected_components(g).len(),
        mixing: if g.num_edges() == 0 { 0.0 } else { cross as f64 / g.num_edges() as f64 },
    }
}
