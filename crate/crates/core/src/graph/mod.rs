//! Directed k-nearest-neighbour patch graphs and the adjacency utilities
//! built on top of them.

mod components;
mod export;
mod knn;
mod layout;
mod stats;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use components::{component_labels, weakly_connected_components, DisjointSet};
pub use export::{write_edge_list, write_node_table};
pub use knn::build_knn_graph;
pub use layout::spring_layout;
pub use stats::{graph_stats, GraphStats};

/// Node features plus a directed edge list `(src, dst)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGraph<T> {
    features: Tensor<T>,
    edges: Vec<(usize, usize)>,
    slide_tag: Vec<String>,
    node_origin: Vec<usize>,
}

impl<T: Scalar> PatchGraph<T> {
    pub fn new(
        features: Tensor<T>,
        edges: Vec<(usize, usize)>,
        slide_tag: Vec<String>,
        node_origin: Vec<usize>,
    ) -> Result<Self> {
        if !features.is_matrix() {
            return Err(Error::Dimension(format!(
                "node features must be a matrix, got {:?}",
                features.shape()
            )));
        }
        let n = features.rows();
        if slide_tag.len() != n || node_origin.len() != n {
            return Err(Error::Dimension(format!(
                "{n} nodes but {} slide tags and {} origins",
                slide_tag.len(),
                node_origin.len()
            )));
        }
        if let Some(&(s, d)) = edges.iter().find(|&&(s, d)| s >= n || d >= n) {
            return Err(Error::Dimension(format!("edge {s}->{d} out of range for {n} nodes")));
        }
        Ok(PatchGraph { features, edges, slide_tag, node_origin })
    }

    /// Edgeless graph over `features`, all nodes tagged with the empty slide.
    pub fn from_features(features: Tensor<T>) -> Result<Self> {
        let n = features.rows();
        Self::new(features, Vec::new(), vec![String::new(); n], (0..n).collect())
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn features(&self) -> &Tensor<T> {
        &self.features
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn slide_tags(&self) -> &[String] {
        &self.slide_tag
    }

    pub fn node_origin(&self) -> &[usize] {
        &self.node_origin
    }

    pub fn with_slide_tags(mut self, tags: Vec<String>) -> Result<Self> {
        if tags.len() != self.num_nodes() {
            return Err(Error::Dimension(format!(
                "{} slide tags for {} nodes",
                tags.len(),
                self.num_nodes()
            )));
        }
        self.slide_tag = tags;
        Ok(self)
    }

    pub fn with_features(mut self, features: Tensor<T>) -> Result<Self> {
        if !features.is_matrix() || features.rows() != self.num_nodes() {
            return Err(Error::Dimension(format!(
                "replacement features {:?} for {} nodes",
                features.shape(),
                self.num_nodes()
            )));
        }
        self.features = features;
        Ok(self)
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes()];
        for &(s, _) in &self.edges {
            deg[s] += 1;
        }
        deg
    }

    /// Edge list with a `(u, u)` loop appended for every node lacking one.
    pub fn edges_with_self_loops(&self) -> Vec<(usize, usize)> {
        let mut has = vec![false; self.num_nodes()];
        for &(s, d) in &self.edges {
            if s == d {
                has[s] = true;
            }
        }
        let mut out = self.edges.clone();
        out.extend((0..self.num_nodes()).filter(|&u| !has[u]).map(|u| (u, u)));
        out
    }

    /// Same nodes, self-loops added where missing.
    pub fn with_self_loops(&self) -> Self {
        PatchGraph { edges: self.edges_with_self_loops(), ..self.clone() }
    }

    pub fn has_all_self_loops(&self) -> bool {
        let mut has = vec![false; self.num_nodes()];
        for &(s, d) in &self.edges {
            if s == d {
                has[s] = true;
            }
        }
        has.into_iter().all(|h| h)
    }

    /// Graph relabelled so that new node `i` is old node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::Contract("not a permutation".into()));
            }
            inverse[old] = new;
        }
        if perm.len() != n {
            return Err(Error::Contract("not a permutation".into()));
        }
        let edges = self.edges.iter().map(|&(s, d)| (inverse[s], inverse[d])).collect();
        PatchGraph::new(
            self.features.select_rows(perm),
            edges,
            perm.iter().map(|&o| self.slide_tag[o].clone()).collect(),
            perm.iter().map(|&o| self.node_origin[o]).collect(),
        )
    }
}

/// Subgraph on `kept` nodes (new index = position in `kept`); an edge
/// survives only when both endpoints are kept.
pub fn induced_subgraph<T: Scalar>(g: &PatchGraph<T>, kept: &[usize]) -> Result<PatchGraph<T>> {
    if kept.is_empty() {
        return Err(Error::EmptyGraph("induced subgraph of an empty node set".into()));
    }
    let n = g.num_nodes();
    let mut remap = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        if old >= n {
            return Err(Error::Dimension(format!("kept index {old} out of range for {n} nodes")));
        }
        if remap[old] != usize::MAX {
            return Err(Error::Contract(format!("kept index {old} repeated")));
        }
        remap[old] = new;
    }
    let edges = g
        .edges
        .iter()
        .filter(|&&(s, d)| remap[s] != usize::MAX && remap[d] != usize::MAX)
        .map(|&(s, d)| (remap[s], remap[d]))
        .collect();
    PatchGraph::new(
        g.features.select_rows(kept),
        edges,
        kept.iter().map(|&i| g.slide_tag[i].clone()).collect(),
        kept.iter().map(|&i| g.node_origin[i]).collect(),
    )
}

/// Symmetrically normalized adjacency with self-loops, `D̃^{-1/2}(A+I)D̃^{-1/2}`,
/// stored sparsely. Both directions of every undirected edge are listed.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    weights: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<T> {
        self.edges
            .binary_search(&(u, v))
            .ok()
            .map(|i| self.weights[i])
    }

    pub fn to_dense(&self) -> Tensor<T> {
        let n = self.num_nodes;
        let mut t = Tensor::zeros(vec![n, n]);
        for (&(u, v), &w) in self.edges.iter().zip(&self.weights) {
            t.data_mut()[u * n + v] = w;
        }
        t
    }
}

/// Symmetrizes the edge set (u–v if u→v or v→u), adds self-loops and
/// weights each entry by `1/√(d̃_u d̃_v)`.
pub fn normalized_adjacency<T: Scalar>(g: &PatchGraph<T>) -> NormalizedAdjacency<T> {
    let n = g.num_nodes();
    let mut pairs: BTreeSet<(usize, usize)> = (0..n).map(|u| (u, u)).collect();
    for &(s, d) in g.edges() {
        pairs.insert((s, d));
        pairs.insert((d, s));
    }
    let mut degree = vec![0usize; n];
    for &(u, _) in &pairs {
        degree[u] += 1;
    }
    let edges: Vec<(usize, usize)> = pairs.into_iter().collect();
    let weights = edges
        .iter()
        .map(|&(u, v)| T::one() / T::of((degree[u] * degree[v]) as f64).sqrt())
        .collect();
    NormalizedAdjacency { num_nodes: n, edges, weights }
}
