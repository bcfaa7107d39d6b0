//! Define-by-run reverse-mode differentiation over dense arrays.
//!
//! A [`Tape`] records every operation in creation order, so reverse creation
//! order is a valid topological order for the backward sweep. Each node is
//! visited once. Handles ([`Var`]) are plain indices into the tape.

mod gradcheck;
mod ops;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use gradcheck::{gradient_checks, gradient_errors, GradientError, FD_STEP};
pub use ops::Activation;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Assignment of rows to segments, e.g. edges grouped by destination node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentIndex {
    ids: Vec<usize>,
    count: usize,
}

impl SegmentIndex {
    pub fn new(ids: Vec<usize>, count: usize) -> Result<Self> {
        if let Some(&bad) = ids.iter().find(|&&s| s >= count) {
            return Err(Error::Dimension(format!(
                "segment id {bad} out of range for {count} segments"
            )));
        }
        Ok(SegmentIndex { ids, count })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    AddRow(Var, Var),
    Add(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    Act(Var, Activation),
    Concat { parts: Vec<Var>, axis: usize },
    GatherRows(Var, Arc<[usize]>),
    MulRows(Var, Var),
    SegmentSoftmax(Var, Arc<SegmentIndex>),
    SegmentSum(Var, Arc<SegmentIndex>),
    ReduceMean(Var),
    /// Winning row per column.
    ReduceMax(Var, Vec<usize>),
    Sum(Var),
    Reshape(Var),
    LogSoftmax(Var),
    Pick(Var, usize),
    Norm(Var),
    DivScalar(Var, Var),
}

#[derive(Debug, Clone)]
pub(crate) struct Node<T> {
    pub(crate) value: Tensor<T>,
    pub(crate) op: Op<T>,
    pub(crate) needs_grad: bool,
}

/// Records a computation for later differentiation.
#[derive(Debug, Clone)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    flops: u64,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), flops: 0 }
    }

    /// Trainable leaf: receives a gradient in [`Tape::backward`].
    pub fn leaf(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// Non-trainable input; no gradient flows into it.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Floating-point operations performed by recorded forward ops.
    pub fn flops(&self) -> u64 {
        self.flops
    }

    /// Total scalars held by recorded values (leaves included).
    pub fn stored_scalars(&self) -> usize {
        self.nodes.iter().map(|n| n.value.numel()).sum()
    }

    /// Scalars held by non-leaf values only.
    pub fn intermediate_scalars(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| !matches!(n.op, Op::Leaf))
            .map(|n| n.value.numel())
            .sum()
    }

    pub(crate) fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    pub(crate) fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub(crate) fn count(&mut self, flops: usize) {
        self.flops += flops as u64;
    }

    /// Backpropagates from a scalar loss.
    ///
    /// Every trainable leaf recorded before `loss` gets an entry in the
    /// returned [`Gradients`]; leaves the loss does not depend on read as zero.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let root = &self.nodes[loss.0];
        if root.value.numel() != 1 {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                root.value.shape()
            )));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad || matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(node, &g, &mut grads);
        }
        let shapes = self.nodes.iter().map(|n| n.value.shape().to_vec()).collect();
        let leaves = self
            .nodes
            .iter()
            .map(|n| matches!(n.op, Op::Leaf) && n.needs_grad)
            .collect();
        Ok(Gradients { grads, shapes, leaves })
    }
}

/// Gradient buffers produced by [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
    shapes: Vec<Vec<usize>>,
    leaves: Vec<bool>,
}

impl<T: Scalar> Gradients<T> {
    /// Gradient with respect to a trainable leaf; zeros when unreachable.
    pub fn get(&self, v: Var) -> Tensor<T> {
        let shape = self.shapes[v.0].clone();
        match &self.grads[v.0] {
            Some(g) => Tensor::new(shape, g.clone()).expect("gradient shape"),
            None => Tensor::zeros(shape),
        }
    }

    /// Raw buffer, `None` when no gradient reached `v`.
    pub fn raw(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    pub fn is_trainable(&self, v: Var) -> bool {
        self.leaves[v.0]
    }
}
