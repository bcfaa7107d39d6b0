use std::cmp::Ordering;

use super::PatchGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const QUERY_BLOCK: usize = 32;
const CANDIDATE_BLOCK: usize = 64;

/// Exact directed k-NN graph under Euclidean distance.
///
/// Every node `p` gets edges `p → q` to its `min(k, N−1)` nearest other
/// nodes, nearest first. Equal distances are broken by lower node index.
/// Slide tags default to empty; attach real ones with
/// [`PatchGraph::with_slide_tags`].
pub fn build_knn_graph<T: Scalar>(features: &Tensor<T>, k: usize) -> Result<PatchGraph<T>> {
    if !features.is_matrix() {
        return Err(Error::Dimension(format!(
            "features must be [N×F], got {:?}",
            features.shape()
        )));
    }
    let n = features.rows();
    let f = features.cols();
    if n == 0 {
        return Err(Error::EmptyBag("no rows to build a graph from".into()));
    }
    if k == 0 || f == 0 {
        return Err(Error::Contract(format!("k-NN graph needs k ≥ 1 and F ≥ 1 (k={k}, F={f})")));
    }
    if features.data().iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract("non-finite feature value".into()));
    }
    let kk = k.min(n - 1);
    let data = features.data();
    let mut edges = Vec::with_capacity(n * kk);
    let mut dist = vec![T::zero(); QUERY_BLOCK * n];
    let mut cand: Vec<(T, usize)> = Vec::with_capacity(n);

    for q0 in (0..n).step_by(QUERY_BLOCK) {
        let q1 = (q0 + QUERY_BLOCK).min(n);
        // tile over candidates so each candidate block stays hot across queries
        for c0 in (0..n).step_by(CANDIDATE_BLOCK) {
            let c1 = (c0 + CANDIDATE_BLOCK).min(n);
            for q in q0..q1 {
                let qrow = &data[q * f..(q + 1) * f];
                let out = &mut dist[(q - q0) * n..(q - q0 + 1) * n];
                for c in c0..c1 {
                    out[c] = squared_distance(qrow, &data[c * f..(c + 1) * f]);
                }
            }
        }
        for q in q0..q1 {
            if kk == 0 {
                continue;
            }
            let row = &dist[(q - q0) * n..(q - q0 + 1) * n];
            cand.clear();
            cand.extend(row.iter().enumerate().filter(|&(c, _)| c != q).map(|(c, &d)| (d, c)));
            if kk < cand.len() {
                cand.select_nth_unstable_by(kk - 1, by_distance_then_index);
                cand.truncate(kk);
            }
            cand.sort_unstable_by(by_distance_then_index);
            edges.extend(cand.iter().map(|&(_, c)| (q, c)));
        }
    }
    let tags = vec![String::new(); n];
    PatchGraph::new(features.clone(), edges, tags, (0..n).collect())
}

pub(crate) fn squared_distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

fn by_distance_then_index<T: Scalar>(a: &(T, usize), b: &(T, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}
