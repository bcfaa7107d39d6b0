use super::PatchGraph;
use crate::scalar::Scalar;

/// Union-find with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `true` when `a` and `b` were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Component id per node, numbered by first appearance in node order.
pub fn component_labels<T: Scalar>(g: &PatchGraph<T>) -> Vec<usize> {
    let n = g.num_nodes();
    let mut dsu = DisjointSet::new(n);
    for &(s, d) in g.edges() {
        dsu.union(s, d);
    }
    let mut label_of_root = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|u| {
            let r = dsu.find(u);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            label_of_root[r]
        })
        .collect()
}

/// Components of the undirected support, each sorted ascending and ordered
/// by smallest member.
pub fn weakly_connected_components<T: Scalar>(g: &PatchGraph<T>) -> Vec<Vec<usize>> {
    let labels = component_labels(g);
    let count = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut comps = vec![Vec::new(); count];
    for (u, &l) in labels.iter().enumerate() {
        comps[l].push(u);
    }
    comps
}
