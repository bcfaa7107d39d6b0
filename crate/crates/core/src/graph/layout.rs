use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PatchGraph;
use crate::scalar::Scalar;

/// Fruchterman–Reingold force-directed layout in the unit square.
///
/// Ideal edge length `1/√N`, repulsion `k²/d` between all pairs, attraction
/// `d²/k` along edges of the undirected support, per-step displacement capped
/// by a temperature that starts at 0.1 and cools linearly.
pub fn spring_layout<T: Scalar>(g: &PatchGraph<T>, iterations: usize, seed: u64) -> Vec<[f64; 2]> {
    let n = g.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<[f64; 2]> =
        (0..n).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
    if n <= 1 {
        return pos;
    }
    let mut adjacent = vec![false; n * n];
    for &(s, d) in g.edges() {
        if s != d {
            adjacent[s * n + d] = true;
            adjacent[d * n + s] = true;
        }
    }
    let k = 1.0 / (n as f64).sqrt();
    let mut temperature = 0.1;
    let cooling = temperature / (iterations as f64 + 1.0);
    let mut disp = vec![[0.0f64; 2]; n];
    for _ in 0..iterations {
        for d in disp.iter_mut() {
            *d = [0.0, 0.0];
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                let dist = (dx * dx + dy * dy).sqrt().max(0.01);
                let mut force = k * k / dist;
                if adjacent[i * n + j] {
                    force -= dist * dist / k;
                }
                disp[i][0] += dx / dist * force;
                disp[i][1] += dy / dist * force;
            }
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt().max(0.01);
            p[0] += d[0] * temperature / len;
            p[1] += d[1] * temperature / len;
        }
        temperature -= cooling;
    }
    pos
}
