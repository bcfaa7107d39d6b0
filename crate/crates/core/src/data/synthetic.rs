use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{write_dataset, EmbeddingBag};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::util::ceil_fraction;

pub const STAINS: [&str; 4] = ["HE", "CD20", "CD68", "CD138"];

/// Generator settings; ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub num_patients: usize,
    pub feature_dim: usize,
    pub slides_per_patient: (usize, usize),
    pub patches_per_slide: (usize, usize),
    /// Shift of signal patches along the hidden direction.
    pub separation: f64,
    pub noise: f64,
    /// Share of a positive bag's patches that carry the shift.
    pub signal_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            num_patients: 40,
            feature_dim: 64,
            slides_per_patient: (1, 3),
            patches_per_slide: (10, 30),
            separation: 4.0,
            noise: 1.0,
            signal_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_patients == 0 || self.feature_dim == 0 {
            return fail("num_patients and feature_dim must be positive");
        }
        let ok_range = |(a, b): (usize, usize)| a >= 1 && a <= b;
        if !ok_range(self.slides_per_patient) || !ok_range(self.patches_per_slide) {
            return fail("slide and patch ranges must satisfy 1 ≤ min ≤ max");
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return fail("separation must be positive");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail("noise must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.signal_fraction) {
            return fail("signal_fraction must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Unit direction along which signal patches are shifted.
pub fn signal_direction(cfg: &SyntheticConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    loop {
        let u: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return u.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Bags with labels alternating 0/1 by patient index. Negative patches are
/// `N(0, σ²I)`; in positive bags `⌈fraction·N⌉` randomly chosen patches are
/// shifted by `separation·u`.
pub fn synthesize(cfg: &SyntheticConfig) -> Result<Vec<EmbeddingBag>> {
    cfg.validate()?;
    let u = signal_direction(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let f = cfg.feature_dim;
    let mut bags = Vec::with_capacity(cfg.num_patients);
    for p in 0..cfg.num_patients {
        let id = format!("P{p:03}");
        let label = (p % 2) as u8;
        let slides = rng.random_range(cfg.slides_per_patient.0..=cfg.slides_per_patient.1);
        let mut slide_ids = Vec::new();
        let mut stains = Vec::new();
        for s in 0..slides {
            let stain = STAINS[rng.random_range(0..STAINS.len())];
            let patches = rng.random_range(cfg.patches_per_slide.0..=cfg.patches_per_slide.1);
            for _ in 0..patches {
                slide_ids.push(format!("{id}_S{s}"));
                stains.push(stain.to_string());
            }
        }
        let n = slide_ids.len();
        let mut data: Vec<f64> = (0..n * f).map(|_| cfg.noise * rng.sample::<f64, _>(StandardNormal)).collect();
        if label == 1 && cfg.signal_fraction > 0.0 {
            let count = ceil_fraction(n, cfg.signal_fraction);
            for row in sample(&mut rng, n, count) {
                for (x, d) in data[row * f..(row + 1) * f].iter_mut().zip(&u) {
                    *x += cfg.separation * d;
                }
            }
        }
        let features = Tensor::new(vec![n, f], data).expect("sizes match");
        bags.push(EmbeddingBag::new(id, label, slide_ids, stains, features)?);
    }
    Ok(bags)
}

/// Synthesizes a dataset into `dir` and returns the manifest path.
pub fn generate_synthetic(dir: &Path, cfg: &SyntheticConfig) -> Result<PathBuf> {
    write_dataset(dir, &synthesize(cfg)?, None)
}
