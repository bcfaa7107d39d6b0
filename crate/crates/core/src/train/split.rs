use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::util::ceil_fraction;

/// Train/test partition of patient indices, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Stable 64-bit FNV-1a digest of both index lists.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for &i in &self.train {
            feed(i as u64);
        }
        feed(u64::MAX);
        for &i in &self.test {
            feed(i as u64);
        }
        h
    }

    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.hash())
    }
}

/// Per-class shuffled split; each class sends `⌈ratio·n_c⌉` patients to
/// train, clamped so both sides keep at least one.
pub fn stratified_split(labels: &[u8], ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} outside (0, 1)")));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Stratification(format!("label {bad} is not binary")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..=1u8 {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(Error::Stratification(format!(
                "class {class} has {} patient(s); at least 2 are needed",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ceil_fraction(members.len(), ratio).clamp(1, members.len() - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
