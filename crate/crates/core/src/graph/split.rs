use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Partition of the node set into labeled and unlabeled indices, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl SplitSpec {
    /// Build a split, checking that the two sets are disjoint and cover `[0, n)`.
    pub fn new(n: usize, mut labeled: Vec<usize>, mut unlabeled: Vec<usize>) -> Result<Self> {
        labeled.sort_unstable();
        unlabeled.sort_unstable();
        let mut seen = vec![false; n];
        for &i in labeled.iter().chain(&unlabeled) {
            if i >= n {
                return Err(Error::Contract(format!("split index {i} outside [0, {n})")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Contract(format!("node {i} appears twice in split")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Contract(format!("node {i} missing from split")));
        }
        Ok(Self { labeled, unlabeled })
    }

    /// Build a split from the labeled set alone; the unlabeled set is its complement.
    pub fn from_labeled(n: usize, labeled: Vec<usize>) -> Result<Self> {
        let mut mask = vec![false; n];
        for &i in &labeled {
            if i < n {
                mask[i] = true;
            }
        }
        let unlabeled = (0..n).filter(|&i| !mask[i]).collect();
        Self::new(n, labeled, unlabeled)
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled(&self) -> &[usize] {
        &self.unlabeled
    }

    /// `m`
    pub fn num_labeled(&self) -> usize {
        self.labeled.len()
    }

    /// `u`
    pub fn num_unlabeled(&self) -> usize {
        self.unlabeled.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.labeled.len() + self.unlabeled.len()
    }
}

/// Sample `m` labeled nodes uniformly without replacement from `[0, n)`.
pub fn sample_split(n: usize, m: usize, seed: u64) -> Result<SplitSpec> {
    if m == 0 || m >= n {
        return Err(Error::Param(format!(
            "labeled count must satisfy 1 <= m < N (m={m}, N={n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labeled = rand::seq::index::sample(&mut rng, n, m).into_vec();
    SplitSpec::from_labeled(n, labeled)
}
