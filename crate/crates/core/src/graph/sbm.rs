use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::GraphBundle;
use crate::{Error, Result};

/// Parameters of a planted-partition stochastic block model with
/// class-mean Gaussian node features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub blocks: usize,
    pub per_block: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Distance of each class mean from the origin along its own axis.
    pub feature_shift: f64,
}

/// Sample a graph: node `i` belongs to block `i / per_block`, edges appear
/// independently with probability `p_in` inside a block and `p_out` across,
/// and features are `feature_shift · e_block + ε` with `ε ~ N(0, I)`.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<GraphBundle> {
    let SbmParams {
        blocks,
        per_block,
        p_in,
        p_out,
        feature_dim,
        feature_shift,
    } = *params;
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Param(format!("{name} = {p} is not a probability")));
        }
    }
    if blocks == 0 || per_block == 0 {
        return Err(Error::Param("blocks and per_block must be positive".into()));
    }
    if feature_dim < blocks {
        return Err(Error::Param(format!(
            "feature_dim {feature_dim} cannot hold {blocks} orthogonal class means"
        )));
    }
    if !feature_shift.is_finite() {
        return Err(Error::Param("feature_shift must be finite".into()));
    }

    let n = blocks * per_block;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i / per_block).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }

    let mut features = Array2::zeros((n, feature_dim));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        row[labels[i]] += feature_shift;
    }

    GraphBundle::new(features, labels, blocks, edges)
}
