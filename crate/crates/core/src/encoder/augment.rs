use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{normalize_edges, GraphBundle, NormalizedAdjacency};
use crate::linalg::ceil_count;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub edge_perturb_ratio: f64,
    pub feature_mask_ratio: f64,
    pub node_drop_ratio: f64,
    pub seed: u64,
}

impl AugmentationSpec {
    pub fn identity() -> Self {
        Self {
            edge_perturb_ratio: 0.0,
            feature_mask_ratio: 0.0,
            node_drop_ratio: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("edge_perturb_ratio", self.edge_perturb_ratio),
            ("feature_mask_ratio", self.feature_mask_ratio),
            ("node_drop_ratio", self.node_drop_ratio),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Param(format!("{name} = {r} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A corrupted view of a graph. Row `i` still refers to node `i`.
#[derive(Debug, Clone)]
pub struct AugmentedView {
    pub features: Array2<f64>,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: NormalizedAdjacency,
}

/// Draw `count` distinct pairs `(i, j)`, `i < j`, outside `existing`.
fn sample_non_edges(
    n: usize,
    existing: &BTreeSet<(usize, usize)>,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let total = n * n.saturating_sub(1) / 2;
    let available = total - existing.len();
    let count = count.min(available);
    if count == 0 {
        return Vec::new();
    }
    if available <= 4 * count {
        let pool: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|p| !existing.contains(p))
            .collect();
        let mut picked: Vec<(usize, usize)> = rand::seq::index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        picked.sort_unstable();
        return picked;
    }
    let mut added = BTreeSet::new();
    while added.len() < count {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if !existing.contains(&pair) {
            added.insert(pair);
        }
    }
    added.into_iter().collect()
}

/// Edge perturbation, attribute masking and node dropping, in that order.
///
/// - edge perturbation removes `⌈r·|E|⌉` edges and adds as many non-edges;
/// - attribute masking zeroes `⌈r·D⌉` feature columns;
/// - node dropping zeroes the features of `⌈r·N⌉` nodes and detaches them
///   from their neighbours, keeping their rows so indices stay aligned.
pub fn augment_view(bundle: &GraphBundle, spec: &AugmentationSpec) -> Result<AugmentedView> {
    spec.validate()?;
    let n = bundle.num_nodes();
    let d = bundle.num_features();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let original: BTreeSet<(usize, usize)> = bundle.edges().iter().copied().collect();
    let mut edges: BTreeSet<(usize, usize)> = original.clone();
    let flips = ceil_count(spec.edge_perturb_ratio, original.len());
    if flips > 0 {
        let current: Vec<(usize, usize)> = bundle.edges().to_vec();
        for k in rand::seq::index::sample(&mut rng, current.len(), flips) {
            edges.remove(&current[k]);
        }
        edges.extend(sample_non_edges(n, &original, flips, &mut rng));
    }

    let mut features = bundle.features().clone();
    let masked = ceil_count(spec.feature_mask_ratio, d);
    if masked > 0 {
        for col in rand::seq::index::sample(&mut rng, d, masked) {
            features.column_mut(col).fill(0.0);
        }
    }

    let dropped = ceil_count(spec.node_drop_ratio, n);
    if dropped > 0 {
        let mut gone = vec![false; n];
        for i in rand::seq::index::sample(&mut rng, n, dropped) {
            gone[i] = true;
            features.row_mut(i).fill(0.0);
        }
        edges.retain(|&(a, b)| !gone[a] && !gone[b]);
    }

    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    let adjacency = normalize_edges(n, &edges);
    Ok(AugmentedView {
        features,
        edges,
        adjacency,
    })
}
