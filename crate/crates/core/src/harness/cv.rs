use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{prepare_run, ExperimentConfig};
use crate::classifier::{scaled_step_size, train_transductive, transductive_loss, TransductiveOptions};
use crate::encoder::{gcn_forward, train_encoder, TrainConfig};
use crate::graph::{normalize_adjacency, SplitSpec};
use crate::linalg::derive_seed;
use crate::{Error, Result};

const FOLDS: u64 = 0xF01D;

/// Fold losses of one `(γ, τ_tnn)` grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCell {
    pub rank_ratio: f64,
    pub tnn_weight: f64,
    /// Mean cross-entropy against observed labels on each held-out fold.
    pub fold_losses: Vec<f64>,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_rank_ratio: f64,
    pub best_tnn_weight: f64,
    pub cells: Vec<CvCell>,
}

/// Assign each labeled node to one of `folds` groups, seeded.
pub fn fold_assignment(labeled: &[usize], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::Param(format!("need at least 2 folds, got {folds}")));
    }
    if folds > labeled.len() {
        return Err(Error::Param(format!(
            "{folds} folds exceed the {} labeled nodes",
            labeled.len()
        )));
    }
    let mut order = labeled.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut groups = vec![Vec::new(); folds];
    for (k, node) in order.into_iter().enumerate() {
        groups[k % folds].push(node);
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(groups)
}

/// k-fold selection of the truncation ratio `γ` and TNN weight `τ_tnn` on the
/// first seed of `config`. The encoder is trained once per grid cell; each
/// fold retrains only the classifier. Ties go to the smaller `γ`, then the
/// smaller `τ_tnn`.
pub fn cross_validate(
    config: &ExperimentConfig,
    gamma_grid: &[f64],
    tau_grid: &[f64],
    folds: usize,
) -> Result<CvResult> {
    config.validate()?;
    if gamma_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::Param("cross-validation grids must be nonempty".into()));
    }
    let sorted = |grid: &[f64]| {
        let mut g = grid.to_vec();
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    };
    let (gammas, taus) = (sorted(gamma_grid), sorted(tau_grid));

    let seed = config.seeds[0];
    let run = prepare_run(config, seed)?;
    let n = run.bundle.num_nodes();
    let groups = fold_assignment(run.split.labeled(), folds, derive_seed(seed, FOLDS))?;
    let adj = normalize_adjacency(&run.bundle);

    let mut cells = Vec::with_capacity(gammas.len() * taus.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for &gamma in &gammas {
        for &tau in &taus {
            let enc = TrainConfig {
                rank_ratio: gamma,
                tnn_weight: tau,
                ..run.encoder.clone()
            };
            let trained = train_encoder(&run.bundle, &enc)?;
            let h = gcn_forward(&trained.params, run.bundle.features().view(), &adj)?;
            let eta = match config.classifier.step_size {
                Some(eta) => eta,
                None => scaled_step_size(h.view(), config.classifier.step_factor)?,
            };
            let mut fold_losses = Vec::with_capacity(folds);
            for held in &groups {
                let train: Vec<usize> = run
                    .split
                    .labeled()
                    .iter()
                    .copied()
                    .filter(|i| held.binary_search(i).is_err())
                    .collect();
                let split = SplitSpec::from_labeled(n, train)?;
                let options = TransductiveOptions::new(eta, config.classifier.epochs);
                let fit = train_transductive(h.view(), &run.labels, &split, &options)?;
                let (loss, _) =
                    transductive_loss(h.view(), run.labels.observed(), held, &fit.state.weights)?;
                fold_losses.push(loss);
            }
            let mean_loss = fold_losses.iter().sum::<f64>() / folds as f64;
            log::info!("γ = {gamma}, τ = {tau}: mean validation loss {mean_loss}");
            if best.is_none_or(|(b, _, _)| mean_loss < b) {
                best = Some((mean_loss, gamma, tau));
            }
            cells.push(CvCell {
                rank_ratio: gamma,
                tnn_weight: tau,
                fold_losses,
                mean_loss,
            });
        }
    }
    let (_, best_rank_ratio, best_tnn_weight) = best.expect("grids are nonempty");
    Ok(CvResult {
        best_rank_ratio,
        best_tnn_weight,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SbmParams;
    use crate::harness::{DatasetSource, SplitChoice};

    fn config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(DatasetSource::Sbm(SbmParams {
            blocks: 2,
            per_block: 12,
            p_in: 0.5,
            p_out: 0.05,
            feature_dim: 5,
            feature_shift: 2.0,
        }));
        cfg.split = SplitChoice::Count(10);
        cfg.encoder.epochs = 3;
        cfg.encoder.hidden_width = 6;
        cfg.encoder.embed_width = 5;
        cfg.classifier.epochs = 30;
        cfg
    }

    #[test]
    fn folds_partition_the_labeled_set() {
        let labeled: Vec<usize> = (0..23).map(|i| 2 * i).collect();
        let groups = fold_assignment(&labeled, 5, 7).unwrap();
        let mut all: Vec<usize> = groups.concat();
        all.sort_unstable();
        assert_eq!(all, labeled);
        assert!(groups.iter().all(|g| g.len() == 4 || g.len() == 5));
        assert_eq!(groups, fold_assignment(&labeled, 5, 7).unwrap());
        assert!(matches!(fold_assignment(&labeled, 24, 0), Err(Error::Param(_))));
        assert!(matches!(fold_assignment(&labeled, 1, 0), Err(Error::Param(_))));
    }

    #[test]
    fn single_cell_grid_returns_that_cell() {
        let r = cross_validate(&config(), &[0.4], &[0.2], 2).unwrap();
        assert_eq!((r.best_rank_ratio, r.best_tnn_weight), (0.4, 0.2));
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].fold_losses.len(), 2);
    }

    #[test]
    fn best_cell_has_minimal_loss_and_is_deterministic() {
        let cfg = config();
        let r = cross_validate(&cfg, &[0.6, 0.2], &[0.3, 0.1], 3).unwrap();
        assert_eq!(r.cells.len(), 4);
        assert_eq!((r.cells[0].rank_ratio, r.cells[0].tnn_weight), (0.2, 0.1));
        let min = r.cells.iter().map(|c| c.mean_loss).fold(f64::INFINITY, f64::min);
        let first_min = r.cells.iter().find(|c| c.mean_loss == min).unwrap();
        assert_eq!((r.best_rank_ratio, r.best_tnn_weight), (first_min.rank_ratio, first_min.tnn_weight));
        assert_eq!(r, cross_validate(&cfg, &[0.6, 0.2], &[0.3, 0.1], 3).unwrap());
    }

    #[test]
    fn too_many_folds() {
        assert!(matches!(cross_validate(&config(), &[0.2], &[0.1], 11), Err(Error::Param(_))));
    }
}
