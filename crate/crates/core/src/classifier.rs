//! Linear transductive classifiers on frozen node embeddings.
//!
//! Two flavours live here. [`train_transductive`] minimizes the mean KL
//! divergence between observed labels and `softmax(H W)` on the labeled
//! nodes and is what the experiments use for accuracy. [`mse_gd_trajectory`]
//! runs plain gradient descent on the squared loss, whose residuals have the
//! closed form computed by [`closed_form_residual`]; the bound module is
//! built on that second flavour.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::graph::{NoisyLabels, SplitSpec};
use crate::linalg::{one_hot, select_rows};
use crate::spectral::{embedding_spectrum, sym_eig};
use crate::{Error, Result};

/// Classifier weights after training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierState {
    /// `d × C`
    pub weights: Array2<f64>,
    pub step_size: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductiveOptions {
    pub step_size: f64,
    pub epochs: usize,
    /// Stop once the monitored loss has failed to improve by at least
    /// `min_improvement` for this many consecutive epochs.
    pub patience: usize,
    pub min_improvement: f64,
    /// Nodes whose observed-label loss is monitored for early stopping
    /// instead of the training loss. They are excluded from training.
    pub validation: Option<Vec<usize>>,
}

impl TransductiveOptions {
    pub fn new(step_size: f64, epochs: usize) -> Self {
        Self {
            step_size,
            epochs,
            patience: 20,
            min_improvement: 1e-7,
            validation: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransductiveFit {
    pub state: ClassifierState,
    /// `softmax(H W)` for every node.
    pub probabilities: Array2<f64>,
    /// Training loss before each step.
    pub loss_trace: Vec<f64>,
}

/// `0.9 / λ̂₁` where `λ̂₁` is the largest eigenvalue of `H Hᵀ`.
pub fn default_step_size(h: ArrayView2<'_, f64>) -> Result<f64> {
    scaled_step_size(h, 0.9)
}

/// `factor / λ̂₁`; `factor` must lie in `(0, 1)`.
pub fn scaled_step_size(h: ArrayView2<'_, f64>, factor: f64) -> Result<f64> {
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::Param(format!("step factor {factor} outside (0, 1)")));
    }
    let top = top_eigenvalue(h)?;
    if !(top > 0.0) {
        return Err(Error::Degenerate("embedding gram matrix is zero".into()));
    }
    Ok(factor / top)
}

fn top_eigenvalue(h: ArrayView2<'_, f64>) -> Result<f64> {
    Ok(embedding_spectrum(h)?.first().copied().unwrap_or(0.0))
}

/// Enforce `η ∈ (0, 1/λ₁)`; any positive step is accepted when `λ₁ = 0`.
fn check_step(eta: f64, top: f64, what: &str) -> Result<()> {
    let ok = eta > 0.0 && eta.is_finite() && (top <= 0.0 || eta * top < 1.0);
    if ok {
        Ok(())
    } else {
        Err(Error::Param(format!(
            "step size {eta} outside (0, 1/λ₁) with λ₁ = {top} of {what}"
        )))
    }
}

/// Row-wise softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

/// Mean KL divergence between one-hot `targets` and `softmax(h W)` over the
/// given rows, and its gradient with respect to `W`.
pub fn transductive_loss(
    h: ArrayView2<'_, f64>,
    targets: &[usize],
    rows: &[usize],
    weights: &Array2<f64>,
) -> Result<(f64, Array2<f64>)> {
    if rows.is_empty() {
        return Err(Error::Param("loss over an empty node set".into()));
    }
    let hl = select_rows(h, rows);
    let logits = hl.dot(weights);
    let mut probs = softmax(&logits);
    let c = weights.ncols();
    let mut loss = 0.0;
    for (r, &i) in rows.iter().enumerate() {
        let y = targets[i];
        if y >= c {
            return Err(Error::Param(format!("class index {y} out of range")));
        }
        let row = logits.row(r);
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - logits[[r, y]];
        probs[[r, y]] -= 1.0;
    }
    let m = rows.len() as f64;
    Ok((loss / m, hl.t().dot(&probs) / m))
}

/// Full-batch gradient descent from `W = 0` on the labeled-node KL loss.
pub fn train_transductive(
    h: ArrayView2<'_, f64>,
    labels: &NoisyLabels,
    split: &SplitSpec,
    options: &TransductiveOptions,
) -> Result<TransductiveFit> {
    let (n, d) = h.dim();
    if labels.num_nodes() != n || split.num_nodes() != n {
        return Err(Error::Contract(format!(
            "embedding has {n} rows, labels {} and split {}",
            labels.num_nodes(),
            split.num_nodes()
        )));
    }
    check_step(options.step_size, top_eigenvalue(h)?, "the embedding gram matrix")?;
    let c = labels.num_classes();
    let observed = labels.observed();

    let (train, monitor): (Vec<usize>, Option<&[usize]>) = match &options.validation {
        Some(val) => {
            let mut held = vec![false; n];
            for &i in val {
                held[i] = true;
            }
            let train = split.labeled().iter().copied().filter(|&i| !held[i]).collect();
            (train, Some(val.as_slice()))
        }
        None => (split.labeled().to_vec(), None),
    };

    let mut weights = Array2::zeros((d, c));
    let mut loss_trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut iterations = 0;
    for _ in 0..options.epochs {
        let (loss, grad) = transductive_loss(h, observed, &train, &weights)?;
        loss_trace.push(loss);
        let watched = match monitor {
            Some(val) => transductive_loss(h, observed, val, &weights)?.0,
            None => loss,
        };
        if watched < best - options.min_improvement {
            best = watched;
            stale = 0;
        } else {
            stale += 1;
            if stale >= options.patience {
                break;
            }
        }
        weights.scaled_add(-options.step_size, &grad);
        iterations += 1;
    }
    let probabilities = softmax(&h.dot(&weights));
    Ok(TransductiveFit {
        state: ClassifierState {
            weights,
            step_size: options.step_size,
            iterations,
        },
        probabilities,
        loss_trace,
    })
}

/// Arg-max class of each listed row, lowest index on ties.
pub fn predict_labels(probabilities: &Array2<f64>, subset: &[usize]) -> Vec<usize> {
    subset
        .iter()
        .map(|&i| {
            let row = probabilities.row(i);
            let mut best = 0;
            for (c, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Fraction of `subset` whose prediction equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize], subset: &[usize]) -> f64 {
    if subset.is_empty() {
        return 0.0;
    }
    let hits = subset.iter().filter(|&&i| predicted[i] == truth[i]).count();
    hits as f64 / subset.len() as f64
}

/// CSV with columns `node,predicted,observed,clean,is_test`.
pub fn write_predictions(
    path: impl AsRef<Path>,
    predicted: &[usize],
    labels: &NoisyLabels,
    test: &[usize],
) -> Result<()> {
    let mut is_test = vec![false; predicted.len()];
    for &i in test {
        is_test[i] = true;
    }
    let mut out = String::from("node,predicted,observed,clean,is_test\n");
    for (i, &p) in predicted.iter().enumerate() {
        writeln!(
            out,
            "{i},{p},{},{},{}",
            labels.observed()[i],
            labels.clean()[i],
            u8::from(is_test[i])
        )
        .expect("writing to a String");
    }
    let path = path.as_ref();
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Residuals `F(W, t') − Ỹ` of squared-loss gradient descent, split by node set.
#[derive(Debug, Clone)]
pub struct MseTrajectory {
    /// `[F(W,t') − Ỹ]_𝓛` for `t' = 0..=t`.
    pub labeled: Vec<Array2<f64>>,
    /// `[F(W,t') − Ỹ]_𝓤` for `t' = 0..=t`.
    pub unlabeled: Vec<Array2<f64>>,
    pub weights: Array2<f64>,
}

impl MseTrajectory {
    /// `(1/u) ‖[F(W,t) − Ỹ]_𝓤‖_F²` at the final step.
    pub fn test_mse(&self) -> f64 {
        let last = self.unlabeled.last().expect("trajectory includes t = 0");
        let u = last.nrows().max(1) as f64;
        last.iter().map(|v| v * v).sum::<f64>() / u
    }
}

/// `W⁽ᵗ⁾ = W⁽ᵗ⁻¹⁾ − η [H]_𝓛ᵀ [H W⁽ᵗ⁻¹⁾ − Y]_𝓛` from `W⁽⁰⁾ = 0`, recording
/// residuals against the clean labels.
pub fn mse_gd_trajectory(
    h: ArrayView2<'_, f64>,
    labels: &NoisyLabels,
    split: &SplitSpec,
    eta: f64,
    steps: usize,
) -> Result<MseTrajectory> {
    let n = h.nrows();
    if labels.num_nodes() != n || split.num_nodes() != n {
        return Err(Error::Contract("embedding, labels and split disagree on N".into()));
    }
    check_step(eta, top_eigenvalue(h)?, "the embedding gram matrix")?;
    let c = labels.num_classes();
    let hl = select_rows(h, split.labeled());
    let hu = select_rows(h, split.unlabeled());
    let pick = |idx: &[usize], src: &[usize]| -> Array2<f64> {
        one_hot(&idx.iter().map(|&i| src[i]).collect::<Vec<_>>(), c)
    };
    let y_l = pick(split.labeled(), labels.observed());
    let clean_l = pick(split.labeled(), labels.clean());
    let clean_u = pick(split.unlabeled(), labels.clean());

    let mut weights = Array2::zeros((h.ncols(), c));
    let mut labeled = Vec::with_capacity(steps + 1);
    let mut unlabeled = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let f_l = hl.dot(&weights);
        labeled.push(&f_l - &clean_l);
        unlabeled.push(hu.dot(&weights) - &clean_u);
        if step < steps {
            let grad = hl.t().dot(&(f_l - &y_l));
            weights.scaled_add(-eta, &grad);
        }
    }
    Ok(MseTrajectory {
        labeled,
        unlabeled,
        weights,
    })
}

/// `−(I − ηK)ᵗ Ỹ_𝓛 + ηK Σ_{t'<t} (I − ηK)^{t'} N_𝓛` for `K = K_𝓛𝓛`, evaluated
/// per eigenmode: `(1 − ημ)ᵗ` and `1 − (1 − ημ)ᵗ`.
pub fn closed_form_residual(
    k_ll: ArrayView2<'_, f64>,
    clean_l: ArrayView2<'_, f64>,
    noise_l: ArrayView2<'_, f64>,
    eta: f64,
    steps: usize,
) -> Result<Array2<f64>> {
    let modes = LabeledModes::new(k_ll, eta)?;
    if clean_l.dim() != noise_l.dim() || clean_l.nrows() != modes.dim() {
        return Err(Error::Contract(format!(
            "K_LL is {0}×{0}, clean labels {1:?}, noise {2:?}",
            modes.dim(),
            clean_l.dim(),
            noise_l.dim()
        )));
    }
    let decay = modes.factors(steps);
    let growth = decay.mapv(|f| 1.0 - f);
    Ok(modes.apply(&decay, clean_l) * -1.0 + modes.apply(&growth, noise_l))
}

/// Eigendecomposition of `K_𝓛𝓛` with a validated step size.
#[derive(Debug, Clone)]
pub(crate) struct LabeledModes {
    values: Array1<f64>,
    vectors: Array2<f64>,
    eta: f64,
}

impl LabeledModes {
    pub(crate) fn new(k_ll: ArrayView2<'_, f64>, eta: f64) -> Result<Self> {
        let eig = sym_eig(k_ll)?;
        let values = eig.eigenvalues().mapv(|v| v.max(0.0));
        check_step(eta, values.first().copied().unwrap_or(0.0), "K_LL")?;
        Ok(Self {
            values,
            vectors: eig.eigenvectors().clone(),
            eta,
        })
    }

    pub(crate) fn dim(&self) -> usize {
        self.values.len()
    }

    /// `(1 − η μ_j)ᵗ` per mode.
    pub(crate) fn factors(&self, steps: usize) -> Array1<f64> {
        let exp = i32::try_from(steps).unwrap_or(i32::MAX);
        self.values.mapv(|mu| (1.0 - self.eta * mu).powi(exp))
    }

    /// `Q diag(scale) Qᵀ M`
    pub(crate) fn apply(&self, scale: &Array1<f64>, m: ArrayView2<'_, f64>) -> Array2<f64> {
        let coeffs = self.vectors.t().dot(&m);
        let scaled = &coeffs * &scale.view().insert_axis(ndarray::Axis(1));
        self.vectors.dot(&scaled)
    }

    /// `‖Q diag(scale) Qᵀ M‖_F² = Σ_j scale_j² ‖(Qᵀ M)_j‖²`
    pub(crate) fn norm_sq(&self, scale: &Array1<f64>, m: ArrayView2<'_, f64>) -> f64 {
        let coeffs = self.vectors.t().dot(&m);
        coeffs
            .rows()
            .into_iter()
            .zip(scale)
            .map(|(row, s)| s * s * row.dot(&row))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sample_split;
    use crate::linalg::{frobenius_sq, max_abs, relative_error};
    use crate::spectral::gram;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| StandardNormal.sample(&mut rng))
    }

    fn clouds(seed: u64) -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let n = 40;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let h = Array2::from_shape_fn((n, 2), |(i, j)| {
            let centre = if labels[i] == 0 { [4.0, 0.0] } else { [0.0, 4.0] };
            centre[j] + noise.sample(&mut rng)
        });
        (h, labels)
    }

    #[test]
    fn untrained_classifier_is_uniform() {
        let (h, y) = clouds(0);
        let labels = NoisyLabels::noiseless(&y, 2).unwrap();
        let split = sample_split(40, 10, 0).unwrap();
        let eta = default_step_size(h.view()).unwrap();
        let fit = train_transductive(h.view(), &labels, &split, &TransductiveOptions::new(eta, 0)).unwrap();
        assert!(fit.probabilities.iter().all(|&p| (p - 0.5).abs() < 1e-15));
        assert_eq!(predict_labels(&fit.probabilities, &[0, 1, 2]), vec![0, 0, 0]);
    }

    #[test]
    fn separable_clouds_fit_perfectly() {
        let (h, y) = clouds(1);
        let labels = NoisyLabels::noiseless(&y, 2).unwrap();
        let split = sample_split(40, 20, 1).unwrap();
        let eta = default_step_size(h.view()).unwrap();
        let fit = train_transductive(h.view(), &labels, &split, &TransductiveOptions::new(eta, 500)).unwrap();
        for row in fit.probabilities.rows() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
        let pred = predict_labels(&fit.probabilities, &(0..40).collect::<Vec<_>>());
        assert_eq!(accuracy(&pred, &y, split.labeled()), 1.0);
        for w in fit.loss_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn step_size_outside_range_is_rejected() {
        let (h, y) = clouds(2);
        let labels = NoisyLabels::noiseless(&y, 2).unwrap();
        let split = sample_split(40, 10, 0).unwrap();
        let top = embedding_spectrum(h.view()).unwrap()[0];
        for bad in [1.0 / top, 2.0 / top, 0.0, -1.0] {
            let err = train_transductive(h.view(), &labels, &split, &TransductiveOptions::new(bad, 5));
            assert!(matches!(err, Err(Error::Param(_))));
        }
    }

    #[test]
    fn argmax_ties_break_low() {
        let p = array![[0.1, 0.7, 0.2], [0.4, 0.4, 0.2], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        assert_eq!(predict_labels(&p, &[0, 1, 2]), vec![1, 0, 0]);
    }

    #[test]
    fn kl_gradient_matches_finite_differences() {
        let h = random(10, 4, 3);
        let targets: Vec<usize> = (0..10).map(|i| i % 3).collect();
        let rows = vec![0, 2, 3, 5, 8];
        let w = random(4, 3, 4);
        let (_, grad) = transductive_loss(h.view(), &targets, &rows, &w).unwrap();
        let step = 1e-5;
        let mut fd = Array2::zeros(w.dim());
        for idx in ndarray::indices(w.dim()) {
            let mut p = w.clone();
            p[idx] += step;
            let mut m = w.clone();
            m[idx] -= step;
            fd[idx] = (transductive_loss(h.view(), &targets, &rows, &p).unwrap().0
                - transductive_loss(h.view(), &targets, &rows, &m).unwrap().0)
                / (2.0 * step);
        }
        assert!(relative_error(grad.view(), fd.view()) <= 1e-4);
    }

    #[test]
    fn trajectory_starts_at_negative_labels() {
        let h = random(12, 3, 5);
        let y: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let labels = NoisyLabels::noiseless(&y, 3).unwrap();
        let split = sample_split(12, 6, 2).unwrap();
        let eta = default_step_size(h.view()).unwrap();
        let traj = mse_gd_trajectory(h.view(), &labels, &split, eta, 0).unwrap();
        let clean_l = one_hot(&split.labeled().iter().map(|&i| y[i]).collect::<Vec<_>>(), 3);
        assert_eq!(traj.labeled[0], -clean_l);
    }

    #[test]
    fn identity_kernel_contracts_by_one_minus_eta() {
        // H_L = I_m, so K_LL = I and every residual mode shrinks by (1 − η)
        let m = 4;
        let mut h = Array2::zeros((6, m));
        for i in 0..m {
            h[[i, i]] = 1.0;
        }
        h[[4, 0]] = 0.5;
        h[[5, 1]] = 0.5;
        let y = vec![0, 1, 0, 1, 0, 1];
        let labels = NoisyLabels::noiseless(&y, 2).unwrap();
        let split = SplitSpec::from_labeled(6, (0..m).collect()).unwrap();
        let traj = mse_gd_trajectory(h.view(), &labels, &split, 0.5, 2).unwrap();
        let r = frobenius_sq(traj.labeled[2].view());
        assert!((r - 0.0625 * 4.0).abs() < 1e-15);

        let res = closed_form_residual(
            Array2::<f64>::eye(m).view(),
            one_hot(&y[..m], 2).view(),
            Array2::zeros((m, 2)).view(),
            0.5,
            2,
        )
        .unwrap();
        assert!(max_abs((&res - &traj.labeled[2]).view()) < 1e-15);
    }

    #[test]
    fn closed_form_empty_sum_and_decay() {
        let hl = random(5, 5, 6);
        let k = gram(hl.view());
        let top = sym_eig(k.view()).unwrap().eigenvalues()[0];
        let clean = one_hot(&[0, 1, 1, 0, 1], 2);
        let noise = one_hot(&[1, 1, 0, 0, 1], 2) - &clean;
        let r0 = closed_form_residual(k.view(), clean.view(), noise.view(), 0.9 / top, 0).unwrap();
        assert!(max_abs((&r0 + &clean).view()) < 1e-12);
        let long = closed_form_residual(
            k.view(),
            clean.view(),
            Array2::zeros((5, 2)).view(),
            0.9 / top,
            1000,
        )
        .unwrap();
        // positive definite K: convergence to the clean labels is geometric
        let smallest = *sym_eig(k.view()).unwrap().eigenvalues().last().unwrap();
        if (1.0 - 0.9 * smallest / top).powi(1000) < 1e-9 {
            assert!(frobenius_sq(long.view()).sqrt() < 1e-6);
        }
    }

    #[test]
    fn closed_form_rejects_large_step_and_bad_shapes() {
        let k = Array2::<f64>::eye(3) * 2.0;
        let y = Array2::zeros((3, 2));
        assert!(closed_form_residual(k.view(), y.view(), y.view(), 0.5, 1).is_err());
        let bad = Array2::zeros((2, 2));
        assert!(closed_form_residual(k.view(), bad.view(), bad.view(), 0.1, 1).is_err());
    }

    #[test]
    fn predictions_csv() {
        let tmp = tempfile::tempdir().unwrap();
        let labels = NoisyLabels::new(vec![1, 0, 1], vec![1, 1, 1], 2).unwrap();
        let path = tmp.path().join("p.csv");
        write_predictions(&path, &[1, 1, 0], &labels, &[2]).unwrap();
        assert_eq!(
            std::fs::read_to_string(path).unwrap(),
            "node,predicted,observed,clean,is_test\n0,1,1,1,0\n1,1,0,1,0\n2,0,1,1,1\n"
        );
    }
}
