//! Test-loss bound diagnostics for the squared-loss linear classifier.
//!
//! With `K = H Hᵀ`, gradient descent from `W = 0` leaves a labeled residual
//! whose clean part decays as `(I − ηK_𝓛𝓛)ᵗ` and whose noise part grows as
//! `I − (I − ηK_𝓛𝓛)ᵗ`. Their squared norms are `L₁` and `L₂`; together with
//! the kernel complexity of `K` they make up the reported bound
//!
//! ```text
//! combined = (2 c₀ / m)(L₁ + L₂) + c₀ · KC + c₀ · x / u
//! ```
//!
//! `c₀` has no closed form and is an input (1 by default).

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::classifier::{mse_gd_trajectory, LabeledModes};
use crate::graph::{NoisyLabels, SplitSpec};
use crate::linalg::{one_hot, select_rows};
use crate::spectral::{embedding_spectrum, gram, kernel_complexity};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub l1: f64,
    pub l2: f64,
    pub kc: f64,
    pub kc_argmin_r0: usize,
    /// `max_i K_ii`
    pub tau0_sq: f64,
    pub c0: f64,
    pub x: f64,
    pub m: usize,
    pub u: usize,
    pub t: usize,
    pub eta: f64,
    pub combined: f64,
    /// `(1/u) ‖[F(W,t) − Ỹ]_𝓤‖_F²` of the squared-loss classifier.
    pub test_mse: f64,
    /// `m / N`
    pub labeled_fraction: f64,
}

/// `‖(I − ηK_𝓛𝓛)ᵗ Ỹ_𝓛‖_F²`
pub fn l1_term(
    k_ll: ArrayView2<'_, f64>,
    clean_l: ArrayView2<'_, f64>,
    eta: f64,
    steps: usize,
) -> Result<f64> {
    let modes = LabeledModes::new(k_ll, eta)?;
    check_rows(modes.dim(), clean_l)?;
    Ok(modes.norm_sq(&modes.factors(steps), clean_l))
}

/// `‖ηK_𝓛𝓛 Σ_{t'<t} (I − ηK_𝓛𝓛)^{t'} N_𝓛‖_F²`, using
/// `1 − (1 − ημ)ᵗ` per eigenvalue `μ` (zero when `μ = 0`).
pub fn l2_term(
    k_ll: ArrayView2<'_, f64>,
    noise_l: ArrayView2<'_, f64>,
    eta: f64,
    steps: usize,
) -> Result<f64> {
    let modes = LabeledModes::new(k_ll, eta)?;
    check_rows(modes.dim(), noise_l)?;
    let growth = modes.factors(steps).mapv(|f| 1.0 - f);
    Ok(modes.norm_sq(&growth, noise_l))
}

fn check_rows(m: usize, labels: ArrayView2<'_, f64>) -> Result<()> {
    if labels.nrows() == m {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "K_LL is {m}×{m} but the label block has {} rows",
            labels.nrows()
        )))
    }
}

/// Every bound quantity for embedding `h` under the given labels and split.
pub fn evaluate_bound(
    h: ArrayView2<'_, f64>,
    labels: &NoisyLabels,
    split: &SplitSpec,
    eta: f64,
    steps: usize,
    c0: f64,
    x: f64,
) -> Result<BoundReport> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Param(format!("confidence parameter x must be positive, got {x}")));
    }
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::Param(format!("c0 must be positive, got {c0}")));
    }
    let n = h.nrows();
    if labels.num_nodes() != n || split.num_nodes() != n {
        return Err(Error::Contract("embedding, labels and split disagree on N".into()));
    }
    let (m, u) = (split.num_labeled(), split.num_unlabeled());
    if m == 0 || u == 0 {
        return Err(Error::Param("bound needs nonempty labeled and unlabeled sets".into()));
    }

    let trajectory = mse_gd_trajectory(h, labels, split, eta, steps)?;

    let hl = select_rows(h, split.labeled());
    let k_ll = gram(hl.view());
    let c = labels.num_classes();
    let clean_l = one_hot(
        &split.labeled().iter().map(|&i| labels.clean()[i]).collect::<Vec<_>>(),
        c,
    );
    let observed_l = one_hot(
        &split.labeled().iter().map(|&i| labels.observed()[i]).collect::<Vec<_>>(),
        c,
    );
    let noise_l = &observed_l - &clean_l;
    let modes = LabeledModes::new(k_ll.view(), eta)?;
    let decay = modes.factors(steps);
    let l1 = modes.norm_sq(&decay, clean_l.view());
    let l2 = modes.norm_sq(&decay.mapv(|f| 1.0 - f), noise_l.view());

    let spectrum = embedding_spectrum(h)?;
    let kc = kernel_complexity(spectrum.as_slice().expect("contiguous"), m, u)?;
    let tau0_sq = h
        .rows()
        .into_iter()
        .map(|r| r.dot(&r))
        .fold(0.0_f64, f64::max);

    let combined = 2.0 * c0 / m as f64 * (l1 + l2) + c0 * kc.value + c0 * x / u as f64;
    Ok(BoundReport {
        l1,
        l2,
        kc: kc.value,
        kc_argmin_r0: kc.argmin_r0,
        tau0_sq,
        c0,
        x,
        m,
        u,
        t: steps,
        eta,
        combined,
        test_mse: trajectory.test_mse(),
        labeled_fraction: m as f64 / n as f64,
    })
}
