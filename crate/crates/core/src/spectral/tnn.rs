use ndarray::{Array2, ArrayView2};

use super::eigen::{embedding_spectrum, sym_eig};
use crate::linalg::{ensure_finite, to_nalgebra};
use crate::{Error, Result};

fn check_rank(r0: usize, n: usize) -> Result<()> {
    if r0 > n {
        Err(Error::Param(format!("rank r0 = {r0} outside [0, {n}]")))
    } else {
        Ok(())
    }
}

/// Sum of the eigenvalues after the first `r0` of a descending spectrum.
/// The tail is accumulated from the smallest value upward.
pub fn tnn_spectrum(eigenvalues: &[f64], r0: usize) -> Result<f64> {
    check_rank(r0, eigenvalues.len())?;
    Ok(eigenvalues[r0..].iter().rev().sum())
}

/// Truncated nuclear norm `‖K‖_{r0}` of a symmetric PSD matrix.
pub fn tnn_gram(k: ArrayView2<'_, f64>, r0: usize) -> Result<f64> {
    check_rank(r0, k.nrows())?;
    let eig = sym_eig(k)?;
    tnn_spectrum(eig.eigenvalues().as_slice().expect("contiguous"), r0)
}

/// Truncated nuclear norm of `H Hᵀ`, evaluated through the co-gram `Hᵀ H`.
pub fn tnn_embedding(h: ArrayView2<'_, f64>, r0: usize) -> Result<f64> {
    check_rank(r0, h.nrows())?;
    let spectrum = embedding_spectrum(h)?;
    tnn_spectrum(spectrum.as_slice().expect("contiguous"), r0)
}

/// Gradient of `‖H Hᵀ‖_{r0}` with respect to `H`, with the value itself.
#[derive(Debug, Clone)]
pub struct TnnGradient {
    pub value: f64,
    pub gradient: Array2<f64>,
    /// `λ̂_{r0} − λ̂_{r0+1}`, or `None` when no gap is involved
    /// (`r0 = 0` or `r0 ≥ min(N, d)`).
    pub gap: Option<f64>,
    /// The gap fell below `1e-8 · (1 + λ̂₁)`; `gradient` is then a subgradient.
    pub degenerate: bool,
}

/// `2 (I − U_{r0} U_{r0}ᵀ) H`, computed as `2 H (I − V_{r0} V_{r0}ᵀ)` with
/// `V` the eigenvectors of the `d × d` co-gram.
pub fn tnn_gradient(h: ArrayView2<'_, f64>, r0: usize) -> Result<TnnGradient> {
    let (n, d) = h.dim();
    check_rank(r0, n)?;
    ensure_finite(h, "embedding")?;

    let co = h.t().dot(&h);
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(co.view()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    spectrum.resize(n.max(d), 0.0);
    spectrum.truncate(n);
    let value = tnn_spectrum(&spectrum, r0)?;

    let keep = r0.min(d);
    let mut top = Array2::zeros((d, keep));
    for (col, &i) in order.iter().take(keep).enumerate() {
        for row in 0..d {
            top[[row, col]] = eig.eigenvectors[(row, i)];
        }
    }
    let projected = h.dot(&top).dot(&top.t());
    let gradient = (&h - &projected) * 2.0;

    let lam1 = spectrum.first().copied().unwrap_or(0.0);
    let gap = (r0 >= 1 && r0 < n.min(d)).then(|| spectrum[r0 - 1] - spectrum[r0]);
    let degenerate = gap.is_some_and(|g| g < 1e-8 * (1.0 + lam1.abs()));
    if degenerate {
        log::debug!("TNN gradient at r0 = {r0} has a degenerate eigengap {gap:?}");
    }
    Ok(TnnGradient {
        value,
        gradient,
        gap,
        degenerate,
    })
}
