//! Small dense helpers shared across modules.

use ndarray::{Array2, ArrayView2, Axis};

use crate::{Error, Result};

/// One-hot encode class indices into an `n × num_classes` matrix.
pub fn one_hot(labels: &[usize], num_classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), num_classes));
    for (i, &c) in labels.iter().enumerate() {
        out[[i, c]] = 1.0;
    }
    out
}

/// Gather the given rows into a new matrix, preserving the order of `rows`.
pub fn select_rows(m: ArrayView2<'_, f64>, rows: &[usize]) -> Array2<f64> {
    m.select(Axis(0), rows)
}

pub fn frobenius_sq(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn max_abs(m: ArrayView2<'_, f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn ensure_finite(m: ArrayView2<'_, f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn to_nalgebra(m: ArrayView2<'_, f64>) -> nalgebra::DMatrix<f64> {
    let (r, c) = m.dim();
    nalgebra::DMatrix::from_fn(r, c, |i, j| m[[i, j]])
}

/// `⌈ratio · total⌉`, ignoring binary64 representation error in the product
/// (so that `0.3 · 10` counts as 3, not 4).
pub fn ceil_count(ratio: f64, total: usize) -> usize {
    let x = ratio * total as f64;
    let rounded = x.round();
    let count = if (x - rounded).abs() <= 1e-9 * x.abs().max(1.0) {
        rounded
    } else {
        x.ceil()
    };
    (count.max(0.0) as usize).min(total)
}

/// Derive an independent stream seed from a base seed (splitmix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Norm-wise relative difference `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn relative_error(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    let diff = frobenius_sq((&a - &b).view()).sqrt();
    let scale = frobenius_sq(a).sqrt().max(frobenius_sq(b).sqrt());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}
