use ndarray::{Array2, ArrayView2};

use super::eigen::{embedding_spectrum, gram};
use crate::{Error, Result};

/// Output of the LR-Attention layer `F = B H` with `B = H Hᵀ / λ̂₁`.
#[derive(Debug, Clone)]
pub struct AttentionTransform {
    pub attention: Array2<f64>,
    pub features: Array2<f64>,
    /// `λ̂₁`, the largest eigenvalue of `H Hᵀ`.
    pub top_eigenvalue: f64,
}

/// Rescaled linear self-attention. The gram matrix of the output is
/// `K³ / λ̂₁²`, so every eigenvalue `λ̂_i` maps to `λ̂_i³ / λ̂₁² ≤ λ̂_i`.
pub fn lr_attention(h: ArrayView2<'_, f64>) -> Result<AttentionTransform> {
    let spectrum = embedding_spectrum(h)?;
    let top = spectrum.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::Degenerate(
            "LR-Attention needs a nonzero embedding (largest gram eigenvalue is 0)".into(),
        ));
    }
    let attention = gram(h) / top;
    let features = attention.dot(&h);
    Ok(AttentionTransform {
        attention,
        features,
        top_eigenvalue: top,
    })
}
