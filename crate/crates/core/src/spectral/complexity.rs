use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Eigenvalues within this distance below zero are treated as zero.
const PSD_FLOOR: f64 = -1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelComplexity {
    pub value: f64,
    /// Smallest minimizing truncation rank.
    pub argmin_r0: usize,
}

/// `min_{r0 ∈ [0, N]} r0 (1/u + 1/m) + √(Σ_{i>r0} λ̂_i) (1/√u + 1/√m)` over a
/// descending nonnegative spectrum.
pub fn kernel_complexity(eigenvalues: &[f64], m: usize, u: usize) -> Result<KernelComplexity> {
    if eigenvalues.is_empty() {
        return Err(Error::Param("kernel complexity of an empty spectrum".into()));
    }
    if m == 0 || u == 0 {
        return Err(Error::Param(format!("m and u must be positive (m={m}, u={u})")));
    }
    if let Some(&bad) = eigenvalues.iter().find(|v| !v.is_finite() || **v < PSD_FLOOR) {
        return Err(Error::Param(format!("spectrum has invalid eigenvalue {bad}")));
    }
    if eigenvalues
        .windows(2)
        .any(|w| w[1] > w[0] + 1e-12 * w[0].abs().max(1.0))
    {
        return Err(Error::Param("spectrum must be sorted in descending order".into()));
    }

    let n = eigenvalues.len();
    let (m, u) = (m as f64, u as f64);
    let linear = 1.0 / u + 1.0 / m;
    let root = 1.0 / u.sqrt() + 1.0 / m.sqrt();

    // tail[r] = Σ_{i ≥ r} λ̂_i, accumulated from the smallest eigenvalue up
    let mut tail = vec![0.0; n + 1];
    for r in (0..n).rev() {
        tail[r] = tail[r + 1] + eigenvalues[r].max(0.0);
    }

    let mut best = KernelComplexity {
        value: f64::INFINITY,
        argmin_r0: 0,
    };
    for (r0, &t) in tail.iter().enumerate() {
        let value = r0 as f64 * linear + t.sqrt() * root;
        if value < best.value {
            best = KernelComplexity { value, argmin_r0: r0 };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_spectrum() {
        let kc = kernel_complexity(&[4.0, 1.0, 0.0, 0.0], 2, 2).unwrap();
        assert_eq!(kc, KernelComplexity { value: 2.0, argmin_r0: 2 });
    }

    #[test]
    fn zero_spectrum() {
        let kc = kernel_complexity(&[0.0; 5], 3, 4).unwrap();
        assert_eq!(kc, KernelComplexity { value: 0.0, argmin_r0: 0 });
    }

    #[test]
    fn errors() {
        assert!(kernel_complexity(&[], 1, 1).is_err());
        assert!(kernel_complexity(&[1.0], 0, 1).is_err());
        assert!(kernel_complexity(&[1.0, 2.0], 1, 1).is_err());
        assert!(kernel_complexity(&[1.0, -0.5], 1, 1).is_err());
        assert!(kernel_complexity(&[1.0, -1e-12], 1, 1).is_ok());
    }
}
