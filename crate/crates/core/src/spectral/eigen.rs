use ndarray::{Array1, Array2, ArrayView2};

use crate::linalg::{ensure_finite, to_nalgebra};
use crate::{Error, Result};

/// `K = H Hᵀ`
pub fn gram(h: ArrayView2<'_, f64>) -> Array2<f64> {
    h.dot(&h.t())
}

/// Eigensystem of a symmetric matrix with eigenvalues in descending order.
///
/// Column `r` of [`eigenvectors`](Self::eigenvectors) pairs with
/// `eigenvalues[r]`; the first component of magnitude above `1e-10` in each
/// column is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Array1<f64>,
    eigenvectors: Array2<f64>,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U Λ Uᵀ`
    pub fn reconstruct(&self) -> Array2<f64> {
        let scaled = &self.eigenvectors * &self.eigenvalues;
        scaled.dot(&self.eigenvectors.t())
    }
}

const SIGN_FLOOR: f64 = 1e-10;

/// Dense symmetric eigendecomposition.
pub fn sym_eig(k: ArrayView2<'_, f64>) -> Result<SpectralDecomposition> {
    let (n, cols) = k.dim();
    if n != cols {
        return Err(Error::Contract(format!("eigensolver needs a square matrix, got {n}×{cols}")));
    }
    ensure_finite(k, "matrix")?;
    let scale = k.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (k[[i, j]] - k[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::Contract(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    k[[i, j]],
                    k[[j, i]]
                )));
            }
        }
    }
    if n == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: Array1::zeros(0),
            eigenvectors: Array2::zeros((0, 0)),
        });
    }

    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(k));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let eigenvalues = Array1::from_iter(order.iter().map(|&r| eig.eigenvalues[r]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &r) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(r);
        let flip = v
            .iter()
            .find(|x| x.abs() > SIGN_FLOOR)
            .is_some_and(|&x| x < 0.0);
        let sign = if flip { -1.0 } else { 1.0 };
        for i in 0..n {
            eigenvectors[[i, col]] = sign * v[i];
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// All `N` eigenvalues of `H Hᵀ` in descending order, computed through the
/// `d × d` co-gram `Hᵀ H` when `d < N` (the nonzero spectra coincide; the
/// remaining `N − d` eigenvalues are zero).
pub fn embedding_spectrum(h: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    let (n, d) = h.dim();
    ensure_finite(h, "embedding")?;
    if d < n {
        let co = h.t().dot(&h);
        let mut vals = nalgebra::SymmetricEigen::new(to_nalgebra(co.view()))
            .eigenvalues
            .iter()
            .copied()
            .collect::<Vec<_>>();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals.resize(n, 0.0);
        Ok(Array1::from(vals))
    } else {
        let mut vals = nalgebra::SymmetricEigen::new(to_nalgebra(gram(h).view()))
            .eigenvalues
            .iter()
            .copied()
            .collect::<Vec<_>>();
        vals.sort_by(|a, b| b.total_cmp(a));
        Ok(Array1::from(vals))
    }
}
