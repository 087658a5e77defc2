use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, ArrayView2};

use super::SpectralDecomposition;
use crate::graph::fmt_f64;
use crate::{Error, Result};

/// Eigen-projection scores of a label matrix and their prefix sums.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    /// `p_r`, one per eigenvector in descending eigenvalue order.
    pub scores: Array1<f64>,
    /// `‖p^{(1:r)}‖₁` for `r = 1..N`.
    pub concentration: Array1<f64>,
    /// Prefix sums of the scores of the noise matrix, when one was supplied.
    pub noise_concentration: Option<Array1<f64>>,
}

impl ProjectionReport {
    /// Signal concentration captured by the top `rank` eigenvectors.
    pub fn concentration_at(&self, rank: usize) -> f64 {
        prefix_at(&self.concentration, rank)
    }

    pub fn noise_concentration_at(&self, rank: usize) -> Option<f64> {
        self.noise_concentration.as_ref().map(|c| prefix_at(c, rank))
    }

    /// CSV with columns `rank,p,signal_concentration,noise_concentration`;
    /// ranks are 1-based and the last column is empty when no noise was given.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,p,signal_concentration,noise_concentration\n");
        for r in 0..self.scores.len() {
            let noise = self
                .noise_concentration
                .as_ref()
                .map(|c| fmt_f64(c[r]))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{}",
                r + 1,
                fmt_f64(self.scores[r]),
                fmt_f64(self.concentration[r]),
                noise
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn prefix_at(prefix: &Array1<f64>, rank: usize) -> f64 {
    match rank {
        0 => 0.0,
        r => prefix[r.min(prefix.len()) - 1],
    }
}

/// Class-averaged squared projection of each normalized label column onto
/// every eigenvector. Columns with zero norm are skipped; at least one must
/// remain.
fn scores(decomposition: &SpectralDecomposition, labels: ArrayView2<'_, f64>) -> Option<Array1<f64>> {
    let projected = decomposition.eigenvectors().t().dot(&labels);
    let mut p = Array1::zeros(decomposition.dim());
    let mut used = 0usize;
    for (c, column) in labels.columns().into_iter().enumerate() {
        let norm_sq: f64 = column.iter().map(|v| v * v).sum();
        if norm_sq == 0.0 {
            continue;
        }
        used += 1;
        for r in 0..p.len() {
            let v = projected[[r, c]];
            p[r] += v * v / norm_sq;
        }
    }
    (used > 0).then(|| p / used as f64)
}

fn prefix_sums(p: &Array1<f64>) -> Array1<f64> {
    let mut acc = 0.0;
    p.mapv(|v| {
        acc += v;
        acc
    })
}

pub fn eigen_projection(
    decomposition: &SpectralDecomposition,
    labels: ArrayView2<'_, f64>,
    noise: Option<ArrayView2<'_, f64>>,
) -> Result<ProjectionReport> {
    let n = decomposition.dim();
    if labels.nrows() != n {
        return Err(Error::Contract(format!(
            "label matrix has {} rows, eigensystem has dimension {n}",
            labels.nrows()
        )));
    }
    if let Some(c) = labels
        .columns()
        .into_iter()
        .position(|col| col.iter().all(|&v| v == 0.0))
    {
        return Err(Error::Param(format!("label column {c} is zero")));
    }
    let p = scores(decomposition, labels).expect("columns checked nonzero");
    let concentration = prefix_sums(&p);

    let noise_concentration = match noise {
        Some(nm) => {
            if nm.dim() != labels.dim() {
                return Err(Error::Contract("noise matrix shape differs from labels".into()));
            }
            scores(decomposition, nm).map(|q| prefix_sums(&q))
        }
        None => None,
    };
    Ok(ProjectionReport {
        scores: p,
        concentration,
        noise_concentration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gram, sym_eig};
    use ndarray::array;

    #[test]
    fn axis_aligned() {
        let eig = sym_eig(array![[2.0, 0.0], [0.0, 1.0]].view()).unwrap();
        let y = array![[1.0], [0.0]];
        let rep = eigen_projection(&eig, y.view(), None).unwrap();
        assert_eq!(rep.scores.to_vec(), vec![1.0, 0.0]);
        assert_eq!(rep.concentration.to_vec(), vec![1.0, 1.0]);
    }

    #[test]
    fn scores_sum_to_one() {
        let h = array![[1.0, 0.2], [0.9, 0.1], [0.0, 1.0], [0.1, 1.2], [0.5, 0.5]];
        let eig = sym_eig(gram(h.view()).view()).unwrap();
        let y = array![[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let noise = array![[0.0, 0.0], [-1.0, 1.0], [0.0, 0.0], [1.0, -1.0], [0.0, 0.0]];
        let rep = eigen_projection(&eig, y.view(), Some(noise.view())).unwrap();
        assert!((rep.scores.sum() - 1.0).abs() <= 1e-10);
        assert!((rep.concentration[4] - 1.0).abs() <= 1e-10);
        assert!((rep.noise_concentration.as_ref().unwrap()[4] - 1.0).abs() <= 1e-10);
        let csv = rep.to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("rank,p,signal_concentration,noise_concentration\n1,"));
    }

    #[test]
    fn zero_label_column_rejected() {
        let eig = sym_eig(array![[2.0, 0.0], [0.0, 1.0]].view()).unwrap();
        let y = array![[1.0, 0.0], [1.0, 0.0]];
        assert!(matches!(
            eigen_projection(&eig, y.view(), None),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn noise_column_absent_is_empty_csv_field() {
        let eig = sym_eig(array![[2.0, 0.0], [0.0, 1.0]].view()).unwrap();
        let y = array![[1.0], [0.0]];
        let csv = eigen_projection(&eig, y.view(), None).unwrap().to_csv();
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
    }
}
