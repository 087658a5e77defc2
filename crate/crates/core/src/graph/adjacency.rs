use ndarray::Array2;

use super::GraphBundle;

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(Array2<f64>);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn num_nodes(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

pub fn normalize_adjacency(bundle: &GraphBundle) -> NormalizedAdjacency {
    normalize_edges(bundle.num_nodes(), bundle.edges())
}

/// Normalize an undirected edge list over `n` nodes. Pairs are expected to be
/// unique and loop-free; the self-loop of every node is added here.
pub fn normalize_edges(n: usize, edges: &[(usize, usize)]) -> NormalizedAdjacency {
    let mut degree = vec![1.0_f64; n];
    for &(a, b) in edges {
        degree[a] += 1.0;
        degree[b] += 1.0;
    }
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = 1.0 / degree[i];
    }
    for &(a, b) in edges {
        let w = 1.0 / (degree[a] * degree[b]).sqrt();
        m[[a, b]] = w;
        m[[b, a]] = w;
    }
    NormalizedAdjacency(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_sbm;
    use crate::graph::SbmParams;
    use crate::spectral::sym_eig;
    use ndarray::array;

    #[test]
    fn two_node_path() {
        let a = normalize_edges(2, &[(0, 1)]);
        assert_eq!(a.matrix(), &array![[0.5, 0.5], [0.5, 0.5]]);
    }

    #[test]
    fn isolated_node() {
        let a = normalize_edges(3, &[(0, 1)]);
        assert_eq!(a.matrix()[[2, 2]], 1.0);
        assert_eq!(a.matrix()[[2, 0]], 0.0);
        assert_eq!(a.matrix()[[2, 1]], 0.0);
        assert_eq!(a.matrix()[[0, 2]], 0.0);
    }

    #[test]
    fn spectrum_within_unit_interval() {
        let params = SbmParams {
            blocks: 2,
            per_block: 25,
            p_in: 0.3,
            p_out: 0.05,
            feature_dim: 2,
            feature_shift: 1.0,
        };
        let b = generate_sbm(&params, 4).unwrap();
        let a = normalize_adjacency(&b);
        let m = a.matrix();
        for i in 0..50 {
            for j in 0..50 {
                assert!((m[[i, j]] - m[[j, i]]).abs() <= 1e-12);
            }
        }
        let eig = sym_eig(m.view()).unwrap();
        assert!(eig.eigenvalues()[0] <= 1.0 + 1e-10);
        assert!(*eig.eigenvalues().last().unwrap() >= -1.0 - 1e-10);
    }
}
