use ndarray::{Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::NormalizedAdjacency;
use crate::{Error, Result};

/// Weights of the two graph-convolution layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    /// `D × h`
    pub w0: Array2<f64>,
    /// `h × d`
    pub w1: Array2<f64>,
}

fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound))
}

impl EncoderParams {
    /// Uniform initialization in `±√(6 / (fan_in + fan_out))`.
    pub fn init(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w0 = glorot(input, hidden, &mut rng);
        let w1 = glorot(hidden, output, &mut rng);
        Self { w0, w1 }
    }

    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w0: Array2::zeros((input, hidden)),
            w1: Array2::zeros((hidden, output)),
        }
    }

    pub fn input_width(&self) -> usize {
        self.w0.nrows()
    }

    pub fn embed_width(&self) -> usize {
        self.w1.ncols()
    }

    /// `self ← self − step · grad`
    pub fn descend(&mut self, grad: &EncoderParams, step: f64) {
        self.w0.scaled_add(-step, &grad.w0);
        self.w1.scaled_add(-step, &grad.w1);
    }

    pub(crate) fn accumulate(&mut self, other: &EncoderParams) {
        self.w0 += &other.w0;
        self.w1 += &other.w1;
    }

    pub fn is_finite(&self) -> bool {
        self.w0.iter().chain(self.w1.iter()).all(|v| v.is_finite())
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `Â X`
    ax: Array2<f64>,
    z1: Array2<f64>,
    /// `Â σ(Z₁)`
    aa1: Array2<f64>,
    z2: Array2<f64>,
    /// `H = σ(Z₂)`
    pub embedding: Array2<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

/// Zero the entries of `grad` whose pre-activation was not positive.
fn relu_backward(mut grad: Array2<f64>, z: &Array2<f64>) -> Array2<f64> {
    Zip::from(&mut grad).and(z).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    grad
}

impl ForwardPass {
    pub fn run(
        params: &EncoderParams,
        features: ArrayView2<'_, f64>,
        adjacency: &NormalizedAdjacency,
    ) -> Result<Self> {
        let a = adjacency.matrix();
        let (n, d) = features.dim();
        if a.nrows() != n {
            return Err(Error::Contract(format!(
                "adjacency has {} nodes, features have {n} rows",
                a.nrows()
            )));
        }
        if params.w0.nrows() != d || params.w1.nrows() != params.w0.ncols() {
            return Err(Error::Contract(format!(
                "weight shapes {:?}, {:?} do not chain from {d} input features",
                params.w0.dim(),
                params.w1.dim()
            )));
        }
        let ax = a.dot(&features);
        let z1 = ax.dot(&params.w0);
        let aa1 = a.dot(&relu(&z1));
        let z2 = aa1.dot(&params.w1);
        let embedding = relu(&z2);
        Ok(Self {
            ax,
            z1,
            aa1,
            z2,
            embedding,
        })
    }

    /// Parameter gradient given `∂L/∂H`. Uses the symmetry of `Â`.
    pub fn backward(
        &self,
        params: &EncoderParams,
        adjacency: &NormalizedAdjacency,
        grad_embedding: &Array2<f64>,
    ) -> EncoderParams {
        let dz2 = relu_backward(grad_embedding.clone(), &self.z2);
        let w1 = self.aa1.t().dot(&dz2);
        let da1 = adjacency.matrix().dot(&dz2.dot(&params.w1.t()));
        let dz1 = relu_backward(da1, &self.z1);
        let w0 = self.ax.t().dot(&dz1);
        EncoderParams { w0, w1 }
    }
}

/// `H = σ(Â σ(Â X W⁽⁰⁾) W⁽¹⁾)` with `σ = ReLU`.
pub fn gcn_forward(
    params: &EncoderParams,
    features: ArrayView2<'_, f64>,
    adjacency: &NormalizedAdjacency,
) -> Result<Array2<f64>> {
    ForwardPass::run(params, features, adjacency).map(|f| f.embedding)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::normalize_edges;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn zero_weights_give_zero_embedding() {
        let adj = normalize_edges(3, &[(0, 1), (1, 2)]);
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let h = gcn_forward(&EncoderParams::zeros(2, 4, 3), x.view(), &adj).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scalar_chain() {
        let adj = normalize_edges(1, &[]);
        let p = EncoderParams {
            w0: array![[1.0]],
            w1: array![[1.0]],
        };
        assert_eq!(gcn_forward(&p, array![[1.0]].view(), &adj).unwrap(), array![[1.0]]);
    }

    #[test]
    fn matches_straight_line_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)];
        let adj = normalize_edges(6, &edges);
        let x = Array2::from_shape_fn((6, 3), |_| StandardNormal.sample(&mut rng));
        let p = EncoderParams::init(3, 5, 2, 9);
        let h = gcn_forward(&p, x.view(), &adj).unwrap();

        // independent elementwise evaluation
        let mut deg = [1.0_f64; 6];
        for &(a, b) in &edges {
            deg[a] += 1.0;
            deg[b] += 1.0;
        }
        let ahat = |i: usize, j: usize| -> f64 {
            let linked = i == j || edges.iter().any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j));
            if linked {
                1.0 / (deg[i] * deg[j]).sqrt()
            } else {
                0.0
            }
        };
        let mut hidden = [[0.0_f64; 5]; 6];
        for i in 0..6 {
            for k in 0..5 {
                let mut z = 0.0;
                for j in 0..6 {
                    for f in 0..3 {
                        z += ahat(i, j) * x[[j, f]] * p.w0[[f, k]];
                    }
                }
                hidden[i][k] = z.max(0.0);
            }
        }
        for i in 0..6 {
            for o in 0..2 {
                let mut z = 0.0;
                for j in 0..6 {
                    for k in 0..5 {
                        z += ahat(i, j) * hidden[j][k] * p.w1[[k, o]];
                    }
                }
                assert!((h[[i, o]] - z.max(0.0)).abs() < 1e-12);
                assert!(h[[i, o]] >= 0.0);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let adj = normalize_edges(2, &[(0, 1)]);
        let p = EncoderParams::zeros(3, 2, 2);
        let x = Array2::zeros((2, 2));
        assert!(matches!(gcn_forward(&p, x.view(), &adj), Err(Error::Contract(_))));
    }

    #[test]
    fn init_is_bounded_and_seeded() {
        let p = EncoderParams::init(10, 6, 4, 1);
        let b0 = (6.0_f64 / 16.0).sqrt();
        assert!(p.w0.iter().all(|v| v.abs() <= b0));
        assert_eq!(p, EncoderParams::init(10, 6, 4, 1));
        assert_ne!(p, EncoderParams::init(10, 6, 4, 2));
    }
}
