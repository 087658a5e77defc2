use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const MAX_ITER: usize = 100;
const SHIFT_TOL: f64 = 1e-8;

/// k-means clustering of embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    /// `K̃ × d`; row `k` is the mean of the rows assigned to cluster `k`.
    pub prototypes: Array2<f64>,
    pub assignments: Vec<usize>,
    pub cluster_sizes: Vec<usize>,
    /// Within-cluster sum of squares after each Lloyd update.
    pub inertia_trace: Vec<f64>,
}

impl PrototypeSet {
    pub fn num_clusters(&self) -> usize {
        self.prototypes.nrows()
    }

    pub fn inertia(&self) -> f64 {
        self.inertia_trace.last().copied().unwrap_or(0.0)
    }
}

fn dist_sq(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
fn nearest(point: ArrayView1<'_, f64>, centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.rows().into_iter().enumerate() {
        let d = dist_sq(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut closest: Vec<f64> = (0..n)
        .map(|i| dist_sq(points.row(i), points.row(first)))
        .collect();
    while chosen.len() < k {
        let total: f64 = closest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in closest.iter().enumerate() {
                acc += w;
                if w > 0.0 && target < acc {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| closest.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            // every remaining point coincides with a chosen one
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        for (i, c) in closest.iter_mut().enumerate() {
            *c = c.min(dist_sq(points.row(i), points.row(next)));
        }
    }
    let mut centroids = Array2::zeros((k, points.ncols()));
    for (row, &i) in chosen.iter().enumerate() {
        centroids.row_mut(row).assign(&points.row(i));
    }
    centroids
}

/// Move the point farthest from its centroid (among clusters with more than
/// one member) into each empty cluster.
fn fill_empty(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, assign: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut far = None;
        let mut far_d = -1.0;
        for (i, &a) in assign.iter().enumerate() {
            if sizes[a] > 1 {
                let d = dist_sq(points.row(i), centroids.row(a));
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
        }
        let i = far.expect("k <= n guarantees a cluster with two members");
        assign[i] = empty;
    }
}

fn means(points: ArrayView2<'_, f64>, assign: &[usize], k: usize) -> (Array2<f64>, Vec<usize>) {
    let mut sums = Array2::zeros((k, points.ncols()));
    let mut sizes = vec![0usize; k];
    for (i, &a) in assign.iter().enumerate() {
        sizes[a] += 1;
        let mut row = sums.row_mut(a);
        row += &points.row(i);
    }
    for (mut row, &s) in sums.rows_mut().into_iter().zip(&sizes) {
        row /= s as f64;
    }
    (sums, sizes)
}

/// Lloyd's algorithm from k-means++ seeds; stops after 100 iterations or
/// when no centroid moves by more than `1e-8`.
pub fn cluster_prototypes(h: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<PrototypeSet> {
    let n = h.nrows();
    if k == 0 || k > n {
        return Err(Error::Param(format!(
            "cluster count {k} must lie in [1, {n}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(h, k, &mut rng);
    let mut assign = vec![0usize; n];
    let mut sizes = vec![0usize; k];
    let mut inertia_trace = Vec::new();

    for _ in 0..MAX_ITER {
        for (i, a) in assign.iter_mut().enumerate() {
            *a = nearest(h.row(i), &centroids).0;
        }
        fill_empty(h, &centroids, &mut assign, k);
        let (next, next_sizes) = means(h, &assign, k);
        sizes = next_sizes;
        let inertia: f64 = assign
            .iter()
            .enumerate()
            .map(|(i, &a)| dist_sq(h.row(i), next.row(a)))
            .sum();
        inertia_trace.push(inertia);
        let shift = centroids
            .rows()
            .into_iter()
            .zip(next.rows())
            .map(|(a, b)| dist_sq(a, b).sqrt())
            .fold(0.0_f64, f64::max);
        centroids = next;
        if shift < SHIFT_TOL {
            break;
        }
    }

    Ok(PrototypeSet {
        prototypes: centroids,
        assignments: assign,
        cluster_sizes: sizes,
        inertia_trace,
    })
}

#[cfg(test)]
fn cluster_means(h: ArrayView2<'_, f64>, assign: &[usize], k: usize) -> Array2<f64> {
    means(h, assign, k).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_obvious_clusters() {
        let h = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        // exhaustive oracle over all 2-partitions
        let mut best = (f64::INFINITY, 0u32);
        for mask in 1u32..(1 << 4) - 1 {
            let assign: Vec<usize> = (0..4).map(|i| ((mask >> i) & 1) as usize).collect();
            let c = cluster_means(h.view(), &assign, 2);
            let cost: f64 = (0..4).map(|i| dist_sq(h.row(i), c.row(assign[i]))).sum();
            if cost < best.0 {
                best = (cost, mask);
            }
        }
        for seed in 0..5 {
            let p = cluster_prototypes(h.view(), 2, seed).unwrap();
            assert!((p.inertia() - best.0).abs() < 1e-12);
            let mut rows: Vec<Vec<f64>> = p.prototypes.rows().into_iter().map(|r| r.to_vec()).collect();
            rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
            assert_eq!(rows, vec![vec![0.0, 0.5], vec![10.0, 0.5]]);
        }
    }

    #[test]
    fn one_cluster_per_point() {
        let h = array![[0.0], [1.0], [1.0], [5.0]];
        let p = cluster_prototypes(h.view(), 4, 3).unwrap();
        assert_eq!(p.cluster_sizes, vec![1, 1, 1, 1]);
        for (i, &a) in p.assignments.iter().enumerate() {
            assert_eq!(p.prototypes.row(a), h.row(i));
        }
    }

    #[test]
    fn too_many_clusters() {
        let h = array![[0.0], [1.0]];
        assert!(matches!(cluster_prototypes(h.view(), 3, 0), Err(Error::Param(_))));
    }

    #[test]
    fn lloyd_invariants_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = Array2::from_shape_fn((60, 3), |_| StandardNormal.sample(&mut rng));
        for seed in 0..10 {
            let p = cluster_prototypes(h.view(), 4, seed).unwrap();
            for w in p.inertia_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", p.inertia_trace);
            }
            let m = cluster_means(h.view(), &p.assignments, 4);
            for (a, b) in m.iter().zip(p.prototypes.iter()) {
                assert!((a - b).abs() <= 1e-10);
            }
            assert!(p.cluster_sizes.iter().all(|&s| s > 0));
            assert_eq!(p.cluster_sizes.iter().sum::<usize>(), 60);
            for (i, &a) in p.assignments.iter().enumerate() {
                assert_eq!(nearest(h.row(i), &p.prototypes).0, a);
            }
            assert_eq!(p, cluster_prototypes(h.view(), 4, seed).unwrap());
        }
    }
}
