use gcl_lrr::graph::{
    build_transition_matrix, load_bundle, save_bundle, GraphBundle, NoiseKind, SplitSpec,
};
use gcl_lrr::spectral::{embedding_spectrum, kernel_complexity, lr_attention, tnn_embedding};
use ndarray::Array2;
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3.0f64..3.0, r * c)
            .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap())
    })
}

fn descending(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..50.0], 1..=max_len).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

proptest! {
    #[test]
    fn transition_rows_are_stochastic(c in 2usize..8, rate in 0.0f64..=1.0, asym in any::<bool>()) {
        let kind = if asym { NoiseKind::Asymmetric } else { NoiseKind::Symmetric };
        let t = build_transition_matrix(kind, rate, c).unwrap();
        for row in t.matrix().rows() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn kernel_complexity_is_the_minimum(spectrum in descending(30), m in 1usize..40, u in 1usize..40) {
        let kc = kernel_complexity(&spectrum, m, u).unwrap();
        let (mf, uf) = (m as f64, u as f64);
        for r0 in 0..=spectrum.len() {
            let tail: f64 = spectrum[r0..].iter().sum();
            let v = r0 as f64 * (1.0 / uf + 1.0 / mf) + tail.sqrt() * (1.0 / uf.sqrt() + 1.0 / mf.sqrt());
            prop_assert!(kc.value <= v + 1e-12 * v.max(1.0));
        }
        prop_assert!(kc.argmin_r0 <= spectrum.len());
    }

    #[test]
    fn tnn_is_nonincreasing_in_rank(h in matrix(10, 6)) {
        let mut prev = f64::INFINITY;
        for r0 in 0..=h.nrows() {
            let v = tnn_embedding(h.view(), r0).unwrap();
            prop_assert!(v <= prev + 1e-10 * prev.max(1.0));
            prev = v;
        }
        prop_assert!(prev.abs() < 1e-9);
    }

    #[test]
    fn attention_never_raises_an_eigenvalue(h in matrix(10, 5)) {
        let before = embedding_spectrum(h.view()).unwrap();
        prop_assume!(before[0] > 1e-6);
        let after = embedding_spectrum(lr_attention(h.view()).unwrap().features.view()).unwrap();
        for (b, a) in before.iter().zip(after.iter()) {
            prop_assert!(*a <= b + 1e-9 * before[0]);
        }
    }

    #[test]
    fn bundle_round_trip(
        n in 2usize..15,
        d in 1usize..5,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let features = Array2::from_shape_fn((n, d), |_| rng.random_range(-1e3..1e3));
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|_| rng.random::<f64>() < 0.3)
            .collect();
        let mut bundle = GraphBundle::new(features, labels, 2, edges).unwrap();
        if n > 2 {
            bundle = bundle.with_split(SplitSpec::from_labeled(n, vec![0, n - 1]).unwrap()).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        prop_assert_eq!(load_bundle(dir.path()).unwrap(), bundle);
    }
}
