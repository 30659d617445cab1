use assist_numeric::layers::attend;
use assist_numeric::{softmax_rows, Graph, MultiHeadAttention, ParameterStore, Tensor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn scaled_query_selects_matching_orthonormal_key() {
    // One head, identity projections: weights are softmax(q·kᵀ / sqrt(d)).
    let d = 4;
    let keys = Tensor::identity(d);
    let store = ParameterStore::new();
    for j in 0..d {
        let mut q = vec![0.0; d];
        q[j] = 20.0;
        let mut g = Graph::new(&store);
        let qv = g.input(Tensor::row_vector(q));
        let kv = g.input(keys.clone());
        let out = attend(&mut g, qv, kv, kv, 1, None).unwrap();
        // With values = keys = I, the output row is the weight vector itself.
        let w = g.value(out).data().to_vec();
        // Hand value: e^10 / (e^10 + 3) for d = 4, scale 20/sqrt(4) = 10.
        let expected = 10f64.exp() / (10f64.exp() + 3.0);
        assert!((w[j] - expected).abs() < 1e-12);
        assert!(w[j] >= 0.99);
    }
}

#[test]
fn softmax_rows_positive_and_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    use rand::Rng;
    for _ in 0..100 {
        let data: Vec<f64> = (0..12).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let p = softmax_rows(&Tensor::matrix(3, 4, data).unwrap());
        for r in 0..3 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.row(r).iter().all(|v| *v > 0.0));
        }
    }
}

proptest! {
    #[test]
    fn memory_permutation_leaves_output_unchanged(seed in 0u64..1000, rot in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParameterStore::new();
        let mha = MultiHeadAttention::new(&mut store, "a", 8, 4, &mut rng).unwrap();
        let n = 5;
        use rand::Rng;
        let mem: Vec<Vec<f64>> = (0..n).map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let q: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let run = |rows: &[Vec<f64>]| {
            let mut g = Graph::new(&store);
            let qv = g.input(Tensor::row_vector(q.clone()));
            let m = g.input(Tensor::from_rows(rows).unwrap());
            let y = mha.forward(&mut g, qv, m, m, None).unwrap();
            g.value(y).clone()
        };
        let mut rotated = mem.clone();
        rotated.rotate_left(rot % n);
        prop_assert!(run(&mem).max_abs_diff(&run(&rotated)) < 1e-12);
    }
}
