//! Layers built from graph primitives. Each layer owns only parameter ids;
//! values live in the [`ParameterStore`] passed to the graph.

use rand::Rng;

use crate::graph::{Graph, Var};
use crate::params::{ParamId, ParameterStore};
use crate::{NumericError, Result};

/// Default layer-norm epsilon.
pub const LN_EPS: f64 = 1e-5;

/// Standard deviation used for weight initialization.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Linear {
    pub fn new<R: Rng>(
        store: &mut ParameterStore,
        name: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Self {
        Self {
            weight: store.add_normal(format!("{name}.weight"), &[d_in, d_out], INIT_STD, rng),
            bias: store.add_const(format!("{name}.bias"), &[d_out], 0.0),
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        linear(g, x, w, b)
    }
}

/// `y = x·W + b`
pub fn linear(g: &mut Graph<'_>, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = g.matmul(x, w)?;
    g.add_bias(xw, b)
}

#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParameterStore, name: &str, d: usize) -> Self {
        Self {
            gain: store.add_const(format!("{name}.gain"), &[d], 1.0),
            bias: store.add_const(format!("{name}.bias"), &[d], 0.0),
        }
    }

    pub fn forward(&self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        let gain = g.param(self.gain);
        let bias = g.param(self.bias);
        g.layer_norm(x, gain, bias, LN_EPS)
    }
}

/// Scaled dot-product multi-head attention with input and output projections.
#[derive(Debug, Clone, Copy)]
pub struct MultiHeadAttention {
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub d_model: usize,
    pub n_heads: usize,
}

impl MultiHeadAttention {
    pub fn new<R: Rng>(
        store: &mut ParameterStore,
        name: &str,
        d_model: usize,
        n_heads: usize,
        rng: &mut R,
    ) -> Result<Self> {
        check_heads(d_model, n_heads)?;
        Ok(Self {
            query: Linear::new(store, &format!("{name}.query"), d_model, d_model, rng),
            key: Linear::new(store, &format!("{name}.key"), d_model, d_model, rng),
            value: Linear::new(store, &format!("{name}.value"), d_model, d_model, rng),
            output: Linear::new(store, &format!("{name}.output"), d_model, d_model, rng),
            d_model,
            n_heads,
        })
    }

    /// `queries` is m×d, `keys` and `values` are n×d. Returns m×d.
    /// `dropout` optionally masks attention probabilities.
    pub fn forward(
        &self,
        g: &mut Graph<'_>,
        queries: Var,
        keys: Var,
        values: Var,
        dropout: Option<&mut Dropout<'_>>,
    ) -> Result<Var> {
        if g.value(keys).rows() == 0 {
            return Err(NumericError::Shape("attention over zero memory rows".into()));
        }
        if g.value(keys).rows() != g.value(values).rows() {
            return Err(NumericError::Shape("keys and values differ in rows".into()));
        }
        let q = self.query.forward(g, queries)?;
        let k = self.key.forward(g, keys)?;
        let v = self.value.forward(g, values)?;
        let heads = attend(g, q, k, v, self.n_heads, dropout)?;
        self.output.forward(g, heads)
    }
}

/// Per-head attention over already-projected q, k, v; heads concatenated.
pub fn attend(
    g: &mut Graph<'_>,
    q: Var,
    k: Var,
    v: Var,
    n_heads: usize,
    mut dropout: Option<&mut Dropout<'_>>,
) -> Result<Var> {
    let d = g.value(q).cols();
    check_heads(d, n_heads)?;
    let dh = d / n_heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let mut outs = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = g.slice_cols(q, h * dh, dh)?;
        let kh = g.slice_cols(k, h * dh, dh)?;
        let vh = g.slice_cols(v, h * dh, dh)?;
        let scores = g.matmul_t(qh, kh)?;
        let scores = g.scale(scores, scale);
        let mut probs = g.softmax(scores);
        if let Some(d) = dropout.as_deref_mut() {
            probs = d.apply(g, probs)?;
        }
        outs.push(g.matmul(probs, vh)?);
    }
    if outs.len() == 1 {
        Ok(outs[0])
    } else {
        g.concat_cols(&outs)
    }
}

fn check_heads(d: usize, n_heads: usize) -> Result<()> {
    if n_heads == 0 || d % n_heads != 0 {
        return Err(NumericError::Divisibility { d, n_heads });
    }
    Ok(())
}

/// Inverted dropout driven by a caller-supplied RNG. Only constructed in
/// training mode.
pub struct Dropout<'r> {
    pub p: f64,
    pub rng: &'r mut dyn rand::RngCore,
}

impl Dropout<'_> {
    pub fn apply(&mut self, g: &mut Graph<'_>, x: Var) -> Result<Var> {
        if self.p <= 0.0 {
            return Ok(x);
        }
        let keep = 1.0 - self.p;
        let n = g.value(x).len();
        let mask = (0..n)
            .map(|_| {
                if self.rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        g.mask(x, mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_identity() {
        let mut store = ParameterStore::new();
        let w = store.add("w", Tensor::identity(3), true);
        let b = store.add("b", Tensor::zeros(&[3]), false);
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::row_vector(vec![1.5, -2.0, 0.25]));
        let (wv, bv) = (g.param(w), g.param(b));
        let y = linear(&mut g, x, wv, bv).unwrap();
        assert_eq!(g.value(y).data(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn layer_norm_of_constant_is_zero() {
        let mut store = ParameterStore::new();
        let ln = LayerNorm::new(&mut store, "ln", 4);
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::row_vector(vec![3.0; 4]));
        let y = ln.forward(&mut g, x).unwrap();
        assert!(g.value(y).data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn layer_norm_rejects_bad_eps() {
        let mut store = ParameterStore::new();
        let ln = LayerNorm::new(&mut store, "ln", 2);
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::row_vector(vec![1.0, 2.0]));
        let (a, b) = (g.param(ln.gain), g.param(ln.bias));
        assert!(g.layer_norm(x, a, b, 0.0).is_err());
    }

    #[test]
    fn attention_rejects_indivisible_heads() {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            MultiHeadAttention::new(&mut store, "a", 10, 4, &mut rng),
            Err(NumericError::Divisibility { d: 10, n_heads: 4 })
        ));
    }

    #[test]
    fn single_memory_row_gets_full_weight() {
        let mut store = ParameterStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mha = MultiHeadAttention::new(&mut store, "a", 8, 2, &mut rng).unwrap();
        let row: Vec<f64> = (0..8).map(|i| i as f64 * 0.3 - 1.0).collect();
        let out_for = |query: Vec<f64>| {
            let mut g = Graph::new(&store);
            let q = g.input(Tensor::row_vector(query));
            let m = g.input(Tensor::row_vector(row.clone()));
            let y = mha.forward(&mut g, q, m, m, None).unwrap();
            g.value(y).clone()
        };
        // Expected: output projection of the value projection of the row.
        let mut g = Graph::new(&store);
        let m = g.input(Tensor::row_vector(row.clone()));
        let v = mha.value.forward(&mut g, m).unwrap();
        let expected = mha.output.forward(&mut g, v).unwrap();
        let expected = g.value(expected).clone();
        for q in [vec![0.0; 8], vec![5.0; 8], (0..8).map(|i| i as f64).collect()] {
            assert!(out_for(q).max_abs_diff(&expected) < 1e-14);
        }
    }
}
