//! Tape-based reverse-mode differentiation over matrix-valued nodes.
//!
//! A [`Graph`] records every operation of one forward pass. Nodes hold
//! either an owned tensor or a reference to a parameter in the borrowed
//! [`ParameterStore`], so building a graph never copies weights.
//! [`Graph::backward`] walks the tape in reverse and returns gradients for
//! every parameter the scalar loss depends on.

use std::sync::Arc;

use crate::params::{Gradients, ParamId, ParameterStore};
use crate::tensor::{dot, matmul_into, matmul_t_into, t_matmul_into};
use crate::{NumericError, Result, Tensor};

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Value {
    Owned(Tensor),
    Param(ParamId),
}

enum Op {
    Input,
    Param(ParamId),
    Add(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Mask(Var, Vec<f64>),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Softmax(Var),
    LogSoftmax(Var),
    Gather(Var, Vec<usize>),
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    Row(Var, usize),
    NegDist(Var, Arc<Tensor>),
    WeightedSum(Var, Vec<f64>),
    Sum(Var),
    SumScalars(Vec<Var>),
}

struct Node {
    value: Value,
    op: Op,
}

/// One forward pass worth of recorded operations.
pub struct Graph<'p> {
    params: &'p ParameterStore,
    nodes: Vec<Node>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParameterStore) -> Self {
        Self {
            params,
            nodes: Vec::with_capacity(512),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match &self.nodes[v.0].value {
            Value::Owned(t) => t,
            Value::Param(id) => self.params.value(*id),
        }
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node {
            value: Value::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    /// Constant input; receives no gradient.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Input)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.nodes.push(Node {
            value: Value::Param(id),
            op: Op::Param(id),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.len() != tb.len() {
            return Err(shape_err("add", ta, tb));
        }
        let mut out = ta.clone();
        out.add_assign(tb);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// `x + b` with `b` broadcast over the rows of `x`.
    pub fn add_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(b));
        if tx.cols() != tb.len() {
            return Err(shape_err("add_bias", tx, tb));
        }
        let mut out = tx.clone();
        let bias = tb.data().to_vec();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(&bias) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddBias(x, b)))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let out = self.value(x).map(|v| v * s);
        self.push(out, Op::Scale(x, s))
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask(&mut self, x: Var, mask: Vec<f64>) -> Result<Var> {
        let tx = self.value(x);
        if tx.len() != mask.len() {
            return Err(NumericError::Shape(format!(
                "mask of {} over {:?}",
                mask.len(),
                tx.shape()
            )));
        }
        let mut out = tx.clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        Ok(self.push(out, Op::Mask(x, mask)))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    /// `a · bᵀ`
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul_t(self.value(b))?;
        Ok(self.push(out, Op::MatMulT(a, b)))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| {
            let u = GELU_C * (v + 0.044715 * v * v * v);
            0.5 * v * (1.0 + u.tanh())
        });
        self.push(out, Op::Gelu(x))
    }

    /// Normalizes each row to zero mean and unit variance, then applies
    /// `gain` and `bias` (both of length `cols`).
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        if eps <= 0.0 {
            return Err(NumericError::Domain("layer_norm eps must be positive".into()));
        }
        let tx = self.value(x);
        let (tg, tb) = (self.value(gain), self.value(bias));
        let (rows, cols) = (tx.rows(), tx.cols());
        if tg.len() != cols || tb.len() != cols {
            return Err(shape_err("layer_norm", tx, tg));
        }
        let mut xhat = vec![0.0; rows * cols];
        let mut inv_std = vec![0.0; rows];
        let mut out = Tensor::zeros(tx.shape());
        for r in 0..rows {
            let row = tx.row(r);
            let mean = row.iter().sum::<f64>() / cols as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[r] = is;
            let o = out.row_mut(r);
            for c in 0..cols {
                let h = (row[c] - mean) * is;
                xhat[r * cols + c] = h;
                o[c] = h * tg.data()[c] + tb.data()[c];
            }
        }
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
        ))
    }

    /// Row-wise softmax.
    pub fn softmax(&mut self, x: Var) -> Var {
        let out = softmax_rows(self.value(x));
        self.push(out, Op::Softmax(x))
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let tx = self.value(x);
        let mut out = tx.clone();
        for r in 0..out.rows() {
            let row = out.row_mut(r);
            let lse = log_sum_exp(row);
            for v in row.iter_mut() {
                *v -= lse;
            }
        }
        self.push(out, Op::LogSoftmax(x))
    }

    /// Selects rows of `table` (embedding lookup).
    pub fn gather(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let t = self.value(table);
        let cols = t.cols();
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &i in ids {
            if i >= t.rows() {
                return Err(NumericError::Shape(format!(
                    "gather index {i} out of {} rows",
                    t.rows()
                )));
            }
            data.extend_from_slice(t.row(i));
        }
        let out = Tensor::matrix(ids.len(), cols, data)?;
        Ok(self.push(out, Op::Gather(table, ids.to_vec())))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = self.value(x);
        if start + len > tx.cols() {
            return Err(NumericError::Shape(format!(
                "slice_cols {start}+{len} of {:?}",
                tx.shape()
            )));
        }
        let rows = tx.rows();
        let mut data = Vec::with_capacity(rows * len);
        for r in 0..rows {
            data.extend_from_slice(&tx.row(r)[start..start + len]);
        }
        let out = Tensor::matrix(rows, len, data)?;
        Ok(self.push(out, Op::SliceCols(x, start)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.value(parts[0]).rows();
        if parts.iter().any(|p| self.value(*p).rows() != rows) {
            return Err(NumericError::Shape("concat_cols row mismatch".into()));
        }
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for p in parts {
                data.extend_from_slice(self.value(*p).row(r));
            }
        }
        let out = Tensor::matrix(rows, cols, data)?;
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn row(&mut self, x: Var, i: usize) -> Result<Var> {
        let tx = self.value(x);
        if i >= tx.rows() {
            return Err(NumericError::Shape(format!("row {i} of {:?}", tx.shape())));
        }
        let out = Tensor::row_vector(tx.row(i).to_vec());
        Ok(self.push(out, Op::Row(x, i)))
    }

    /// Negative Euclidean distance from the single row `g` to every row of
    /// the constant matrix `candidates`, as a `1×K` row.
    pub fn neg_distances(&mut self, g: Var, candidates: Arc<Tensor>) -> Result<Var> {
        let tg = self.value(g);
        if tg.len() != candidates.cols() {
            return Err(shape_err("neg_distances", tg, &candidates));
        }
        let out = Tensor::row_vector(neg_distances(tg.data(), &candidates));
        Ok(self.push(out, Op::NegDist(g, candidates)))
    }

    /// Scalar `Σ weights_i · x_i`.
    pub fn weighted_sum(&mut self, x: Var, weights: Vec<f64>) -> Result<Var> {
        let tx = self.value(x);
        if tx.len() != weights.len() {
            return Err(NumericError::Shape(format!(
                "weighted_sum of {} over {:?}",
                weights.len(),
                tx.shape()
            )));
        }
        let s = dot(tx.data(), &weights);
        Ok(self.push(Tensor::scalar(s), Op::WeightedSum(x, weights)))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(x))
    }

    pub fn sum_scalars(&mut self, xs: &[Var]) -> Result<Var> {
        let mut s = 0.0;
        for x in xs {
            let t = self.value(*x);
            if t.len() != 1 {
                return Err(NumericError::Shape("sum_scalars over non-scalar".into()));
            }
            s += t.item();
        }
        Ok(self.push(Tensor::scalar(s), Op::SumScalars(xs.to_vec())))
    }

    /// Reverse pass from a scalar node. Returns gradients for every
    /// parameter reachable from `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(NumericError::NonScalarLoss(self.value(loss).shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));
        let mut out = Gradients::with_capacity(self.params.len());

        for idx in (0..=loss.0).rev() {
            let Some(dy) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => out.add(*id, dy),
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, || dy.clone(), self);
                    accumulate(&mut grads, *b, || dy, self);
                }
                Op::AddBias(x, b) => {
                    let cols = dy.cols();
                    let mut db = vec![0.0; cols];
                    for r in 0..dy.rows() {
                        for (d, v) in db.iter_mut().zip(dy.row(r)) {
                            *d += v;
                        }
                    }
                    let bshape = self.value(*b).shape().to_vec();
                    accumulate(&mut grads, *b, || Tensor::new(bshape, db).unwrap(), self);
                    accumulate(&mut grads, *x, || dy, self);
                }
                Op::Scale(x, s) => {
                    let s = *s;
                    accumulate(&mut grads, *x, || dy.map(|v| v * s), self);
                }
                Op::Mask(x, m) => {
                    let mut d = dy;
                    for (v, mv) in d.data_mut().iter_mut().zip(m) {
                        *v *= mv;
                    }
                    accumulate(&mut grads, *x, || d, self);
                }
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    if self.needs_grad(*a) {
                        // dA = dY · Bᵀ
                        let mut da = vec![0.0; m * k];
                        matmul_t_into(dy.data(), tb.data(), &mut da, m, n, k);
                        let shape = ta.shape().to_vec();
                        accumulate(&mut grads, *a, || Tensor::new(shape, da).unwrap(), self);
                    }
                    if self.needs_grad(*b) {
                        // dB = Aᵀ · dY
                        let mut db = vec![0.0; k * n];
                        t_matmul_into(ta.data(), dy.data(), &mut db, m, k, n);
                        let shape = tb.shape().to_vec();
                        accumulate(&mut grads, *b, || Tensor::new(shape, db).unwrap(), self);
                    }
                }
                Op::MatMulT(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                    if self.needs_grad(*a) {
                        // dA = dY · B
                        let mut da = vec![0.0; m * k];
                        matmul_into(dy.data(), tb.data(), &mut da, m, n, k);
                        let shape = ta.shape().to_vec();
                        accumulate(&mut grads, *a, || Tensor::new(shape, da).unwrap(), self);
                    }
                    if self.needs_grad(*b) {
                        // dB = dYᵀ · A
                        let mut db = vec![0.0; n * k];
                        t_matmul_into(dy.data(), ta.data(), &mut db, m, n, k);
                        let shape = tb.shape().to_vec();
                        accumulate(&mut grads, *b, || Tensor::new(shape, db).unwrap(), self);
                    }
                }
                Op::Gelu(x) => {
                    let tx = self.value(*x);
                    let mut d = dy;
                    for (dv, &v) in d.data_mut().iter_mut().zip(tx.data()) {
                        let u = GELU_C * (v + 0.044715 * v * v * v);
                        let th = u.tanh();
                        let du = GELU_C * (1.0 + 3.0 * 0.044715 * v * v);
                        *dv *= 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du;
                    }
                    accumulate(&mut grads, *x, || d, self);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    xhat,
                    inv_std,
                } => {
                    let tg = self.value(*gain);
                    let (rows, cols) = (dy.rows(), dy.cols());
                    let mut dgain = vec![0.0; cols];
                    let mut dbias = vec![0.0; cols];
                    let mut dx = vec![0.0; rows * cols];
                    let mut dxhat = vec![0.0; cols];
                    for r in 0..rows {
                        let dyr = dy.row(r);
                        let xh = &xhat[r * cols..(r + 1) * cols];
                        for c in 0..cols {
                            dgain[c] += dyr[c] * xh[c];
                            dbias[c] += dyr[c];
                            dxhat[c] = dyr[c] * tg.data()[c];
                        }
                        let mean_d = dxhat.iter().sum::<f64>() / cols as f64;
                        let mean_dx = dot(&dxhat, xh) / cols as f64;
                        for c in 0..cols {
                            dx[r * cols + c] = inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
                        }
                    }
                    let gshape = tg.shape().to_vec();
                    let bshape = self.value(*bias).shape().to_vec();
                    let xshape = dy.shape().to_vec();
                    accumulate(&mut grads, *gain, || Tensor::new(gshape, dgain).unwrap(), self);
                    accumulate(&mut grads, *bias, || Tensor::new(bshape, dbias).unwrap(), self);
                    accumulate(&mut grads, *x, || Tensor::new(xshape, dx).unwrap(), self);
                }
                Op::Softmax(x) => {
                    let y = self.value(Var(idx));
                    let mut d = dy;
                    for r in 0..y.rows() {
                        let yr = y.row(r);
                        let s = dot(d.row(r), yr);
                        for (dv, &yv) in d.row_mut(r).iter_mut().zip(yr) {
                            *dv = yv * (*dv - s);
                        }
                    }
                    accumulate(&mut grads, *x, || d, self);
                }
                Op::LogSoftmax(x) => {
                    let y = self.value(Var(idx));
                    let mut d = dy;
                    for r in 0..y.rows() {
                        let s: f64 = d.row(r).iter().sum();
                        let yr = y.row(r);
                        for (dv, &lp) in d.row_mut(r).iter_mut().zip(yr) {
                            *dv -= lp.exp() * s;
                        }
                    }
                    accumulate(&mut grads, *x, || d, self);
                }
                Op::Gather(table, ids) => {
                    if self.needs_grad(*table) {
                        let tt = self.value(*table);
                        let cols = tt.cols();
                        let mut dt = Tensor::zeros(tt.shape());
                        for (r, &i) in ids.iter().enumerate() {
                            for (d, v) in dt.row_mut(i).iter_mut().zip(dy.row(r)) {
                                *d += v;
                            }
                        }
                        debug_assert_eq!(dt.cols(), cols);
                        accumulate(&mut grads, *table, || dt, self);
                    }
                }
                Op::SliceCols(x, start) => {
                    let tx = self.value(*x);
                    let mut dx = Tensor::zeros(tx.shape());
                    let len = dy.cols();
                    for r in 0..dy.rows() {
                        dx.row_mut(r)[*start..*start + len].copy_from_slice(dy.row(r));
                    }
                    accumulate(&mut grads, *x, || dx, self);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let tp = self.value(*p);
                        let w = tp.cols();
                        let mut dp = Tensor::zeros(tp.shape());
                        for r in 0..dy.rows() {
                            dp.row_mut(r).copy_from_slice(&dy.row(r)[offset..offset + w]);
                        }
                        offset += w;
                        accumulate(&mut grads, *p, || dp, self);
                    }
                }
                Op::Row(x, i) => {
                    let mut dx = Tensor::zeros(self.value(*x).shape());
                    dx.row_mut(*i).copy_from_slice(dy.data());
                    accumulate(&mut grads, *x, || dx, self);
                }
                Op::NegDist(g, cands) => {
                    let tg = self.value(*g);
                    let y = self.value(Var(idx));
                    let mut dg = vec![0.0; tg.len()];
                    for k in 0..cands.rows() {
                        let dist = -y.data()[k];
                        if dist < 1e-300 {
                            continue;
                        }
                        // d(-‖g-c‖)/dg = -(g-c)/‖g-c‖
                        let w = -dy.data()[k] / dist;
                        for ((d, &gv), &cv) in dg.iter_mut().zip(tg.data()).zip(cands.row(k)) {
                            *d += w * (gv - cv);
                        }
                    }
                    let shape = tg.shape().to_vec();
                    accumulate(&mut grads, *g, || Tensor::new(shape, dg).unwrap(), self);
                }
                Op::WeightedSum(x, w) => {
                    let s = dy.item();
                    let shape = self.value(*x).shape().to_vec();
                    let d = w.iter().map(|v| v * s).collect();
                    accumulate(&mut grads, *x, || Tensor::new(shape, d).unwrap(), self);
                }
                Op::Sum(x) => {
                    let s = dy.item();
                    let shape = self.value(*x).shape().to_vec();
                    accumulate(&mut grads, *x, || Tensor::filled(&shape, s), self);
                }
                Op::SumScalars(xs) => {
                    for x in xs {
                        accumulate(&mut grads, *x, || dy.clone(), self);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Whether any parameter can be reached backwards from `v`.
    fn needs_grad(&self, v: Var) -> bool {
        !matches!(self.nodes[v.0].op, Op::Input)
    }
}

fn accumulate(
    grads: &mut [Option<Tensor>],
    target: Var,
    make: impl FnOnce() -> Tensor,
    g: &Graph<'_>,
) {
    if !g.needs_grad(target) {
        return;
    }
    match &mut grads[target.0] {
        Some(acc) => acc.add_assign(&make()),
        slot @ None => *slot = Some(make()),
    }
}

fn shape_err(op: &str, a: &Tensor, b: &Tensor) -> NumericError {
    NumericError::Shape(format!("{op}: {:?} vs {:?}", a.shape(), b.shape()))
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Row-wise softmax of a plain tensor.
pub fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// `-‖g - c_k‖₂` for every row `c_k`.
pub fn neg_distances(g: &[f64], candidates: &Tensor) -> Vec<f64> {
    (0..candidates.rows())
        .map(|k| {
            -candidates
                .row(k)
                .iter()
                .zip(g)
                .map(|(c, x)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_parameter_has_unit_gradient() {
        let mut store = ParameterStore::new();
        let p = store.add("p", Tensor::zeros(&[2, 3]), true);
        let mut g = Graph::new(&store);
        let v = g.param(p);
        let loss = g.sum(v);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.get(p).unwrap().data(), &[1.0; 6]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let store = ParameterStore::new();
        let mut g = Graph::new(&store);
        let x = g.input(Tensor::zeros(&[2, 2]));
        assert!(matches!(g.backward(x), Err(NumericError::NonScalarLoss(_))));
    }

    #[test]
    fn unreachable_params_get_no_gradient() {
        let mut store = ParameterStore::new();
        let a = store.add("a", Tensor::scalar(1.0), true);
        let b = store.add("b", Tensor::scalar(2.0), true);
        let mut g = Graph::new(&store);
        let va = g.param(a);
        let _vb = g.param(b);
        let loss = g.sum(va);
        let grads = g.backward(loss).unwrap();
        assert!(grads.get(a).is_some());
        assert!(grads.get(b).is_none());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = softmax_rows(&Tensor::row_vector(vec![0.0; 3]));
        for v in p.data() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_handles_large_logits() {
        let p = softmax_rows(&Tensor::row_vector(vec![1000.0, 0.0, -1000.0]));
        assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.data().iter().all(|v| v.is_finite()));
    }
}
