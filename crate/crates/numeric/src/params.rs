use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{NumericError, Result, Tensor};

/// Index of a parameter inside its [`ParameterStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    /// First-moment accumulator.
    pub m: Tensor,
    /// Second-moment accumulator.
    pub v: Tensor,
    pub steps: u64,
    /// Whether decoupled weight decay applies (off for biases and norm gains).
    pub decay: bool,
}

/// Named trainable tensors plus their gradients and AdamW state.
#[derive(Debug, Clone, Default)]
pub struct ParameterStore {
    params: Vec<Parameter>,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor, decay: bool) -> ParamId {
        let shape = value.shape().to_vec();
        self.params.push(Parameter {
            name: name.into(),
            grad: Tensor::zeros(&shape),
            m: Tensor::zeros(&shape),
            v: Tensor::zeros(&shape),
            value,
            steps: 0,
            decay,
        });
        ParamId(self.params.len() - 1)
    }

    /// Weight matrix with N(0, std²) entries.
    pub fn add_normal<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        std: f64,
        rng: &mut R,
    ) -> ParamId {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect();
        let t = Tensor::new(shape.to_vec(), data).expect("shape product matches");
        self.add(name, t, true)
    }

    pub fn add_const(&mut self, name: impl Into<String>, shape: &[usize], value: f64) -> ParamId {
        self.add(name, Tensor::filled(shape, value), false)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad.data_mut().fill(0.0);
        }
    }

    /// Adds `scale * grads` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients, scale: f64) {
        for (id, g) in grads.iter() {
            let dst = self.params[id.0].grad.data_mut();
            for (d, s) in dst.iter_mut().zip(g.data()) {
                *d += scale * s;
            }
        }
    }

    /// Overwrites values of parameters present in `other` by name.
    pub fn load_values(&mut self, values: &[(String, Tensor)]) -> Result<()> {
        for (name, t) in values {
            let id = self
                .find(name)
                .ok_or_else(|| NumericError::Checkpoint(format!("unknown parameter {name}")))?;
            let p = &mut self.params[id.0];
            if !p.value.same_shape(t) {
                return Err(NumericError::Checkpoint(format!(
                    "shape mismatch for {name}: {:?} vs {:?}",
                    p.value.shape(),
                    t.shape()
                )));
            }
            p.value = t.clone();
        }
        Ok(())
    }

    /// Parameter values in store order.
    pub fn snapshot(&self) -> Vec<(String, Tensor)> {
        self.params
            .iter()
            .map(|p| (p.name.clone(), p.value.clone()))
            .collect()
    }
}

/// Sparse gradient map produced by one backward pass.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    entries: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            entries: vec![None; n],
        }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.entries.get(id.0).and_then(Option::as_ref)
    }

    pub(crate) fn add(&mut self, id: ParamId, g: Tensor) {
        if self.entries.len() <= id.0 {
            self.entries.resize(id.0 + 1, None);
        }
        match &mut self.entries[id.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Tensor)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_ref().map(|g| (ParamId(i), g)))
    }

    /// Elementwise sum, in a fixed order so reductions are reproducible.
    pub fn merge(&mut self, other: Gradients) {
        for (i, g) in other.entries.into_iter().enumerate() {
            if let Some(g) = g {
                self.add(ParamId(i), g);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.entries.iter_mut().flatten() {
            g.scale_assign(s);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Linear warmup to `peak_lr`, then linear decay to zero at `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarmupSchedule {
    pub peak_lr: f64,
    pub warmup_proportion: f64,
    pub total_steps: u64,
}

impl WarmupSchedule {
    pub fn warmup_steps(&self) -> u64 {
        (self.warmup_proportion * self.total_steps as f64).round() as u64
    }

    /// Learning rate after `step` completed updates.
    pub fn lr_at(&self, step: u64) -> f64 {
        let warm = self.warmup_steps();
        if step < warm {
            return self.peak_lr * step as f64 / warm as f64;
        }
        if self.total_steps <= warm {
            return self.peak_lr;
        }
        let remaining = self.total_steps.saturating_sub(step) as f64;
        self.peak_lr * (remaining / (self.total_steps - warm) as f64).max(0.0)
    }
}

/// One AdamW update over every parameter in the store using its stored gradient.
pub fn adamw_step(store: &mut ParameterStore, lr: f64, cfg: &AdamWConfig) {
    for p in &mut store.params {
        p.steps += 1;
        let t = p.steps as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let decay = if p.decay { cfg.weight_decay } else { 0.0 };
        let values = p.value.data_mut();
        let grads = p.grad.data();
        let m = p.m.data_mut();
        let v = p.v.data_mut();
        for i in 0..values.len() {
            let g = grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            values[i] -= lr * (mhat / (vhat.sqrt() + cfg.eps) + decay * values[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_peaks_at_end_of_warmup() {
        let s = WarmupSchedule {
            peak_lr: 3e-4,
            warmup_proportion: 0.1,
            total_steps: 1000,
        };
        assert_eq!(s.lr_at(0), 0.0);
        assert_eq!(s.lr_at(100), 3e-4);
        assert!((s.lr_at(50) - 1.5e-4).abs() < 1e-18);
        assert!((s.lr_at(550) - 1.5e-4).abs() < 1e-15);
        assert_eq!(s.lr_at(1000), 0.0);
        assert_eq!(s.lr_at(2000), 0.0);
    }

    #[test]
    fn adamw_first_step_moves_by_lr() {
        let mut store = ParameterStore::new();
        let id = store.add("w", Tensor::row_vector(vec![1.0, -2.0]), false);
        store.get_mut(id).grad = Tensor::row_vector(vec![0.5, -3.0]);
        adamw_step(&mut store, 0.1, &AdamWConfig::default());
        // Bias-corrected first step is lr * sign(g) up to eps.
        let v = store.value(id).data();
        assert!((v[0] - 0.9).abs() < 1e-6);
        assert!((v[1] + 1.9).abs() < 1e-6);
        assert_eq!(store.get(id).steps, 1);
    }

    #[test]
    fn weight_decay_is_decoupled() {
        let mut store = ParameterStore::new();
        let id = store.add("w", Tensor::row_vector(vec![2.0]), true);
        let cfg = AdamWConfig {
            weight_decay: 0.5,
            ..AdamWConfig::default()
        };
        adamw_step(&mut store, 0.1, &cfg);
        // Zero gradient: only the decay term acts.
        assert!((store.value(id).item() - (2.0 - 0.1 * 0.5 * 2.0)).abs() < 1e-12);
    }
}
