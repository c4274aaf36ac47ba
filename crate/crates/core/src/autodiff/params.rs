use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(usize);

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    value: Tensor,
    grad: Option<Tensor>,
    m: Tensor,
    v: Tensor,
    steps: u64,
}

/// Named parameters with their gradients and Adam moments.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let shape = value.shape().to_vec();
        self.entries.push(Entry {
            name: name.into(),
            m: Tensor::zeros(&shape),
            v: Tensor::zeros(&shape),
            value,
            grad: None,
            steps: 0,
        });
        ParamId(self.entries.len() - 1)
    }

    /// Glorot-uniform weight matrix `[fan_in, fan_out]`.
    pub fn add_weight(
        &mut self,
        name: impl Into<String>,
        fan_in: usize,
        fan_out: usize,
        rng: &mut RngStream,
    ) -> ParamId {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| rng.uniform_range(-limit, limit))
            .collect();
        self.add(name, Tensor::matrix(fan_in, fan_out, data))
    }

    pub fn add_bias(&mut self, name: impl Into<String>, n: usize) -> ParamId {
        self.add(name, Tensor::zeros(&[n]))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.entries.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> Option<&Tensor> {
        self.entries[id.0].grad.as_ref()
    }

    pub fn set_grad(&mut self, id: ParamId, grad: Tensor) -> Result<()> {
        let e = &mut self.entries[id.0];
        if grad.shape() != e.value.shape() {
            return Err(Error::config(format!(
                "gradient shape {:?} for parameter {} of shape {:?}",
                grad.shape(),
                e.name,
                e.value.shape()
            )));
        }
        e.grad = Some(grad);
        Ok(())
    }

    pub fn steps(&self, id: ParamId) -> u64 {
        self.entries[id.0].steps
    }

    pub(crate) fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad = Some(Tensor::zeros(e.value.shape()));
        }
    }

    pub(crate) fn accumulate_grad(&mut self, id: ParamId, g: &Tensor) {
        let e = &mut self.entries[id.0];
        match &mut e.grad {
            Some(existing) => existing.add_assign(g),
            None => e.grad = Some(g.clone()),
        }
    }

    pub fn grads_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.grad.as_ref().is_none_or(Tensor::all_finite))
    }

    pub fn values_finite(&self) -> bool {
        self.entries.iter().all(|e| e.value.all_finite())
    }

    /// One bias-corrected Adam update on every parameter. Gradients are consumed.
    pub fn adam_step(&mut self, cfg: &AdamConfig) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| e.grad.is_none()) {
            return Err(Error::usage(format!(
                "adam step without gradient for parameter {}",
                e.name
            )));
        }
        for e in &mut self.entries {
            let g = e.grad.take().expect("checked above");
            e.steps += 1;
            let bc1 = 1.0 - cfg.beta1.powi(e.steps as i32);
            let bc2 = 1.0 - cfg.beta2.powi(e.steps as i32);
            let (m, v, p) = (e.m.data_mut(), e.v.data_mut(), e.value.data_mut());
            for i in 0..p.len() {
                let gi = g.data()[i];
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        }
        Ok(())
    }

    /// Flat text dump: one `name rows cols` header line followed by the values.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let shape: Vec<String> = e.value.shape().iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{} {}", e.name, shape.join(" "));
            let vals: Vec<String> = e.value.data().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{}", vals.join(" "));
        }
        out
    }

    /// Inverse of [`ParamStore::dump`]; Adam state starts fresh.
    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut store = Self::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        while let Some(header) = lines.next() {
            let mut parts = header.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| Error::usage("empty parameter header"))?;
            let shape = parts
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::usage(format!("bad shape for {name}: {e}")))?;
            let values = lines
                .next()
                .ok_or_else(|| Error::usage(format!("missing values for {name}")))?
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::usage(format!("bad value for {name}: {e}")))?;
            store.add(name, Tensor::new(shape, values)?);
        }
        Ok(store)
    }
}
