use serde::Serialize;

use crate::error::{Error, Result};

/// Allowed deviation of a table's total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;

fn validate_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Validation(format!("{what} is empty")));
    }
    if let Some(v) = p.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Validation(format!("{what} has invalid entry {v}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Validation(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

/// Joint law of a finite representation (rows) and a finite treatment (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteJoint {
    rows: usize,
    cols: usize,
    /// Row-major `p[z * cols + t]`.
    p: Vec<f64>,
}

impl DiscreteJoint {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows * cols != p.len() || rows == 0 || cols == 0 {
            return Err(Error::Validation(format!(
                "joint table of {} entries does not fit {rows}x{cols}",
                p.len()
            )));
        }
        validate_distribution(&p, "joint table")?;
        Ok(Self { rows, cols, p })
    }

    /// Product law `p(z) pi(t)`.
    pub fn independent(p_z: &[f64], pi: &[f64]) -> Result<Self> {
        let p = p_z.iter().flat_map(|a| pi.iter().map(move |b| a * b)).collect();
        Self::new(p_z.len(), pi.len(), p)
    }

    /// Builds `p(z, t) = pi(t) p(z | t)` from per-arm conditionals.
    pub fn from_arms(pi: &[f64], arms: &[Vec<f64>]) -> Result<Self> {
        if arms.len() != pi.len() || arms.is_empty() {
            return Err(Error::Validation("one conditional per arm is required".into()));
        }
        let rows = arms[0].len();
        let mut p = vec![0.0; rows * pi.len()];
        for (t, arm) in arms.iter().enumerate() {
            if arm.len() != rows {
                return Err(Error::Validation("arm conditionals differ in support size".into()));
            }
            for (z, v) in arm.iter().enumerate() {
                p[z * pi.len() + t] = pi[t] * v;
            }
        }
        Self::new(rows, pi.len(), p)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, z: usize, t: usize) -> f64 {
        self.p[z * self.cols + t]
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// `p_Z`.
    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|z| (0..self.cols).map(|t| self.at(z, t)).sum()).collect()
    }

    /// `pi`.
    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.cols).map(|t| (0..self.rows).map(|z| self.at(z, t)).sum()).collect()
    }

    /// `p(. | t)`, or `None` for an arm without mass.
    pub fn arm(&self, t: usize) -> Option<Vec<f64>> {
        let mass: f64 = (0..self.rows).map(|z| self.at(z, t)).sum();
        (mass > 0.0).then(|| (0..self.rows).map(|z| self.at(z, t) / mass).collect())
    }

    /// The same law with the roles of rows and columns exchanged.
    pub fn transpose(&self) -> Self {
        let p = (0..self.cols)
            .flat_map(|t| (0..self.rows).map(move |z| (z, t)))
            .map(|(z, t)| self.at(z, t))
            .collect();
        Self { rows: self.cols, cols: self.rows, p }
    }
}

/// Per-arm loss profile `phi_t(z)` bounded in sup norm by `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossProfileTable {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    lambda: f64,
}

impl LossProfileTable {
    /// `values[z * cols + t] = phi_t(z)`.
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, lambda: f64) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Validation("profile table shape mismatch".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!("profile bound must be positive, got {lambda}")));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && v.abs() <= lambda)) {
            return Err(Error::Precondition(format!("profile entry {v} exceeds the bound {lambda}")));
        }
        Ok(Self { rows, cols, values, lambda })
    }

    pub fn at(&self, z: usize, t: usize) -> f64 {
        self.values[z * self.cols + t]
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

/// Conditional table of a stochastic encoder on finite spaces. Rows are
/// indexed by `x`, or by `(x, t)` as `x * |T| + t` when the channel is allowed
/// to see the treatment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSpec {
    inputs: usize,
    treatments: Option<usize>,
    outputs: usize,
    q: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(inputs: usize, outputs: usize, q: Vec<f64>) -> Result<Self> {
        Self::build(inputs, None, outputs, q)
    }

    pub fn with_treatment(inputs: usize, treatments: usize, outputs: usize, q: Vec<f64>) -> Result<Self> {
        Self::build(inputs, Some(treatments), outputs, q)
    }

    fn build(inputs: usize, treatments: Option<usize>, outputs: usize, q: Vec<f64>) -> Result<Self> {
        let n_rows = inputs * treatments.unwrap_or(1);
        if q.len() != n_rows * outputs || outputs == 0 || n_rows == 0 {
            return Err(Error::Validation("channel table shape mismatch".into()));
        }
        for (r, row) in q.chunks(outputs).enumerate() {
            validate_distribution(row, &format!("channel row {r}"))?;
        }
        Ok(Self { inputs, treatments, outputs, q })
    }

    pub fn identity(n: usize) -> Self {
        let q = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        Self { inputs: n, treatments: None, outputs: n, q }
    }

    pub fn constant(inputs: usize) -> Self {
        Self { inputs, treatments: None, outputs: 1, q: vec![1.0; inputs] }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// `q(z | x, t)`.
    pub fn prob(&self, x: usize, t: usize, z: usize) -> f64 {
        let row = match self.treatments {
            None => x,
            Some(k) => x * k + t,
        };
        self.q[row * self.outputs + z]
    }

    /// Whether `q(z | x, t)` is the same for every `t`.
    pub fn ignores_treatment(&self) -> bool {
        let Some(k) = self.treatments else { return true };
        (0..self.inputs).all(|x| (1..k).all(|t| (0..self.outputs).all(|z| self.prob(x, t, z) == self.prob(x, 0, z))))
    }
}

/// KL divergence, `Infinite` when `p` puts mass where `q` has none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum KlValue {
    Finite(f64),
    Infinite,
}

impl KlValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            KlValue::Finite(v) => Some(v),
            KlValue::Infinite => None,
        }
    }
}

fn validate_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Validation(format!("supports differ: {} vs {}", p.len(), q.len())));
    }
    validate_distribution(p, "p")?;
    validate_distribution(q, "q")
}

pub fn exact_tv(p: &[f64], q: &[f64]) -> Result<f64> {
    validate_pair(p, q)?;
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

pub fn exact_kl(p: &[f64], q: &[f64]) -> Result<KlValue> {
    validate_pair(p, q)?;
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(KlValue::Infinite);
        }
        kl += a * (a / b).ln();
    }
    Ok(KlValue::Finite(kl))
}

/// `I(Z; T)` in nats.
pub fn exact_info(joint: &DiscreteJoint) -> f64 {
    let pz = joint.row_marginal();
    let pi = joint.col_marginal();
    let mut info = 0.0;
    for (z, &a) in pz.iter().enumerate() {
        for (t, &b) in pi.iter().enumerate() {
            let p = joint.at(z, t);
            if p > 0.0 {
                info += p * (p / (a * b)).ln();
            }
        }
    }
    info
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|v| -v * v.ln()).sum()
}
