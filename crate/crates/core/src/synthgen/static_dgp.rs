use serde::{Deserialize, Serialize};

use crate::autodiff::{sigmoid, Tensor};
use crate::rng::{RngStream, Stream};

/// Parameters of the static simulator.
///
/// ```text
/// x   ~ N(0, I_dx)
/// t_j ~ Bernoulli(sigmoid(offset + c * w_j . x))          (|w_j| = 1)
/// y   = w_lin . x + sin(w_nl . x) + t . (beta + Gamma x) / sqrt(dt) + eps,  eps ~ N(0, sigma^2)
/// t_alt_j ~ Bernoulli(sigmoid(offset - c * w_j . x))       (flipped assignment signs)
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDgpSpec {
    pub n: usize,
    pub dx: usize,
    pub dt: usize,
    pub confounding: f64,
    pub noise_sd: f64,
    pub seed: u64,
    /// Added to every assignment logit; negative values make treatments sparse.
    pub assign_offset: f64,
    /// Fraction of treatment components with a nonzero effect.
    pub active_fraction: f64,
}

impl Default for StaticDgpSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            dx: 10,
            dt: 2,
            confounding: 1.0,
            noise_sd: 0.5,
            seed: 0,
            assign_offset: 0.0,
            active_fraction: 1.0,
        }
    }
}

impl StaticDgpSpec {
    /// Shape of the NHANES medication panel: 14 covariates, 82 sparse binary
    /// treatments of which 10% act on the outcome.
    pub fn nhanes_like(seed: u64) -> Self {
        Self {
            dx: 14,
            dt: 82,
            seed,
            assign_offset: -5.0,
            active_fraction: 0.1,
            ..Self::default()
        }
    }
}

/// Frozen simulator parameters; everything is reproducible from `spec.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDgp {
    pub spec: StaticDgpSpec,
    pub w_assign: Vec<Vec<f64>>,
    pub w_lin: Vec<f64>,
    pub w_nl: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
}

/// Samples with both arms' noiseless contrast.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticDataset {
    /// `[n, dx]`
    pub x: Tensor,
    /// `[n, dt]`, entries in {0, 1}
    pub t: Tensor,
    pub y: Vec<f64>,
    /// Comparison arm `[n, dt]`.
    pub t_alt: Tensor,
    /// `mu(x, t) - mu(x, t_alt)`.
    pub ite_true: Vec<f64>,
}

impl StaticDgp {
    pub fn new(spec: StaticDgpSpec) -> Self {
        let mut rng = RngStream::new(spec.seed, Stream::DgpParams);
        let (dx, dt) = (spec.dx, spec.dt);
        let w_assign = (0..dt)
            .map(|_| {
                let v = rng.normals(dx);
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|a| a / norm).collect()
            })
            .collect();
        let lin_sd = (1.0 / dx as f64).sqrt();
        let w_lin = rng.normals(dx).into_iter().map(|v| v * lin_sd).collect();
        let w_nl = rng.normals(dx).into_iter().map(|v| 2.0 * v * lin_sd).collect();
        let mut beta = rng.normals(dt);
        let gamma_sd = 0.5 * lin_sd;
        let mut gamma: Vec<Vec<f64>> = (0..dt)
            .map(|_| rng.normals(dx).into_iter().map(|v| v * gamma_sd).collect())
            .collect();
        if spec.active_fraction < 1.0 {
            let active = ((spec.active_fraction * dt as f64).round() as usize).clamp(1, dt);
            let mut order: Vec<usize> = (0..dt).collect();
            rng.shuffle(&mut order);
            for &j in &order[active..] {
                beta[j] = 0.0;
                gamma[j].fill(0.0);
            }
        }
        Self {
            spec,
            w_assign,
            w_lin,
            w_nl,
            beta,
            gamma,
        }
    }

    /// Per-component effect `(beta_j + Gamma_j x) / sqrt(dt)`.
    pub fn effect_vector(&self, x: &[f64]) -> Vec<f64> {
        let scale = (self.spec.dt as f64).sqrt();
        self.beta
            .iter()
            .zip(&self.gamma)
            .map(|(b, g)| (b + dot(g, x)) / scale)
            .collect()
    }

    pub fn baseline(&self, x: &[f64]) -> f64 {
        dot(&self.w_lin, x) + dot(&self.w_nl, x).sin()
    }

    /// Noiseless outcome `mu(x, t)`.
    pub fn mu(&self, x: &[f64], t: &[f64]) -> f64 {
        self.baseline(x) + dot(&self.effect_vector(x), t)
    }

    pub fn propensity(&self, x: &[f64]) -> Vec<f64> {
        self.assignment(x, 1.0)
    }

    fn assignment(&self, x: &[f64], sign: f64) -> Vec<f64> {
        self.w_assign
            .iter()
            .map(|w| sigmoid(self.spec.assign_offset + sign * self.spec.confounding * dot(w, x)))
            .collect()
    }

    /// True conditional uplift of "any treatment component active" versus
    /// "none active": `sum_j P(t_j = 1 | x, any) * effect_j(x)`.
    pub fn uplift_any(&self, x: &[f64]) -> f64 {
        let p = self.propensity(x);
        let p_none: f64 = p.iter().map(|pj| 1.0 - pj).product();
        let p_any = (1.0 - p_none).max(1e-300);
        self.effect_vector(x)
            .iter()
            .zip(&p)
            .map(|(e, pj)| e * pj / p_any)
            .sum()
    }

    /// Draws `n` samples from the data stream of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> StaticDataset {
        let (dx, dt) = (self.spec.dx, self.spec.dt);
        let mut rng = RngStream::new(seed, Stream::Data);
        let mut xs = Vec::with_capacity(n * dx);
        let mut ts = Vec::with_capacity(n * dt);
        let mut alts = Vec::with_capacity(n * dt);
        let mut y = Vec::with_capacity(n);
        let mut ite = Vec::with_capacity(n);
        for _ in 0..n {
            let x = rng.normals(dx);
            let t: Vec<f64> = self
                .assignment(&x, 1.0)
                .into_iter()
                .map(|p| f64::from(u8::from(rng.bernoulli(p))))
                .collect();
            let t_alt: Vec<f64> = self
                .assignment(&x, -1.0)
                .into_iter()
                .map(|p| f64::from(u8::from(rng.bernoulli(p))))
                .collect();
            let mu = self.mu(&x, &t);
            y.push(mu + self.spec.noise_sd * rng.normal());
            ite.push(mu - self.mu(&x, &t_alt));
            xs.extend(x);
            ts.extend(t);
            alts.extend(t_alt);
        }
        StaticDataset {
            x: Tensor::matrix(n, dx, xs),
            t: Tensor::matrix(n, dt, ts),
            y,
            t_alt: Tensor::matrix(n, dt, alts),
            ite_true: ite,
        }
    }
}

/// Frozen simulator plus `spec.n` samples from the same seed.
pub fn gen_static(spec: &StaticDgpSpec) -> (StaticDgp, StaticDataset) {
    let dgp = StaticDgp::new(spec.clone());
    let data = dgp.sample(spec.n, spec.seed);
    (dgp, data)
}

pub fn gen_nhanes_surrogate(seed: u64) -> (StaticDgp, StaticDataset) {
    gen_static(&StaticDgpSpec::nhanes_like(seed))
}

impl StaticDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dx(&self) -> usize {
        self.x.cols()
    }

    pub fn dt(&self) -> usize {
        self.t.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.gather_rows(idx),
            t: self.t.gather_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            t_alt: self.t_alt.gather_rows(idx),
            ite_true: idx.iter().map(|&i| self.ite_true[i]).collect(),
        }
    }

    /// Leading `train_fraction` of rows for training, the rest held out.
    pub fn split(&self, train_fraction: f64) -> (Self, Self) {
        let n = self.len();
        let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let train: Vec<usize> = (0..cut).collect();
        let test: Vec<usize> = (cut..n).collect();
        (self.subset(&train), self.subset(&test))
    }

    /// `[n, 1]` outcome tensor.
    pub fn y_tensor(&self) -> Tensor {
        Tensor::matrix(self.len(), 1, self.y.clone())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, confounding: f64) -> StaticDgpSpec {
        StaticDgpSpec {
            n,
            confounding,
            seed: 21,
            ..StaticDgpSpec::default()
        }
    }

    #[test]
    fn no_confounding_means_independent_treatment() {
        let (_, data) = gen_static(&spec(10_000, 0.0));
        let n = data.len() as f64;
        for j in 0..data.dt() {
            for k in 0..data.dx() {
                let t: Vec<f64> = (0..data.len()).map(|i| data.t.at(i, j)).collect();
                let x: Vec<f64> = (0..data.len()).map(|i| data.x.at(i, k)).collect();
                let (mt, mx) = (t.iter().sum::<f64>() / n, x.iter().sum::<f64>() / n);
                let cov: f64 = t.iter().zip(&x).map(|(a, b)| (a - mt) * (b - mx)).sum();
                let vt: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
                let vx: f64 = x.iter().map(|b| (b - mx).powi(2)).sum();
                assert!((cov / (vt * vx).sqrt()).abs() < 0.05);
            }
        }
    }

    #[test]
    fn ite_is_noiseless_mean_difference() {
        let (dgp, data) = gen_static(&spec(200, 1.0));
        for i in 0..data.len() {
            let expected = dgp.mu(data.x.row(i), data.t.row(i)) - dgp.mu(data.x.row(i), data.t_alt.row(i));
            assert_eq!(data.ite_true[i], expected);
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let a = gen_static(&spec(300, 1.0));
        let b = gen_static(&spec(300, 1.0));
        assert_eq!(a, b);
    }

    #[test]
    fn nhanes_shape_and_binary_treatments() {
        let (dgp, data) = gen_nhanes_surrogate(4);
        assert_eq!(data.x.shape(), &[2000, 14]);
        assert_eq!(data.t.shape(), &[2000, 82]);
        assert!(data.t.data().iter().all(|&v| v == 0.0 || v == 1.0));
        let active = dgp.beta.iter().filter(|b| **b != 0.0).count();
        assert_eq!(active, 8);
    }

    #[test]
    fn uplift_any_single_component_is_effect() {
        let dgp = StaticDgp::new(StaticDgpSpec {
            dt: 1,
            ..spec(1, 1.0)
        });
        let x = vec![0.3; 10];
        assert!((dgp.uplift_any(&x) - dgp.effect_vector(&x)[0]).abs() < 1e-12);
    }
}
