use serde::{Deserialize, Serialize};

use super::static_dgp::dot;
use crate::autodiff::{sigmoid, Tensor};
use crate::rng::{RngStream, Stream};

/// Parameters of the sequential simulator.
///
/// ```text
/// v ~ N(0, I_dv),  x_1 ~ N(0, I_dx)
/// a_{t,j}  ~ Bernoulli(sigmoid(c * (U_j . x_t + u_j . v)))
/// x_{t+1}  = tanh(A x_t + B a_t + C v) + sigma_x * eps
/// y_{t+1}  = w . x_t + a_t . (beta + Gamma x_t) / sqrt(da) + sigma_y * eps
/// ```
///
/// `A` is rescaled to spectral norm 0.9, which bounds its spectral radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicDgpSpec {
    pub n: usize,
    pub steps: usize,
    pub dx: usize,
    pub dv: usize,
    pub da: usize,
    pub confounding: f64,
    pub noise_x: f64,
    pub noise_y: f64,
    pub seed: u64,
}

impl Default for DynamicDgpSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            steps: 10,
            dx: 8,
            dv: 3,
            da: 2,
            confounding: 1.0,
            noise_x: 0.1,
            noise_y: 0.1,
            seed: 0,
        }
    }
}

pub const SPECTRAL_NORM_TARGET: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicDgp {
    pub spec: DynamicDgpSpec,
    /// `[dx][dx]`
    pub a: Vec<Vec<f64>>,
    /// `[dx][da]`
    pub b: Vec<Vec<f64>>,
    /// `[dx][dv]`
    pub c: Vec<Vec<f64>>,
    /// `[da][dx]`
    pub u: Vec<Vec<f64>>,
    /// `[da][dv]`
    pub u_v: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub beta: Vec<f64>,
    /// `[da][dx]`
    pub gamma: Vec<Vec<f64>>,
}

/// One simulated patient. Row `t` of `y` is the response to the action in row `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub v: Vec<f64>,
    /// `[T, dx]`
    pub x: Tensor,
    /// `[T, da]`, entries in {0, 1}
    pub a: Tensor,
    pub y: Vec<f64>,
    /// One-step effect of `a_t` against its complement `1 - a_t`.
    pub ite_true: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDataset {
    pub trajectories: Vec<Trajectory>,
    pub dv: usize,
    pub dx: usize,
    pub da: usize,
    pub steps: usize,
}

fn gaussian_matrix(rng: &mut RngStream, rows: usize, cols: usize, sd: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| rng.normals(cols).into_iter().map(|v| v * sd).collect())
        .collect()
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Largest singular value by power iteration on `M^T M`.
pub fn spectral_norm(m: &[Vec<f64>]) -> f64 {
    let cols = m.first().map_or(0, Vec::len);
    if cols == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (cols as f64).sqrt(); cols];
    let mut sigma = 0.0;
    for _ in 0..500 {
        let mv = mat_vec(m, &v);
        let mut next = vec![0.0; cols];
        for (row, &s) in m.iter().zip(&mv) {
            for (n, &r) in next.iter_mut().zip(row) {
                *n += r * s;
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let new_sigma = norm.sqrt();
        v = next.into_iter().map(|a| a / norm).collect();
        if (new_sigma - sigma).abs() < 1e-14 * new_sigma {
            sigma = new_sigma;
            break;
        }
        sigma = new_sigma;
    }
    sigma
}

impl DynamicDgp {
    pub fn new(spec: DynamicDgpSpec) -> Self {
        let mut rng = RngStream::new(spec.seed, Stream::DgpParams);
        let (dx, dv, da) = (spec.dx, spec.dv, spec.da);
        let mut a = gaussian_matrix(&mut rng, dx, dx, (1.0 / dx as f64).sqrt());
        let norm = spectral_norm(&a);
        if norm > 0.0 {
            for row in &mut a {
                for v in row.iter_mut() {
                    *v *= SPECTRAL_NORM_TARGET / norm;
                }
            }
        }
        let b = gaussian_matrix(&mut rng, dx, da, (0.5 / da as f64).sqrt());
        let c = gaussian_matrix(&mut rng, dx, dv, (0.3 / dv as f64).sqrt());
        let u = gaussian_matrix(&mut rng, da, dx, (1.0 / dx as f64).sqrt());
        let u_v = gaussian_matrix(&mut rng, da, dv, (0.5 / dv as f64).sqrt());
        let w = rng.normals(dx).into_iter().map(|v| v / (dx as f64).sqrt()).collect();
        let beta = rng.normals(da);
        let gamma = gaussian_matrix(&mut rng, da, dx, 0.5 / (dx as f64).sqrt());
        Self {
            spec,
            a,
            b,
            c,
            u,
            u_v,
            w,
            beta,
            gamma,
        }
    }

    pub fn propensity(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.u_v)
            .map(|(ux, uv)| sigmoid(self.spec.confounding * (dot(ux, x) + dot(uv, v))))
            .collect()
    }

    /// Noiseless `E[y_{t+1} | x_t, a_t]`.
    pub fn mean_outcome(&self, x: &[f64], a: &[f64]) -> f64 {
        let scale = (self.spec.da as f64).sqrt();
        let effect: f64 = self
            .beta
            .iter()
            .zip(&self.gamma)
            .zip(a)
            .map(|((b, g), ai)| ai * (b + dot(g, x)))
            .sum();
        dot(&self.w, x) + effect / scale
    }

    /// Closed-form one-step effect `(a - a') . (beta + Gamma x) / sqrt(da)`.
    pub fn step_effect(&self, x: &[f64], a: &[f64], a_alt: &[f64]) -> f64 {
        let scale = (self.spec.da as f64).sqrt();
        self.beta
            .iter()
            .zip(&self.gamma)
            .zip(a.iter().zip(a_alt))
            .map(|((b, g), (ai, aj))| (ai - aj) * (b + dot(g, x)))
            .sum::<f64>()
            / scale
    }

    /// Noiseless state transition.
    pub fn next_state(&self, x: &[f64], a: &[f64], v: &[f64]) -> Vec<f64> {
        let ax = mat_vec(&self.a, x);
        let ba = mat_vec(&self.b, a);
        let cv = mat_vec(&self.c, v);
        (0..self.spec.dx).map(|i| (ax[i] + ba[i] + cv[i]).tanh()).collect()
    }

    pub fn sample(&self, n: usize, seed: u64) -> TrajectoryDataset {
        let s = &self.spec;
        let mut rng = RngStream::new(seed, Stream::Data);
        let trajectories = (0..n)
            .map(|_| {
                let v = rng.normals(s.dv);
                let mut x = rng.normals(s.dx);
                let (mut xs, mut acts, mut ys, mut ite) = (
                    Vec::with_capacity(s.steps * s.dx),
                    Vec::with_capacity(s.steps * s.da),
                    Vec::with_capacity(s.steps),
                    Vec::with_capacity(s.steps),
                );
                for _ in 0..s.steps {
                    let a: Vec<f64> = self
                        .propensity(&x, &v)
                        .into_iter()
                        .map(|p| f64::from(u8::from(rng.bernoulli(p))))
                        .collect();
                    let alt: Vec<f64> = a.iter().map(|ai| 1.0 - ai).collect();
                    ys.push(self.mean_outcome(&x, &a) + s.noise_y * rng.normal());
                    ite.push(self.step_effect(&x, &a, &alt));
                    let next: Vec<f64> = self
                        .next_state(&x, &a, &v)
                        .into_iter()
                        .map(|xi| xi + s.noise_x * rng.normal())
                        .collect();
                    xs.extend_from_slice(&x);
                    acts.extend_from_slice(&a);
                    x = next;
                }
                Trajectory {
                    v,
                    x: Tensor::matrix(s.steps, s.dx, xs),
                    a: Tensor::matrix(s.steps, s.da, acts),
                    y: ys,
                    ite_true: ite,
                }
            })
            .collect();
        TrajectoryDataset {
            trajectories,
            dv: s.dv,
            dx: s.dx,
            da: s.da,
            steps: s.steps,
        }
    }
}

pub fn gen_dynamic(spec: &DynamicDgpSpec) -> (DynamicDgp, TrajectoryDataset) {
    let dgp = DynamicDgp::new(spec.clone());
    let data = dgp.sample(spec.n, spec.seed);
    (dgp, data)
}

impl TrajectoryDataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            trajectories: idx.iter().map(|&i| self.trajectories[i].clone()).collect(),
            ..*self
        }
    }

    pub fn split(&self, train_fraction: f64) -> (Self, Self) {
        let n = self.len();
        let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        (
            self.subset(&(0..cut).collect::<Vec<_>>()),
            self.subset(&(cut..n).collect::<Vec<_>>()),
        )
    }

    /// Same trajectories truncated to their first `steps` steps.
    pub fn truncate(&self, steps: usize) -> Self {
        let steps = steps.min(self.steps);
        let trajectories = self
            .trajectories
            .iter()
            .map(|tr| Trajectory {
                v: tr.v.clone(),
                x: tr.x.gather_rows(&(0..steps).collect::<Vec<_>>()),
                a: tr.a.gather_rows(&(0..steps).collect::<Vec<_>>()),
                y: tr.y[..steps].to_vec(),
                ite_true: tr.ite_true[..steps].to_vec(),
            })
            .collect();
        Self {
            trajectories,
            steps,
            ..*self
        }
    }
}
