use crate::autodiff::{sigmoid, Tensor};
use crate::error::{Error, Result};

/// How [`mi_probe`] aggregates vector treatments; quoted in reports.
pub const MI_PROBE_CONVENTION: &str = "sum over treatment components of held-out \
E[log p(t_j|z)] + H(t_j), nats; each component clamped at 0";

const RIDGE: f64 = 1e-4;
const MAX_NEWTON: usize = 100;

/// Binary logistic regression on standardised features, fitted by damped Newton.
#[derive(Debug, Clone)]
pub struct LogisticProbe {
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Intercept first.
    weights: Vec<f64>,
}

fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b)
}

fn log_sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        -(-s).exp().ln_1p()
    } else {
        s - s.exp().ln_1p()
    }
}

impl LogisticProbe {
    pub fn fit(features: &Tensor, labels: &[bool]) -> Result<Self> {
        let (n, d) = (features.rows(), features.cols());
        if n == 0 || labels.len() != n {
            return Err(Error::usage(format!(
                "probe fit needs matching non-empty inputs, got {n} rows and {} labels",
                labels.len()
            )));
        }
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(features.row(i)) {
                *m += v / n as f64;
            }
        }
        let mut scale = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in scale.iter_mut().zip(features.row(i)).zip(&mean) {
                *s += (v - m) * (v - m) / n as f64;
            }
        }
        for s in &mut scale {
            *s = s.sqrt().max(1e-8);
        }
        let mut probe = LogisticProbe { mean, scale, weights: vec![0.0; d + 1] };
        let rows: Vec<Vec<f64>> = (0..n).map(|i| probe.design(features.row(i))).collect();
        let p = d + 1;

        let objective = |w: &[f64]| -> f64 {
            let ll: f64 = rows
                .iter()
                .zip(labels)
                .map(|(x, &y)| {
                    let s: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
                    log_sigmoid(if y { s } else { -s })
                })
                .sum();
            -ll + 0.5 * RIDGE * w[1..].iter().map(|v| v * v).sum::<f64>()
        };

        let mut current = objective(&probe.weights);
        for _ in 0..MAX_NEWTON {
            let mut grad = vec![0.0; p];
            let mut hess = vec![0.0; p * p];
            for (x, &y) in rows.iter().zip(labels) {
                let s: f64 = x.iter().zip(&probe.weights).map(|(a, b)| a * b).sum();
                let mu = sigmoid(s);
                let r = mu - f64::from(u8::from(y));
                let w = (mu * (1.0 - mu)).max(1e-12);
                for a in 0..p {
                    grad[a] += r * x[a];
                    for b in 0..=a {
                        hess[a * p + b] += w * x[a] * x[b];
                    }
                }
            }
            for a in 0..p {
                for b in 0..a {
                    hess[b * p + a] = hess[a * p + b];
                }
                hess[a * p + a] += if a == 0 { 1e-10 } else { RIDGE };
                if a > 0 {
                    grad[a] += RIDGE * probe.weights[a];
                }
            }
            let Some(step) = cholesky_solve(hess, grad.clone(), p) else { break };
            let mut eta = 1.0;
            let mut accepted = false;
            while eta > 1e-8 {
                let trial: Vec<f64> = probe.weights.iter().zip(&step).map(|(w, s)| w - eta * s).collect();
                let value = objective(&trial);
                if value <= current {
                    let gain = current - value;
                    probe.weights = trial;
                    current = value;
                    accepted = gain > 1e-10 * (1.0 + current.abs());
                    break;
                }
                eta *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok(probe)
    }

    fn design(&self, x: &[f64]) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s))
            .collect()
    }

    /// `log p(label | x)` in nats.
    pub fn log_prob(&self, x: &[f64], label: bool) -> f64 {
        let s: f64 = self.design(x).iter().zip(&self.weights).map(|(a, b)| a * b).sum();
        log_sigmoid(if label { s } else { -s })
    }

    pub fn prob_one(&self, x: &[f64]) -> f64 {
        self.log_prob(x, true).exp()
    }
}

/// Empirical Bernoulli entropy in nats.
pub fn binary_entropy(labels: &[bool]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let p = labels.iter().filter(|&&l| l).count() as f64 / labels.len() as f64;
    [p, 1.0 - p].iter().filter(|&&q| q > 0.0).map(|q| -q * q.ln()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEstimate {
    pub total: f64,
    pub per_component: Vec<f64>,
}

fn labels_of(t: &Tensor, j: usize) -> Vec<bool> {
    (0..t.rows()).map(|i| t.at(i, j) != 0.0).collect()
}

/// Classifier lower bound on `sum_j I(z; t_j)`: one logistic probe per
/// treatment component fitted on the held-in pair, scored on the held-out pair.
pub fn mi_probe(z_in: &Tensor, t_in: &Tensor, z_out: &Tensor, t_out: &Tensor) -> Result<ProbeEstimate> {
    if t_in.cols() != t_out.cols() || z_in.cols() != z_out.cols() {
        return Err(Error::usage("mi_probe: held-in and held-out column counts differ"));
    }
    if z_out.rows() == 0 || z_out.rows() != t_out.rows() || z_in.rows() != t_in.rows() {
        return Err(Error::usage("mi_probe: row counts of z and t differ or are empty"));
    }
    let mut per_component = Vec::with_capacity(t_in.cols());
    for j in 0..t_in.cols() {
        let y_in = labels_of(t_in, j);
        let y_out = labels_of(t_out, j);
        let single = |y: &[bool]| y.iter().all(|&l| l) || y.iter().all(|&l| !l);
        if single(&y_in) || single(&y_out) {
            per_component.push(0.0);
            continue;
        }
        let probe = LogisticProbe::fit(z_in, &y_in)?;
        let ll = (0..z_out.rows())
            .map(|i| probe.log_prob(z_out.row(i), y_out[i]))
            .sum::<f64>()
            / z_out.rows() as f64;
        per_component.push((ll + binary_entropy(&y_out)).max(0.0));
    }
    Ok(ProbeEstimate { total: per_component.iter().sum(), per_component })
}
