//! Stochastic encoder, reparameterised sampling, the closed-form rate term
//! against a standard-normal reference, the conditional reconstruction
//! decoder and the outcome head.
//!
//! Reported reconstruction and surrogate values drop the Gaussian
//! normalising constant `0.5 * d * ln(2 pi)`, so a perfect reconstruction
//! scores 0.

use crate::autodiff::{Linear, Mlp, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Bounds applied to the log-variance head before exponentiation.
pub const LOG_VAR_CLAMP: f64 = 10.0;

const PREDICT_CHUNK: usize = 4096;

/// Diagonal Gaussian `q(z | input)` as nodes on a tape.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPosterior {
    pub mean: Var,
    pub log_var: Var,
}

impl GaussianPosterior {
    pub fn values(&self, tape: &Tape) -> PosteriorValues {
        PosteriorValues {
            mean: tape.value(self.mean).clone(),
            log_var: tape.value(self.log_var).clone(),
        }
    }
}

/// Detached copy of a posterior's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorValues {
    pub mean: Tensor,
    pub log_var: Tensor,
}

impl PosteriorValues {
    /// Per-row `KL(q || N(0, I))`.
    pub fn kl_to_prior(&self) -> Vec<f64> {
        (0..self.mean.rows())
            .map(|r| kl_row(self.mean.row(r), self.log_var.row(r)))
            .collect()
    }
}

pub(crate) fn kl_row(mean: &[f64], log_var: &[f64]) -> f64 {
    0.5 * mean
        .iter()
        .zip(log_var)
        .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
        .sum::<f64>()
}

/// The fixed reference marginal `r(z) = N(0, I_dz)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorSpec {
    pub dim: usize,
}

impl PriorSpec {
    /// `ln r(z)` including the normalising constant.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim);
        -0.5 * z.iter().map(|v| v * v).sum::<f64>()
            - 0.5 * self.dim as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Encoder, decoder and outcome networks.
#[derive(Debug, Clone, Copy)]
pub struct ModelHeads {
    pub encoder: Linear,
    pub mean_head: Linear,
    pub log_var_head: Linear,
    pub decoder: Mlp,
    pub outcome: Mlp,
    pub input_dim: usize,
    pub latent_dim: usize,
    pub treatment_dim: usize,
    pub outcome_dim: usize,
}

impl ModelHeads {
    /// `input_dim` is also the decoder's reconstruction dimension.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        latent_dim: usize,
        treatment_dim: usize,
        outcome_dim: usize,
        width: usize,
        rng: &mut RngStream,
    ) -> Self {
        let encoder = Linear::new(store, &format!("{prefix}encoder.hidden"), input_dim, width, rng);
        let mean_head = Linear::new(store, &format!("{prefix}encoder.mean"), width, latent_dim, rng);
        let log_var_head =
            Linear::new(store, &format!("{prefix}encoder.log_var"), width, latent_dim, rng);
        let joint = latent_dim + treatment_dim;
        let decoder = Mlp::new(store, &format!("{prefix}decoder"), joint, width, input_dim, rng);
        let outcome = Mlp::new(store, &format!("{prefix}outcome"), joint, width, outcome_dim, rng);
        Self {
            encoder,
            mean_head,
            log_var_head,
            decoder,
            outcome,
            input_dim,
            latent_dim,
            treatment_dim,
            outcome_dim,
        }
    }

    pub fn prior(&self) -> PriorSpec {
        PriorSpec {
            dim: self.latent_dim,
        }
    }
}

/// Shared tanh layer followed by linear mean and (clamped) log-variance heads.
pub fn encode(
    tape: &mut Tape,
    store: &ParamStore,
    heads: &ModelHeads,
    input: Var,
) -> Result<GaussianPosterior> {
    let hidden = heads.encoder.forward(tape, store, input)?;
    let hidden = tape.tanh(hidden);
    let mean = heads.mean_head.forward(tape, store, hidden)?;
    let raw = heads.log_var_head.forward(tape, store, hidden)?;
    let log_var = tape.clamp(raw, -LOG_VAR_CLAMP, LOG_VAR_CLAMP);
    Ok(GaussianPosterior { mean, log_var })
}

/// `z = mean + exp(log_var / 2) * eps`.
pub fn sample_reparam(tape: &mut Tape, post: &GaussianPosterior, eps: Tensor) -> Result<Var> {
    let half = tape.scale(post.log_var, 0.5);
    let std = tape.exp(half);
    let eps = tape.constant(eps);
    let noise = tape.mul(std, eps)?;
    tape.add(post.mean, noise)
}

/// Per-row `0.5 * sum(mean^2 + exp(log_var) - 1 - log_var)`, shape `[batch, 1]`.
pub fn kl_to_prior(tape: &mut Tape, post: &GaussianPosterior) -> Result<Var> {
    let sq = tape.square(post.mean);
    let var = tape.exp(post.log_var);
    let a = tape.add(sq, var)?;
    let b = tape.sub(a, post.log_var)?;
    let b = tape.add_const(b, -1.0);
    let rows = tape.sum_cols(b);
    Ok(tape.scale(rows, 0.5))
}

/// Unit-variance Gaussian `-ln p(target | z, t)` without its constant:
/// `0.5 * |target - dec(z, t)|^2` per row, shape `[batch, 1]`.
pub fn decoder_nll(
    tape: &mut Tape,
    store: &ParamStore,
    heads: &ModelHeads,
    target: Var,
    z: Var,
    t: Var,
) -> Result<Var> {
    let joint = tape.concat_cols(&[z, t])?;
    let recon = heads.decoder.forward(tape, store, joint)?;
    let resid = tape.sub(target, recon)?;
    let sq = tape.square(resid);
    let rows = tape.sum_cols(sq);
    Ok(tape.scale(rows, 0.5))
}

/// Outcome prediction `g(z, t)`, shape `[batch, outcome_dim]`.
pub fn outcome(
    tape: &mut Tape,
    store: &ParamStore,
    heads: &ModelHeads,
    z: Var,
    t: Var,
) -> Result<Var> {
    let joint = tape.concat_cols(&[z, t])?;
    heads.outcome.forward(tape, store, joint)
}

/// Scalar nodes of one information-regularised objective evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub total: Var,
    pub supervised: Var,
    pub recon: Var,
    pub kl: Var,
}

/// Scalar values of [`LossTerms`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossValues {
    pub total: f64,
    pub supervised: f64,
    pub recon: f64,
    pub kl: f64,
}

impl LossTerms {
    pub fn values(&self, tape: &Tape) -> LossValues {
        LossValues {
            total: tape.value(self.total).item(),
            supervised: tape.value(self.supervised).item(),
            recon: tape.value(self.recon).item(),
            kl: tape.value(self.kl).item(),
        }
    }
}

/// Every node that one objective evaluation produces.
#[derive(Debug, Clone, Copy)]
pub struct StepNodes {
    pub posterior: GaussianPosterior,
    pub z: Var,
    pub prediction: Var,
    pub terms: LossTerms,
}

/// One information-regularised step:
/// `mean SE(y, g(z,t)) + lambda * mean nll(target | z,t) + lambda * mean KL(q || r)`
/// with a single reparameterised draw per row.
#[allow(clippy::too_many_arguments)]
pub fn step_objective(
    tape: &mut Tape,
    store: &ParamStore,
    heads: &ModelHeads,
    encoder_input: Var,
    recon_target: Var,
    treatment: Var,
    y: Var,
    eps: Tensor,
    lambda: f64,
) -> Result<StepNodes> {
    let posterior = encode(tape, store, heads, encoder_input)?;
    let z = sample_reparam(tape, &posterior, eps)?;
    let prediction = outcome(tape, store, heads, z, treatment)?;
    let resid = tape.sub(y, prediction)?;
    let sq = tape.square(resid);
    let per_row = tape.sum_cols(sq);
    let supervised = tape.mean_all(per_row);

    let nll = decoder_nll(tape, store, heads, recon_target, z, treatment)?;
    let recon = tape.mean_all(nll);
    let kl_rows = kl_to_prior(tape, &posterior)?;
    let kl = tape.mean_all(kl_rows);

    let info = tape.add(recon, kl)?;
    let weighted = tape.scale(info, lambda);
    let total = tape.add(supervised, weighted)?;
    Ok(StepNodes {
        posterior,
        z,
        prediction,
        terms: LossTerms {
            total,
            supervised,
            recon,
            kl,
        },
    })
}

/// Value of the surrogate upper bound on `I(z; t)` up to its dropped
/// constants: `E[ln q - ln r] - E[ln p(target | z, t)]`.
pub fn surrogate_value(rate: f64, recon_nll: f64) -> f64 {
    rate + recon_nll
}

/// `g(z, t)` for explicit latent rows, forward only.
pub fn outcome_values(store: &ParamStore, heads: &ModelHeads, z: Tensor, t: Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let z = tape.constant(z);
    let t = tape.constant(t);
    let out = outcome(&mut tape, store, heads, z, t)?;
    Ok(tape.value(out).clone())
}

/// Plug-in predictions for a factual and an alternative arm under shared draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmPredictions {
    pub factual: Vec<f64>,
    pub alternative: Vec<f64>,
    pub ite: Vec<f64>,
    /// Monte Carlo standard error of each `ite` entry.
    pub ite_std_error: Vec<f64>,
}

/// Averages `g(z, t)` and `g(z, t_alt)` over `samples` draws from each
/// row's posterior; both arms see the same draws.
pub fn predict_arms(
    store: &ParamStore,
    heads: &ModelHeads,
    post: &PosteriorValues,
    t: &Tensor,
    t_alt: &Tensor,
    samples: usize,
    rng: &mut RngStream,
) -> Result<ArmPredictions> {
    if samples == 0 {
        return Err(Error::usage("at least one Monte Carlo sample is required"));
    }
    let n = post.mean.rows();
    if t.rows() != n || t_alt.rows() != n {
        return Err(Error::usage(format!(
            "{n} posterior rows but {} and {} treatment rows",
            t.rows(),
            t_alt.rows()
        )));
    }
    let dz = heads.latent_dim;
    let std: Vec<f64> = post.log_var.data().iter().map(|lv| (0.5 * lv).exp()).collect();

    let mut sum_f = vec![0.0; n];
    let mut sum_a = vec![0.0; n];
    let mut sum_d = vec![0.0; n];
    let mut sum_d2 = vec![0.0; n];
    let pairs = n * samples;
    let mut start = 0;
    while start < pairs {
        let end = (start + PREDICT_CHUNK).min(pairs);
        let rows: Vec<usize> = (start..end).map(|p| p / samples).collect();
        let eps = rng.normals(rows.len() * dz);
        let mut z = Vec::with_capacity(rows.len() * dz);
        for (k, &i) in rows.iter().enumerate() {
            for j in 0..dz {
                z.push(post.mean.at(i, j) + std[i * dz + j] * eps[k * dz + j]);
            }
        }
        let z = Tensor::matrix(rows.len(), dz, z);
        let gf = outcome_values(store, heads, z.clone(), t.gather_rows(&rows))?;
        let ga = outcome_values(store, heads, z, t_alt.gather_rows(&rows))?;
        for (k, &i) in rows.iter().enumerate() {
            let (f, a) = (gf.data()[k], ga.data()[k]);
            sum_f[i] += f;
            sum_a[i] += a;
            sum_d[i] += f - a;
            sum_d2[i] += (f - a) * (f - a);
        }
        start = end;
    }
    let s = samples as f64;
    let ite: Vec<f64> = sum_d.iter().map(|d| d / s).collect();
    let ite_std_error = sum_d2
        .iter()
        .zip(&ite)
        .map(|(d2, m)| {
            if samples < 2 {
                0.0
            } else {
                ((d2 / s - m * m).max(0.0) * s / (s - 1.0) / s).sqrt()
            }
        })
        .collect();
    Ok(ArmPredictions {
        factual: sum_f.iter().map(|v| v / s).collect(),
        alternative: sum_a.iter().map(|v| v / s).collect(),
        ite,
        ite_std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn heads(zero_outputs: bool) -> (ParamStore, ModelHeads) {
        let mut store = ParamStore::new();
        let mut rng = RngStream::new(3, Stream::Init);
        let heads = ModelHeads::new(&mut store, "", 5, 4, 2, 1, 128, &mut rng);
        if zero_outputs {
            heads.mean_head.zero(&mut store);
            heads.log_var_head.zero(&mut store);
            heads.outcome.out.zero(&mut store);
        }
        (store, heads)
    }

    fn input(rows: usize, cols: usize, seed: u64) -> Tensor {
        let mut rng = RngStream::new(seed, Stream::Data);
        Tensor::matrix(rows, cols, rng.normals(rows * cols))
    }

    #[test]
    fn zero_heads_give_prior_posterior() {
        let (store, heads) = heads(true);
        let mut tape = Tape::new();
        let x = tape.constant(input(3, 5, 1));
        let post = encode(&mut tape, &store, &heads, x).unwrap();
        assert!(tape.value(post.mean).data().iter().all(|&v| v == 0.0));
        assert!(tape.value(post.log_var).data().iter().all(|&v| v == 0.0));
        let kl = kl_to_prior(&mut tape, &post).unwrap();
        assert!(tape.value(kl).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn encoder_is_deterministic_and_shaped() {
        let (store, heads) = heads(false);
        let run = || {
            let mut tape = Tape::new();
            let x = tape.constant(input(6, 5, 2));
            encode(&mut tape, &store, &heads, x).unwrap().values(&tape)
        };
        let a = run();
        assert_eq!(a, run());
        assert_eq!(a.mean.shape(), &[6, 4]);
        assert_eq!(a.log_var.shape(), &[6, 4]);
    }

    #[test]
    fn log_var_is_clamped() {
        let (mut store, heads) = heads(false);
        store.value_mut(heads.log_var_head.b).data_mut().fill(40.0);
        let mut tape = Tape::new();
        let x = tape.constant(input(2, 5, 3));
        let post = encode(&mut tape, &store, &heads, x).unwrap();
        assert!(tape.value(post.log_var).data().iter().all(|&v| v == LOG_VAR_CLAMP));
    }

    #[test]
    fn reparam_examples() {
        let mut tape = Tape::new();
        let mean = tape.constant(Tensor::matrix(1, 2, vec![0.5, -1.0]));
        let log_var = tape.constant(Tensor::matrix(1, 2, vec![0.0, 0.0]));
        let post = GaussianPosterior { mean, log_var };
        let z0 = sample_reparam(&mut tape, &post, Tensor::zeros(&[1, 2])).unwrap();
        assert_eq!(tape.value(z0).data(), &[0.5, -1.0]);
        let z1 = sample_reparam(&mut tape, &post, Tensor::filled(&[1, 2], 1.0)).unwrap();
        assert_eq!(tape.value(z1).data(), &[1.5, 0.0]);
    }

    #[test]
    fn reparam_variance_matches() {
        let n = 100_000;
        let lv = 0.8_f64;
        let mut tape = Tape::new();
        let mean = tape.constant(Tensor::filled(&[n, 1], 2.0));
        let log_var = tape.constant(Tensor::filled(&[n, 1], lv));
        let post = GaussianPosterior { mean, log_var };
        let mut rng = RngStream::new(5, Stream::Noise);
        let eps = Tensor::matrix(n, 1, rng.normals(n));
        let z = sample_reparam(&mut tape, &post, eps.clone()).unwrap();
        let zs = tape.value(z).data();
        let m = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var / lv.exp() - 1.0).abs() < 0.03);

        // z - mean is exactly the scaled noise, so the correlation is ~1
        let scaled: Vec<f64> = eps.data().iter().map(|e| (0.5 * lv).exp() * e).collect();
        let centred: Vec<f64> = zs.iter().map(|v| v - 2.0).collect();
        assert!(correlation(&centred, &scaled) >= 0.999);
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn kl_closed_form_values() {
        assert_eq!(kl_row(&[0.0], &[0.0]), 0.0);
        assert_eq!(kl_row(&[1.0], &[0.0]), 0.5);
        assert!(kl_row(&[0.3, -0.2], &[0.5, -1.5]) > 0.0);
    }

    #[test]
    fn decoder_nll_examples() {
        let (mut store, heads) = heads(false);
        heads.decoder.out.zero(&mut store);
        let mut tape = Tape::new();
        let z = tape.constant(input(1, 4, 7));
        let t = tape.constant(Tensor::matrix(1, 2, vec![1.0, 0.0]));
        // decoder outputs zero, so the residual equals the target
        let perfect = tape.constant(Tensor::zeros(&[1, 5]));
        let nll = decoder_nll(&mut tape, &store, &heads, perfect, z, t).unwrap();
        assert_eq!(tape.value(nll).item(), 0.0);
        let ones = tape.constant(Tensor::matrix(1, 5, vec![1.0, 1.0, 0.0, 0.0, 0.0]));
        let nll = decoder_nll(&mut tape, &store, &heads, ones, z, t).unwrap();
        assert_eq!(tape.value(nll).item(), 1.0);
    }

    #[test]
    fn outcome_head_contracts() {
        let (store, heads) = heads(true);
        let mut tape = Tape::new();
        let z = tape.constant(input(4, 4, 8));
        let t = tape.constant(Tensor::filled(&[4, 2], 1.0));
        let y = outcome(&mut tape, &store, &heads, z, t).unwrap();
        assert_eq!(tape.value(y).shape(), &[4, 1]);
        assert!(tape.value(y).data().iter().all(|&v| v == 0.0));

        let (store, heads) = self::heads(false);
        let mut tape = Tape::new();
        let z = tape.constant(input(1, 4, 9));
        let t1 = tape.constant(Tensor::matrix(1, 2, vec![1.0, 0.0]));
        let t2 = tape.constant(Tensor::matrix(1, 2, vec![0.0, 1.0]));
        let y1 = outcome(&mut tape, &store, &heads, z, t1).unwrap();
        let y2 = outcome(&mut tape, &store, &heads, z, t2).unwrap();
        assert_ne!(tape.value(y1).item(), tape.value(y2).item());
    }

    #[test]
    fn surrogate_monotone_in_reconstruction() {
        let rate = 1.7;
        let mut prev = surrogate_value(rate, 3.0);
        for nll in [2.5, 1.0, 0.2, 0.0] {
            let cur = surrogate_value(rate, nll);
            assert!(cur < prev);
            prev = cur;
        }
        assert_eq!(surrogate_value(0.0, 0.0), 0.0);
    }

    #[test]
    fn prior_log_density_at_origin() {
        let p = PriorSpec { dim: 2 };
        let expected = -(2.0 * std::f64::consts::PI).ln();
        assert!((p.log_density(&[0.0, 0.0]) - expected).abs() < 1e-15);
    }
}
