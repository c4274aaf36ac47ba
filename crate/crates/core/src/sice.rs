//! Static estimator: information-regularised representation trained on
//! `(x, t, y)` with a plug-in effect estimate that holds `z` fixed across arms.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, ParamStore, Tape, Tensor};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport, TreatedFlag};
use crate::rng::{RngStream, Stream};
use crate::synthgen::StaticDataset;
use crate::variational::{self, ArmPredictions, LossValues, ModelHeads, PosteriorValues};

/// Losses above this abort training.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

pub(crate) const EVAL_CHUNK: usize = 4096;
const AUUC_REFERENCES: usize = 8;
const AUUC_DRAWS: usize = 16;

// substream indices of Stream::Noise used after training
const SUB_ITE: u64 = 1;
const SUB_SURROGATE: u64 = 2;
const SUB_PROBE: u64 = 3;
const SUB_AUUC: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SiceConfig {
    pub latent_dim: usize,
    pub width: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for SiceConfig {
    fn default() -> Self {
        Self {
            latent_dim: 32,
            width: 128,
            lambda: 1e-4,
            epochs: 50,
            batch_size: 32,
            learning_rate: 5e-4,
            eval_samples: 100,
            seed: 0,
        }
    }
}

impl SiceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.eval_samples == 0 {
            return Err(Error::config("eval_samples must be >= 1"));
        }
        if self.latent_dim == 0 || self.width == 0 || self.batch_size == 0 {
            return Err(Error::config("latent_dim, width and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Size-weighted epoch means of the objective and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub total: f64,
    pub supervised: f64,
    pub recon: f64,
    pub kl: f64,
}

impl EpochRecord {
    pub fn is_finite(&self) -> bool {
        [self.total, self.supervised, self.recon, self.kl].iter().all(|v| v.is_finite())
    }
}

pub(crate) fn accumulate(acc: &mut LossValues, v: &LossValues, weight: f64) {
    acc.total += weight * v.total;
    acc.supervised += weight * v.supervised;
    acc.recon += weight * v.recon;
    acc.kl += weight * v.kl;
}

pub(crate) fn check_batch(
    values: &LossValues,
    epoch: usize,
    batch: usize,
    rows: &[usize],
    history: &[EpochRecord],
) -> Result<()> {
    let parts = [values.total, values.supervised, values.recon, values.kl];
    if parts.iter().all(|v| v.is_finite()) && values.total <= DIVERGENCE_THRESHOLD {
        return Ok(());
    }
    let shown: Vec<String> = rows.iter().take(16).map(usize::to_string).collect();
    let past: Vec<String> = history.iter().map(|r| format!("{:.6e}", r.total)).collect();
    Err(Error::Divergence(format!(
        "epoch {epoch} batch {batch}: total {:e} supervised {:e} recon {:e} kl {:e}; \
         rows [{}{}]; epoch totals so far [{}]",
        values.total,
        values.supervised,
        values.recon,
        values.kl,
        shown.join(", "),
        if rows.len() > 16 { ", ..." } else { "" },
        past.join(", ")
    )))
}

#[derive(Debug, Clone)]
pub struct SiceModel {
    pub config: SiceConfig,
    pub heads: ModelHeads,
    pub store: ParamStore,
    pub history: Vec<EpochRecord>,
}

/// Surrogate bound on `I(z; t)` split into its rate and distortion parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateEstimate {
    pub rate: f64,
    pub recon: f64,
    pub value: f64,
}

impl SiceModel {
    /// Fresh, untrained parameters for the given dimensions.
    pub fn init(config: SiceConfig, input_dim: usize, treatment_dim: usize) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = RngStream::new(config.seed, Stream::Init);
        let heads = ModelHeads::new(
            &mut store,
            "",
            input_dim,
            config.latent_dim,
            treatment_dim,
            1,
            config.width,
            &mut rng,
        );
        Ok(Self { config, heads, store, history: Vec::new() })
    }

    fn check_dims(&self, x: &Tensor, t: &Tensor) -> Result<()> {
        if x.cols() != self.heads.input_dim || t.cols() != self.heads.treatment_dim || x.rows() != t.rows() {
            return Err(Error::usage(format!(
                "model expects x[*,{}] and t[*,{}], got x{:?} t{:?}",
                self.heads.input_dim,
                self.heads.treatment_dim,
                x.shape(),
                t.shape()
            )));
        }
        Ok(())
    }

    /// Posterior parameters for each row of `x`.
    pub fn posterior(&self, x: &Tensor) -> Result<PosteriorValues> {
        let mut tape = Tape::new();
        let input = tape.constant(x.clone());
        let post = variational::encode(&mut tape, &self.store, &self.heads, input)?;
        Ok(post.values(&tape))
    }

    /// `g(z, t)` for explicit latent rows.
    pub fn outcome_values(&self, z: Tensor, t: Tensor) -> Result<Tensor> {
        variational::outcome_values(&self.store, &self.heads, z, t)
    }

    /// Averages `g(z, t)` and `g(z, t_alt)` over `samples` draws of
    /// `z ~ q(z | x)`; both arms see the same draws.
    pub fn predict_arms(
        &self,
        x: &Tensor,
        t: &Tensor,
        t_alt: &Tensor,
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<ArmPredictions> {
        self.check_dims(x, t)?;
        self.check_dims(x, t_alt)?;
        let post = self.posterior(x)?;
        variational::predict_arms(&self.store, &self.heads, &post, t, t_alt, samples, rng)
    }

    /// `E_q[g(z, t) - g(z, t_alt)]` per row with `samples` shared draws.
    pub fn predict_ite(
        &self,
        x: &Tensor,
        t: &Tensor,
        t_alt: &Tensor,
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<f64>> {
        Ok(self.predict_arms(x, t, t_alt, samples, rng)?.ite)
    }

    /// Dataset mean of the rate `KL(q || r)` plus the reconstruction NLL of
    /// `x` at one posterior draw per row; constants dropped.
    pub fn surrogate_mi(&self, data: &StaticDataset, rng: &mut RngStream) -> Result<SurrogateEstimate> {
        self.check_dims(&data.x, &data.t)?;
        let n = data.len();
        let mut rate = 0.0;
        let mut recon = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + EVAL_CHUNK).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let mut tape = Tape::new();
            let x = tape.constant(data.x.gather_rows(&idx));
            let t = tape.constant(data.t.gather_rows(&idx));
            let post = variational::encode(&mut tape, &self.store, &self.heads, x)?;
            let eps = Tensor::matrix(idx.len(), self.heads.latent_dim, rng.normals(idx.len() * self.heads.latent_dim));
            let z = variational::sample_reparam(&mut tape, &post, eps)?;
            let kl = variational::kl_to_prior(&mut tape, &post)?;
            let nll = variational::decoder_nll(&mut tape, &self.store, &self.heads, x, z, t)?;
            rate += tape.value(kl).sum();
            recon += tape.value(nll).sum();
            start = end;
        }
        let (rate, recon) = (rate / n as f64, recon / n as f64);
        Ok(SurrogateEstimate { rate, recon, value: variational::surrogate_value(rate, recon) })
    }

    /// Held-out metrics. `train` supplies the probe's fitting split and the
    /// reference treatment vectors behind the uplift score.
    pub fn evaluate(&self, train: &StaticDataset, test: &StaticDataset, flag: TreatedFlag) -> Result<MetricReport> {
        let seed = self.config.seed;
        let mut rng = RngStream::with_substream(seed, Stream::Noise, SUB_ITE);
        let arms = self.predict_arms(&test.x, &test.t, &test.t_alt, self.config.eval_samples, &mut rng)?;

        let post = self.posterior(&test.x)?;
        let kl_bottleneck = post.kl_to_prior().iter().sum::<f64>() / test.len() as f64;

        let mut rng = RngStream::with_substream(seed, Stream::Noise, SUB_PROBE);
        let z_in = self.sample_latent(&train.x, &mut rng)?;
        let z_out = self.sample_latent(&test.x, &mut rng)?;
        let probe = metrics::mi_probe(&z_in, &train.t, &z_out, &test.t)?;
        let hsic_zt = metrics::hsic(&z_out, &test.t)?;

        let scores = self.uplift_scores(train, test, flag)?;
        let treated: Vec<bool> = (0..test.len()).map(|i| flag.apply(test.t.row(i))).collect();

        Ok(MetricReport {
            rmse_y: metrics::rmse(&arms.factual, &test.y)?,
            mae_y: metrics::mae(&arms.factual, &test.y)?,
            ate_error: metrics::ate_error(&arms.ite, &test.ite_true)?,
            pehe: metrics::pehe(&arms.ite, &test.ite_true)?,
            auuc: metrics::auuc(&scores, &test.y, &treated)?,
            hsic_zt,
            mi_probe: probe.total,
            kl_bottleneck,
        })
    }

    /// One reparameterised draw per row.
    pub fn sample_latent(&self, x: &Tensor, rng: &mut RngStream) -> Result<Tensor> {
        let post = self.posterior(x)?;
        let dz = self.heads.latent_dim;
        let eps = rng.normals(x.rows() * dz);
        let data = post
            .mean
            .data()
            .iter()
            .zip(post.log_var.data())
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        Ok(Tensor::matrix(x.rows(), dz, data))
    }

    /// Predicted benefit of treating: mean over treated reference vectors taken
    /// from `train` of `ITE(x; t_ref, 0)`.
    pub fn uplift_scores(&self, train: &StaticDataset, test: &StaticDataset, flag: TreatedFlag) -> Result<Vec<f64>> {
        let refs: Vec<usize> =
            (0..train.len()).filter(|&i| flag.apply(train.t.row(i))).take(AUUC_REFERENCES).collect();
        let n = test.len();
        if refs.is_empty() {
            return Ok(vec![0.0; n]);
        }
        let control = Tensor::zeros(&[n, self.heads.treatment_dim]);
        let draws = self.config.eval_samples.min(AUUC_DRAWS);
        let mut rng = RngStream::with_substream(self.config.seed, Stream::Noise, SUB_AUUC);
        let mut scores = vec![0.0; n];
        for &r in &refs {
            let t_ref = train.t.gather_rows(&vec![r; n]);
            let ite = self.predict_ite(&test.x, &t_ref, &control, draws, &mut rng)?;
            for (s, v) in scores.iter_mut().zip(ite) {
                *s += v / refs.len() as f64;
            }
        }
        Ok(scores)
    }

    pub fn surrogate_on(&self, data: &StaticDataset) -> Result<SurrogateEstimate> {
        let mut rng = RngStream::with_substream(self.config.seed, Stream::Noise, SUB_SURROGATE);
        self.surrogate_mi(data, &mut rng)
    }
}

/// Builds the objective for one batch on `tape`; returns the total node and values.
pub fn sice_loss(
    tape: &mut Tape,
    model: &SiceModel,
    x: &Tensor,
    t: &Tensor,
    y: &Tensor,
    eps: Tensor,
    lambda: f64,
) -> Result<variational::StepNodes> {
    model.check_dims(x, t)?;
    let xv = tape.constant(x.clone());
    let tv = tape.constant(t.clone());
    let yv = tape.constant(y.clone());
    variational::step_objective(tape, &model.store, &model.heads, xv, xv, tv, yv, eps, lambda)
}

/// Mini-batch Adam on the information-regularised objective for a fixed number
/// of epochs.
pub fn train_sice(data: &StaticDataset, config: &SiceConfig) -> Result<SiceModel> {
    if data.is_empty() {
        return Err(Error::Precondition("training set is empty".into()));
    }
    let mut model = SiceModel::init(*config, data.dx(), data.dt())?;
    let adam = AdamConfig::with_lr(config.learning_rate);
    let mut shuffle = RngStream::new(config.seed, Stream::Shuffle);
    let mut noise = RngStream::new(config.seed, Stream::Noise);
    let y_all = data.y_tensor();
    let n = data.len();
    let dz = config.latent_dim;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle.shuffle(&mut order);
        let mut acc = LossValues::default();
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let x = data.x.gather_rows(rows);
            let t = data.t.gather_rows(rows);
            let y = y_all.gather_rows(rows);
            let eps = Tensor::matrix(rows.len(), dz, noise.normals(rows.len() * dz));
            let mut tape = Tape::new();
            let nodes = sice_loss(&mut tape, &model, &x, &t, &y, eps, config.lambda)?;
            let values = nodes.terms.values(&tape);
            check_batch(&values, epoch, b, rows, &model.history)?;
            tape.backward(nodes.terms.total, &mut model.store)?;
            if !model.store.grads_finite() {
                return Err(Error::Divergence(format!("epoch {epoch} batch {b}: non-finite gradient")));
            }
            model.store.adam_step(&adam)?;
            accumulate(&mut acc, &values, rows.len() as f64 / n as f64);
        }
        model.history.push(EpochRecord {
            epoch: epoch + 1,
            total: acc.total,
            supervised: acc.supervised,
            recon: acc.recon,
            kl: acc.kl,
        });
    }
    Ok(model)
}
