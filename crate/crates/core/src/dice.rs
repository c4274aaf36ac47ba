//! Sequential estimator: a GRU summarises the history, a per-step stochastic
//! representation is read from the summary alone, and the outcome head combines
//! it with the current action.

use serde::{Deserialize, Serialize};

use crate::autodiff::{zeros, AdamConfig, GruCell, ParamStore, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricReport, TreatedFlag};
use crate::rng::{RngStream, Stream};
use crate::sice::{accumulate, check_batch, EpochRecord};
use crate::synthgen::TrajectoryDataset;
use crate::variational::{self, ArmPredictions, LossValues, ModelHeads, PosteriorValues, StepNodes};

const SUB_ITE: u64 = 1;
const SUB_PROBE: u64 = 3;
const SUB_AUUC: u64 = 4;
const AUUC_DRAWS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiceConfig {
    pub hidden: usize,
    pub latent_dim: usize,
    pub lambda: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub eval_samples: usize,
    pub seed: u64,
}

impl Default for DiceConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            latent_dim: 32,
            lambda: 1e-5,
            epochs: 50,
            batch_size: 32,
            learning_rate: 5e-4,
            eval_samples: 100,
            seed: 0,
        }
    }
}

impl DiceConfig {
    pub fn validate(&self) -> Result<()> {
        crate::sice::SiceConfig {
            latent_dim: self.latent_dim,
            width: self.hidden,
            lambda: self.lambda,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            eval_samples: self.eval_samples,
            seed: self.seed,
        }
        .validate()
    }
}

/// Per-step tensors of a batch of trajectories.
#[derive(Debug, Clone)]
pub struct StepBatch {
    pub v: Tensor,
    /// Row `t` holds `[batch, dx]`.
    pub x: Vec<Tensor>,
    pub a: Vec<Tensor>,
    pub y: Vec<Tensor>,
}

impl StepBatch {
    pub fn new(data: &TrajectoryDataset, idx: &[usize]) -> Self {
        let b = idx.len();
        let trs: Vec<_> = idx.iter().map(|&i| &data.trajectories[i]).collect();
        let v = Tensor::matrix(b, data.dv, trs.iter().flat_map(|tr| tr.v.iter().copied()).collect());
        let per_step = |f: &dyn Fn(usize) -> Tensor| (0..data.steps).map(f).collect::<Vec<_>>();
        Self {
            v,
            x: per_step(&|t| {
                Tensor::matrix(b, data.dx, trs.iter().flat_map(|tr| tr.x.row(t).to_vec()).collect())
            }),
            a: per_step(&|t| {
                Tensor::matrix(b, data.da, trs.iter().flat_map(|tr| tr.a.row(t).to_vec()).collect())
            }),
            y: per_step(&|t| Tensor::matrix(b, 1, trs.iter().map(|tr| tr.y[t]).collect())),
        }
    }

    pub fn rows(&self) -> usize {
        self.v.rows()
    }

    pub fn steps(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone)]
pub struct DiceModel {
    pub config: DiceConfig,
    pub gru: GruCell,
    pub heads: ModelHeads,
    pub store: ParamStore,
    pub history: Vec<EpochRecord>,
    pub dv: usize,
    pub dx: usize,
    pub da: usize,
}

/// Tape nodes of one unrolled batch.
#[derive(Debug, Clone)]
pub struct Unrolled {
    pub hidden: Vec<Var>,
    pub steps: Vec<StepNodes>,
    pub total: Var,
}

impl DiceModel {
    pub fn init(config: DiceConfig, dv: usize, dx: usize, da: usize) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = RngStream::new(config.seed, Stream::Init);
        let gru = GruCell::new(&mut store, "gru", dv + da + dx, config.hidden, &mut rng);
        let heads = ModelHeads::new(
            &mut store,
            "",
            config.hidden,
            config.latent_dim,
            da,
            1,
            config.hidden,
            &mut rng,
        );
        Ok(Self { config, gru, heads, store, history: Vec::new(), dv, dx, da })
    }

    fn check_batch_dims(&self, batch: &StepBatch) -> Result<()> {
        let ok = batch.v.cols() == self.dv
            && batch.x.iter().all(|x| x.cols() == self.dx)
            && batch.a.iter().all(|a| a.cols() == self.da)
            && batch.a.len() == batch.x.len()
            && batch.y.len() == batch.x.len();
        if !ok {
            return Err(Error::usage(format!(
                "model expects v[{}], x[{}], a[{}] per step",
                self.dv, self.dx, self.da
            )));
        }
        Ok(())
    }

    /// History states `h_1..h_T`, `h_t = GRU(h_{t-1}, [v, a_{t-1}, x_t])`
    /// with `h_0 = 0` and `a_0 = 0`.
    pub fn hidden_states(&self, tape: &mut Tape, batch: &StepBatch) -> Result<Vec<Var>> {
        self.check_batch_dims(batch)?;
        let b = batch.rows();
        let v = tape.constant(batch.v.clone());
        let mut h = zeros(tape, b, self.config.hidden);
        let mut prev_a = zeros(tape, b, self.da);
        let mut states = Vec::with_capacity(batch.steps());
        for t in 0..batch.steps() {
            let x = tape.constant(batch.x[t].clone());
            let u = tape.concat_cols(&[v, prev_a, x])?;
            h = self.gru.forward(tape, &self.store, h, u)?;
            states.push(h);
            prev_a = tape.constant(batch.a[t].clone());
        }
        Ok(states)
    }

    /// Per-step posteriors `q(z_t | h_t)` for every trajectory in `data`.
    pub fn step_posteriors(&self, data: &TrajectoryDataset) -> Result<Vec<PosteriorValues>> {
        let idx: Vec<usize> = (0..data.len()).collect();
        let batch = StepBatch::new(data, &idx);
        let mut tape = Tape::new();
        let states = self.hidden_states(&mut tape, &batch)?;
        states
            .into_iter()
            .map(|h| Ok(variational::encode(&mut tape, &self.store, &self.heads, h)?.values(&tape)))
            .collect()
    }

    /// One-step effects `E_q[g(z_t, a) - g(z_t, a_alt)]` with shared draws.
    /// `actions[t]` and `alternatives[t]` are `[N, da]`; result is `[t][i]`.
    pub fn predict_step_arms(
        &self,
        data: &TrajectoryDataset,
        actions: &[Tensor],
        alternatives: &[Tensor],
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<ArmPredictions>> {
        if actions.len() != data.steps || alternatives.len() != data.steps {
            return Err(Error::usage("one action tensor per step is required"));
        }
        let posts = self.step_posteriors(data)?;
        posts
            .iter()
            .zip(actions.iter().zip(alternatives))
            .map(|(post, (a, alt))| variational::predict_arms(&self.store, &self.heads, post, a, alt, samples, rng))
            .collect()
    }

    pub fn predict_step_ite(
        &self,
        data: &TrajectoryDataset,
        actions: &[Tensor],
        alternatives: &[Tensor],
        samples: usize,
        rng: &mut RngStream,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .predict_step_arms(data, actions, alternatives, samples, rng)?
            .into_iter()
            .map(|p| p.ite)
            .collect())
    }

    /// Held-out metrics pooled over every (trajectory, step) pair. The effect
    /// compares the taken action with its complement; the uplift score is the
    /// predicted effect of all-on against all-off.
    pub fn evaluate(&self, train: &TrajectoryDataset, test: &TrajectoryDataset, flag: TreatedFlag) -> Result<MetricReport> {
        let all = StepBatch::new(test, &(0..test.len()).collect::<Vec<_>>());
        let complement: Vec<Tensor> = all.a.iter().map(|a| a.map(|v| 1.0 - v)).collect();
        let seed = self.config.seed;
        let mut rng = RngStream::with_substream(seed, Stream::Noise, SUB_ITE);
        let arms = self.predict_step_arms(test, &all.a, &complement, self.config.eval_samples, &mut rng)?;

        let n = test.len();
        let mut factual = Vec::new();
        let mut y = Vec::new();
        let mut ite = Vec::new();
        let mut ite_true = Vec::new();
        for (t, arm) in arms.iter().enumerate() {
            factual.extend_from_slice(&arm.factual);
            ite.extend_from_slice(&arm.ite);
            for tr in &test.trajectories {
                y.push(tr.y[t]);
                ite_true.push(tr.ite_true[t]);
            }
        }

        let on = vec![Tensor::filled(&[n, self.da], 1.0); test.steps];
        let off = vec![Tensor::zeros(&[n, self.da]); test.steps];
        let mut rng = RngStream::with_substream(seed, Stream::Noise, SUB_AUUC);
        let scores: Vec<f64> = self
            .predict_step_ite(test, &on, &off, self.config.eval_samples.min(AUUC_DRAWS), &mut rng)?
            .concat();
        let treated: Vec<bool> =
            (0..test.steps).flat_map(|t| all.a[t].data().chunks(self.da).map(|r| flag.apply(r)).collect::<Vec<_>>()).collect();

        let mut rng = RngStream::with_substream(seed, Stream::Noise, SUB_PROBE);
        let z_in = self.pooled_latent(train, &mut rng)?;
        let z_out = self.pooled_latent(test, &mut rng)?;
        let a_in = stack(&StepBatch::new(train, &(0..train.len()).collect::<Vec<_>>()).a);
        let a_out = stack(&all.a);
        let probe = metrics::mi_probe(&z_in, &a_in, &z_out, &a_out)?;

        let posts = self.step_posteriors(test)?;
        let kl: f64 = posts.iter().map(|p| p.kl_to_prior().iter().sum::<f64>()).sum();

        Ok(MetricReport {
            rmse_y: metrics::rmse(&factual, &y)?,
            mae_y: metrics::mae(&factual, &y)?,
            ate_error: metrics::ate_error(&ite, &ite_true)?,
            pehe: metrics::pehe(&ite, &ite_true)?,
            auuc: metrics::auuc(&scores, &y, &treated)?,
            hsic_zt: metrics::hsic(&z_out, &a_out)?,
            mi_probe: probe.total,
            kl_bottleneck: kl / (n * test.steps) as f64,
        })
    }

    /// One draw of `z_t` per (step, trajectory), steps stacked in order.
    pub fn pooled_latent(&self, data: &TrajectoryDataset, rng: &mut RngStream) -> Result<Tensor> {
        let posts = self.step_posteriors(data)?;
        let dz = self.config.latent_dim;
        let mut out = Vec::with_capacity(posts.len() * data.len() * dz);
        for post in &posts {
            let eps = rng.normals(post.mean.len());
            for ((m, lv), e) in post.mean.data().iter().zip(post.log_var.data()).zip(eps) {
                out.push(m + (0.5 * lv).exp() * e);
            }
        }
        Ok(Tensor::matrix(posts.len() * data.len(), dz, out))
    }
}

fn stack(parts: &[Tensor]) -> Tensor {
    let cols = parts.first().map_or(0, Tensor::cols);
    let rows = parts.iter().map(Tensor::rows).sum();
    Tensor::matrix(rows, cols, parts.iter().flat_map(|p| p.data().iter().copied()).collect())
}

/// Sum over steps of the information-regularised step objective, where the
/// decoder reconstructs the (gradient-stopped) history state.
pub fn dice_loss(tape: &mut Tape, model: &DiceModel, batch: &StepBatch, eps: &[Tensor], lambda: f64) -> Result<Unrolled> {
    if eps.len() != batch.steps() {
        return Err(Error::usage(format!("{} noise tensors for {} steps", eps.len(), batch.steps())));
    }
    let hidden = model.hidden_states(tape, batch)?;
    let mut steps = Vec::with_capacity(hidden.len());
    let mut total: Option<Var> = None;
    for (t, &h) in hidden.iter().enumerate() {
        let target = tape.detach(h);
        let a = tape.constant(batch.a[t].clone());
        let y = tape.constant(batch.y[t].clone());
        let nodes = variational::step_objective(tape, &model.store, &model.heads, h, target, a, y, eps[t].clone(), lambda)?;
        total = Some(match total {
            None => nodes.terms.total,
            Some(acc) => tape.add(acc, nodes.terms.total)?,
        });
        steps.push(nodes);
    }
    let total = total.ok_or_else(|| Error::usage("trajectories have no steps"))?;
    Ok(Unrolled { hidden, steps, total })
}

/// Sum of per-step loss values.
pub fn unrolled_values(tape: &Tape, unrolled: &Unrolled) -> LossValues {
    let mut acc = LossValues::default();
    for s in &unrolled.steps {
        accumulate(&mut acc, &s.terms.values(tape), 1.0);
    }
    acc.total = tape.value(unrolled.total).item();
    acc
}

pub fn train_dice(data: &TrajectoryDataset, config: &DiceConfig) -> Result<DiceModel> {
    if data.is_empty() || data.steps == 0 {
        return Err(Error::Precondition("training set has no trajectories or no steps".into()));
    }
    let mut model = DiceModel::init(*config, data.dv, data.dx, data.da)?;
    let adam = AdamConfig::with_lr(config.learning_rate);
    let mut shuffle = RngStream::new(config.seed, Stream::Shuffle);
    let mut noise = RngStream::new(config.seed, Stream::Noise);
    let n = data.len();
    let dz = config.latent_dim;

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        shuffle.shuffle(&mut order);
        let mut acc = LossValues::default();
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let batch = StepBatch::new(data, rows);
            let eps: Vec<Tensor> = (0..data.steps)
                .map(|_| Tensor::matrix(rows.len(), dz, noise.normals(rows.len() * dz)))
                .collect();
            let mut tape = Tape::new();
            let unrolled = dice_loss(&mut tape, &model, &batch, &eps, config.lambda)?;
            let values = unrolled_values(&tape, &unrolled);
            if let Err(e) = check_batch(&values, epoch, b, rows, &model.history) {
                let per_step: Vec<String> = unrolled
                    .steps
                    .iter()
                    .map(|s| format!("{:e}", tape.value(s.terms.total).item()))
                    .collect();
                return Err(Error::Divergence(format!("{e}; per-step totals [{}]", per_step.join(", "))));
            }
            tape.backward(unrolled.total, &mut model.store)?;
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
