//! Command-line driver: dataset generation, training, sweeps, bound checks
//! and report tables.

mod records;
mod report;
mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::bounds::{run_bounds_trials, BoundsSummary};
use crate::dice::{train_dice, DiceConfig};
use crate::error::{Error, Result};
use crate::metrics::{TreatedFlag, MI_PROBE_CONVENTION};
use crate::sice::{train_sice, SiceConfig};
use crate::synthgen::{
    gen_dynamic, gen_static, read_dynamic, read_static, sidecar_path, write_dynamic, write_json, write_static,
    DynamicDgpSpec, StaticDgpSpec,
};

pub use records::{read_metric_rows, MetricRow, RunRecord, HISTORY_HEADER, METRIC_HEADER};
pub use report::{higher_is_better, load_runs, pivot, write_report, Axis, Marker, Pivot};
pub use sweep::{
    aggregate, run_cell, run_id, run_sweep, write_sweep, SweepFailure, SweepOutcome, SweepRecord, SweepSpec,
    DEFAULT_DTS, DEFAULT_LAMBDAS, EXTENDED_DTS,
};

pub const SEED_ENV: &str = "INFREG_SEED";

#[derive(Debug, Parser)]
#[command(name = "infreg", version, about = "Information-regularized counterfactual estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with a sidecar of frozen simulator parameters.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Train one model and write its run record.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Train the static model over a lambda x d_t grid.
    Sweep(SweepArgs),
    /// Check the information-theoretic inequalities on random finite tables.
    Bounds(BoundsArgs),
    /// Pivot tables over every run found under a directory.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    Static(StaticGenArgs),
    Dynamic(DynamicGenArgs),
    NhanesLike(NhanesGenArgs),
}

#[derive(Debug, Args)]
pub struct StaticGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dx: Option<usize>,
    #[arg(long)]
    pub dt: Option<usize>,
    #[arg(long)]
    pub confounding: Option<f64>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub assign_offset: Option<f64>,
    #[arg(long)]
    pub active_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DynamicGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dx: Option<usize>,
    #[arg(long)]
    pub dv: Option<usize>,
    #[arg(long)]
    pub da: Option<usize>,
    #[arg(long)]
    pub confounding: Option<f64>,
    #[arg(long)]
    pub noise_x: Option<f64>,
    #[arg(long)]
    pub noise_y: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct NhanesGenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    Sice(SiceTrainArgs),
    Dice(DiceTrainArgs),
}

#[derive(Debug, Args)]
pub struct TrainCommon {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for run.json, metrics.csv, history.csv and params.txt.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with any subset of the model configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Monte Carlo draws of z per unit for effect estimates.
    #[arg(long = "samples")]
    pub eval_samples: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// `any` or `component:J`: which treatment vectors count as treated for AUUC.
    #[arg(long, default_value = "any", value_parser = parse_flag)]
    pub treated: TreatedFlag,
}

#[derive(Debug, Args)]
pub struct SiceTrainArgs {
    #[command(flatten)]
    pub common: TrainCommon,
    #[arg(long)]
    pub width: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DiceTrainArgs {
    #[command(flatten)]
    pub common: TrainCommon,
    #[arg(long)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with any subset of the sweep specification.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub dts: Option<Vec<usize>>,
    /// Append the high-dimensional treatment sizes to the d_t grid.
    #[arg(long)]
    pub extended: bool,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Seed of the first repeat; repeat r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dx: Option<usize>,
    #[arg(long)]
    pub noise_sd: Option<f64>,
    #[arg(long)]
    pub confounding: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long = "lr")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long = "samples")]
    pub eval_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for runs.csv and metrics.csv.
    pub dir: PathBuf,
    /// Where the report tables go; defaults to the run directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_flag(s: &str) -> std::result::Result<TreatedFlag, String> {
    if s == "any" {
        return Ok(TreatedFlag::AnyActive);
    }
    s.strip_prefix("component:")
        .and_then(|j| j.parse().ok())
        .map(TreatedFlag::Component)
        .ok_or_else(|| format!("expected `any` or `component:J`, got {s:?}"))
}

fn flag_name(flag: TreatedFlag) -> String {
    match flag {
        TreatedFlag::AnyActive => "any".to_string(),
        TreatedFlag::Component(j) => format!("component:{j}"),
    }
}

/// Seed used when no flag or config file sets one.
pub fn default_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::config(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(0),
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn merge(base: &mut Value, over: Value, at: &str) -> Result<()> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                let slot = b.get_mut(&k).ok_or_else(|| Error::config(format!("unknown configuration key {path}")))?;
                if slot.is_object() {
                    merge(slot, v, &path)?;
                } else {
                    *slot = v;
                }
            }
            Ok(())
        }
        (_, _) => Err(Error::config(format!("configuration {} must be an object", if at.is_empty() { "file" } else { at }))),
    }
}

/// Defaults, overlaid by the config file, overlaid by explicit flags.
pub fn layered<T: Serialize + DeserializeOwned>(defaults: &T, file: Option<&Path>, flags: Map<String, Value>) -> Result<T> {
    let mut v = to_value(defaults);
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Schema { path: path.to_path_buf(), message: e.to_string() })?;
        merge(&mut v, parsed, "")?;
    }
    merge(&mut v, Value::Object(flags), "")?;
    serde_json::from_value(v).map_err(|e| Error::config(e.to_string()))
}

#[derive(Default)]
struct Flags(Map<String, Value>);

impl Flags {
    fn set<T: Serialize>(mut self, key: &str, v: Option<T>) -> Self {
        if let Some(v) = v {
            self.0.insert(key.to_string(), to_value(&v));
        }
        self
    }

    fn nest(mut self, key: &str, inner: Flags) -> Self {
        if !inner.0.is_empty() {
            self.0.insert(key.to_string(), Value::Object(inner.0));
        }
        self
    }
}

fn seeded<T: Serialize + DeserializeOwned>(defaults: T) -> Result<T> {
    layered(&defaults, None, Flags::default().set("seed", Some(default_seed()?)).0)
}

fn cmd_gen(cmd: GenCommand) -> Result<String> {
    let (out, sidecar) = match cmd {
        GenCommand::Static(a) => {
            let flags = Flags::default()
                .set("n", a.n)
                .set("dx", a.dx)
                .set("dt", a.dt)
                .set("confounding", a.confounding)
                .set("noise_sd", a.noise_sd)
                .set("assign_offset", a.assign_offset)
                .set("active_fraction", a.active_fraction)
                .set("seed", a.seed);
            let spec: StaticDgpSpec = layered(&seeded(StaticDgpSpec::default())?, None, flags.0)?;
            let (dgp, data) = gen_static(&spec);
            write_static(&a.out, &data)?;
            write_json(&sidecar_path(&a.out), &dgp)?;
            (a.out, format!("{} rows, dx={}, dt={}", data.len(), spec.dx, spec.dt))
        }
        GenCommand::NhanesLike(a) => {
            let seed = match a.seed {
                Some(s) => s,
                None => default_seed()?,
            };
            let spec = StaticDgpSpec { n: a.n.unwrap_or(StaticDgpSpec::default().n), ..StaticDgpSpec::nhanes_like(seed) };
            let (dgp, data) = gen_static(&spec);
            write_static(&a.out, &data)?;
            write_json(&sidecar_path(&a.out), &dgp)?;
            (a.out, format!("{} rows, dx={}, dt={}", data.len(), spec.dx, spec.dt))
        }
        GenCommand::Dynamic(a) => {
            let flags = Flags::default()
                .set("n", a.n)
                .set("steps", a.steps)
                .set("dx", a.dx)
                .set("dv", a.dv)
                .set("da", a.da)
                .set("confounding", a.confounding)
                .set("noise_x", a.noise_x)
                .set("noise_y", a.noise_y)
                .set("seed", a.seed);
            let spec: DynamicDgpSpec = layered(&seeded(DynamicDgpSpec::default())?, None, flags.0)?;
            let (dgp, data) = gen_dynamic(&spec);
            write_dynamic(&a.out, &data)?;
            write_json(&sidecar_path(&a.out), &dgp)?;
            (a.out, format!("{} trajectories x {} steps", data.len(), data.steps))
        }
    };
    Ok(format!("wrote {} ({sidecar})", out.display()))
}

fn common_flags(c: &TrainCommon) -> Flags {
    Flags::default()
        .set("seed", c.seed)
        .set("lambda", c.lambda)
        .set("epochs", c.epochs)
        .set("batch_size", c.batch_size)
        .set("learning_rate", c.learning_rate)
        .set("latent_dim", c.latent_dim)
        .set("eval_samples", c.eval_samples)
}

struct RunOutput<'a> {
    model: &'a str,
    common: &'a TrainCommon,
    config: Value,
    lambda: f64,
    dt: usize,
    seed: u64,
    history: Vec<crate::sice::EpochRecord>,
    metrics: crate::metrics::MetricReport,
    surrogate: Option<crate::sice::SurrogateEstimate>,
    params: String,
    seconds: f64,
}

fn write_run(r: RunOutput<'_>) -> Result<String> {
    let out = &r.common.out;
    records::ensure_dir(out)?;
    let id = run_id(r.model, r.lambda, r.dt, r.seed);
    let row = MetricRow { lambda: r.lambda, dt: r.dt, seed: r.seed, metrics: r.metrics };
    records::write_csv(&out.join("metrics.csv"), &METRIC_HEADER, &[row.fields()])?;
    records::write_csv(&out.join("history.csv"), &HISTORY_HEADER, &records::history_rows(&id, &r.history))?;
    records::write_text(&out.join("params.txt"), &r.params)?;
    let record = RunRecord {
        run_id: id.clone(),
        model: r.model.to_string(),
        data: r.common.data.display().to_string(),
        train_fraction: r.common.train_fraction,
        treated_flag: flag_name(r.common.treated),
        config: r.config,
        history: r.history,
        metrics: r.metrics,
        surrogate_mi: r.surrogate,
        mi_probe_convention: MI_PROBE_CONVENTION.to_string(),
        wall_clock_seconds: r.seconds,
    };
    write_json(&out.join("run.json"), &record)?;
    Ok(format!(
        "{id}: pehe={} ate_error={} rmse_y={} -> {}",
        r.metrics.pehe,
        r.metrics.ate_error,
        r.metrics.rmse_y,
        out.display()
    ))
}

fn check_fraction(f: f64) -> Result<()> {
    if f > 0.0 && f < 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("train fraction must lie in (0, 1), got {f}")))
    }
}

fn cmd_train(cmd: TrainCommand) -> Result<String> {
    match cmd {
        TrainCommand::Sice(a) => {
            let c = &a.common;
            check_fraction(c.train_fraction)?;
            let config: SiceConfig =
                layered(&seeded(SiceConfig::default())?, c.config.as_deref(), common_flags(c).set("width", a.width).0)?;
            config.validate()?;
            let data = read_static(&c.data)?;
            let (train, test) = data.split(c.train_fraction);
            let start = Instant::now();
            let model = train_sice(&train, &config)?;
            let metrics = model.evaluate(&train, &test, c.treated)?;
            let surrogate = model.surrogate_on(&test)?;
            write_run(RunOutput {
                model: "sice",
                common: c,
                config: to_value(&config),
                lambda: config.lambda,
                dt: data.dt(),
                seed: config.seed,
                params: model.store.dump(),
                history: model.history,
                metrics,
                surrogate: Some(surrogate),
                seconds: start.elapsed().as_secs_f64(),
            })
        }
        TrainCommand::Dice(a) => {
            let c = &a.common;
            check_fraction(c.train_fraction)?;
            let config: DiceConfig =
                layered(&seeded(DiceConfig::default())?, c.config.as_deref(), common_flags(c).set("hidden", a.hidden).0)?;
            config.validate()?;
            let data = read_dynamic(&c.data)?;
            let (train, test) = data.split(c.train_fraction);
            let start = Instant::now();
            let model = train_dice(&train, &config)?;
            let metrics = model.evaluate(&train, &test, c.treated)?;
            write_run(RunOutput {
                model: "dice",
                common: c,
                config: to_value(&config),
                lambda: config.lambda,
                dt: data.da,
                seed: config.seed,
                params: model.store.dump(),
                history: model.history,
                metrics,
                surrogate: None,
                seconds: start.elapsed().as_secs_f64(),
            })
        }
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<String> {
    let defaults = SweepSpec { base_seed: default_seed()?, ..SweepSpec::default() };
    let data = Flags::default()
        .set("n", a.n)
        .set("dx", a.dx)
        .set("noise_sd", a.noise_sd)
        .set("confounding", a.confounding);
    let model = Flags::default()
        .set("epochs", a.epochs)
        .set("batch_size", a.batch_size)
        .set("learning_rate", a.learning_rate)
        .set("latent_dim", a.latent_dim)
        .set("width", a.width)
        .set("eval_samples", a.eval_samples);
    let flags = Flags::default()
        .set("lambdas", a.lambdas)
        .set("dts", a.dts)
        .set("repeats", a.repeats)
        .set("base_seed", a.seed)
        .nest("data", data)
        .nest("model", model);
    let mut spec: SweepSpec = layered(&defaults, a.config.as_deref(), flags.0)?;
    if a.extended {
        spec.dts.extend(EXTENDED_DTS.iter().filter(|d| !spec.dts.contains(d)).collect::<Vec<_>>());
    }
    spec.validate()?;
    spec.model.validate()?;
    if a.jobs == 0 {
        return Err(Error::config("--jobs must be >= 1"));
    }
    let outcome = run_sweep(&spec, a.jobs)?;
    write_sweep(&a.out, &outcome)?;
    write_json(&a.out.join("sweep.json"), &spec)?;
    let mut msg = format!(
        "{} of {} runs completed -> {}",
        outcome.records.len(),
        spec.cells().len(),
        a.out.display()
    );
    for f in &outcome.failures {
        msg.push_str(&format!("\nfailed lambda={} dt={} seed={}: {}", f.lambda, f.dt, f.seed, f.message));
    }
    Ok(msg)
}

pub const BOUNDS_HEADER: [&str; 8] =
    ["checker", "instances", "links", "vacuous_links", "violations", "worst_slack", "tolerance", "status"];

/// One row per checker plus the adversarial search and the independence
/// certificate; empty when no trials ran.
pub fn bounds_rows(s: &BoundsSummary) -> Vec<Vec<String>> {
    if s.trials == 0 {
        return Vec::new();
    }
    let status = |ok: bool| if ok { "pass" } else { "fail" }.to_string();
    let mut rows: Vec<Vec<String>> = s
        .checkers
        .iter()
        .map(|c| {
            vec![
                c.checker.clone(),
                c.instances.to_string(),
                c.links.to_string(),
                c.vacuous_links.to_string(),
                c.violations.to_string(),
                c.worst_slack.to_string(),
                c.tolerance.to_string(),
                status(c.violations == 0),
            ]
        })
        .collect();
    let adv_slack = 1.0 - s.adversarial_max_ratio;
    rows.push(vec![
        "risk_gap_adversarial".into(),
        "1".into(),
        "1".into(),
        "0".into(),
        usize::from(adv_slack < -1e-9).to_string(),
        adv_slack.to_string(),
        1e-9_f64.to_string(),
        status(adv_slack >= -1e-9),
    ]);
    let indep_ok = s.independence_max_gap == 0.0 && s.independence_max_bound == 0.0;
    rows.push(vec![
        "independence_equality".into(),
        s.trials.to_string(),
        (2 * s.trials).to_string(),
        "0".into(),
        usize::from(!indep_ok).to_string(),
        (0.0 - s.independence_max_gap.max(s.independence_max_bound)).to_string(),
        "0".into(),
        status(indep_ok),
    ]);
    rows
}

fn cmd_bounds(a: BoundsArgs) -> Result<String> {
    let seed = match a.seed {
        Some(s) => s,
        None => default_seed()?,
    };
    let summary = if a.trials == 0 {
        BoundsSummary {
            trials: 0,
            seed,
            checkers: Vec::new(),
            adversarial_max_ratio: 0.0,
            independence_max_gap: 0.0,
            independence_max_bound: 0.0,
        }
    } else {
        run_bounds_trials(a.trials, seed)?
    };
    let rows = bounds_rows(&summary);
    let failed = rows.iter().filter(|r| r[7] == "fail").count();
    let text = match &a.out {
        Some(path) => {
            records::write_csv(path, &BOUNDS_HEADER, &rows)?;
            format!("{} checks, {failed} failing -> {}", rows.len(), path.display())
        }
        None => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(BOUNDS_HEADER).and_then(|_| rows.iter().try_for_each(|r| w.write_record(r))).map_err(
                |e| Error::io("<stdout>", std::io::Error::other(e.to_string())),
            )?;
            String::from_utf8(w.into_inner().map_err(|e| Error::io("<stdout>", e.into_error()))?)
                .expect("csv output is utf-8")
                .trim_end()
                .to_string()
        }
    };
    if failed > 0 {
        println!("{text}");
        return Err(Error::Validation(format!("{failed} bound checks failed")));
    }
    Ok(text)
}

fn cmd_report(a: ReportArgs) -> Result<String> {
    let out = a.out.unwrap_or_else(|| a.dir.clone());
    write_report(&a.dir, &out)
}

/// Runs a parsed command and returns the text destined for stdout.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Gen(c) => cmd_gen(c),
        Command::Train(c) => cmd_train(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{text}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"lambda": 0.5, "epochs": 7}"#).unwrap();
        let flags = Flags::default().set("lambda", Some(0.25)).0;
        let c: SiceConfig = layered(&SiceConfig::default(), Some(&file), flags).unwrap();
        assert_eq!(c.lambda, 0.25);
        assert_eq!(c.epochs, 7);
        assert_eq!(c.width, SiceConfig::default().width);
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"lamda": 0.5}"#).unwrap();
        let err = layered(&SiceConfig::default(), Some(&file), Map::new()).unwrap_err();
        assert!(err.to_string().contains("lamda"));
    }

    #[test]
    fn nested_sweep_overrides() {
        let flags = Flags::default()
            .nest("model", Flags::default().set("epochs", Some(3usize)))
            .nest("data", Flags::default());
        let s: SweepSpec = layered(&SweepSpec::default(), None, flags.0).unwrap();
        assert_eq!(s.model.epochs, 3);
        assert_eq!(s.data, StaticDgpSpec::default());
    }

    #[test]
    fn treated_flag_parsing() {
        assert_eq!(parse_flag("any").unwrap(), TreatedFlag::AnyActive);
        assert_eq!(parse_flag("component:3").unwrap(), TreatedFlag::Component(3));
        assert!(parse_flag("component:x").is_err());
    }

    #[test]
    fn zero_trials_is_empty() {
        let s = BoundsSummary {
            trials: 0,
            seed: 0,
            checkers: Vec::new(),
            adversarial_max_ratio: 0.0,
            independence_max_gap: 0.0,
            independence_max_bound: 0.0,
        };
        assert!(bounds_rows(&s).is_empty());
    }
}
