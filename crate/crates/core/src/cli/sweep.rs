use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::records::{history_rows, write_csv, MetricRow, HISTORY_HEADER, METRIC_HEADER};
use crate::error::{Error, Result};
use crate::metrics::{MetricReport, TreatedFlag};
use crate::sice::{train_sice, EpochRecord, SiceConfig, SurrogateEstimate};
use crate::synthgen::{gen_static, StaticDgpSpec};

pub const DEFAULT_LAMBDAS: [f64; 7] = [1e-5, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0];
pub const DEFAULT_DTS: [usize; 7] = [2, 5, 10, 12, 14, 16, 18];
pub const EXTENDED_DTS: [usize; 3] = [200, 500, 1000];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub dts: Vec<usize>,
    pub repeats: usize,
    pub base_seed: u64,
    /// Covariate and noise settings; `dt` and `seed` are set per cell.
    pub data: StaticDgpSpec,
    /// Estimator settings; `lambda` and `seed` are set per cell.
    pub model: SiceConfig,
    pub train_fraction: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            dts: DEFAULT_DTS.to_vec(),
            repeats: 3,
            base_seed: 0,
            data: StaticDgpSpec::default(),
            model: SiceConfig::default(),
            train_fraction: 0.8,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.dts.is_empty() {
            return Err(Error::config("sweep grids must be non-empty"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be >= 1"));
        }
        Ok(())
    }

    /// Grid cells in output order: d_t, then lambda, then repeat.
    pub fn cells(&self) -> Vec<(usize, f64, u64)> {
        let mut cells = Vec::new();
        for &dt in &self.dts {
            for &lambda in &self.lambdas {
                for r in 0..self.repeats as u64 {
                    cells.push((dt, lambda, self.base_seed + r));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub row: MetricRow,
    pub surrogate: SurrogateEstimate,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub lambda: f64,
    pub dt: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

pub fn run_cell(spec: &SweepSpec, dt: usize, lambda: f64, seed: u64) -> Result<SweepRecord> {
    let (_, data) = gen_static(&StaticDgpSpec { dt, seed, ..spec.data.clone() });
    let (train, test) = data.split(spec.train_fraction);
    let config = SiceConfig { lambda, seed, ..spec.model };
    let model = train_sice(&train, &config)?;
    let metrics: MetricReport = model.evaluate(&train, &test, TreatedFlag::AnyActive)?;
    Ok(SweepRecord {
        row: MetricRow { lambda, dt, seed, metrics },
        surrogate: model.surrogate_on(&test)?,
        history: model.history,
    })
}

/// Runs every cell on a pool of `jobs` workers; a failing cell is recorded
/// and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, jobs: usize) -> Result<SweepOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let cells = spec.cells();
    let results: Vec<_> = pool.install(|| {
        cells.par_iter().map(|&(dt, lambda, seed)| (dt, lambda, seed, run_cell(spec, dt, lambda, seed))).collect()
    });
    let mut out = SweepOutcome::default();
    for (dt, lambda, seed, r) in results {
        match r {
            Ok(rec) => out.records.push(rec),
            Err(e) => out.failures.push(SweepFailure { lambda, dt, seed, message: e.to_string() }),
        }
    }
    Ok(out)
}

/// Mean of each metric over the runs of every (lambda, d_t) cell, in grid order.
pub fn aggregate(records: &[SweepRecord]) -> Vec<(f64, usize, usize, [f64; 8])> {
    let mut cells: Vec<(f64, usize, usize, [f64; 8])> = Vec::new();
    for r in records {
        let v = r.row.metrics.values();
        match cells.iter_mut().find(|c| c.0 == r.row.lambda && c.1 == r.row.dt) {
            Some(c) => {
                c.2 += 1;
                for (a, b) in c.3.iter_mut().zip(v) {
                    *a += b;
                }
            }
            None => cells.push((r.row.lambda, r.row.dt, 1, v)),
        }
    }
    for c in &mut cells {
        for a in &mut c.3 {
            *a /= c.2 as f64;
        }
    }
    cells
}

/// `runs.csv`, `aggregate.csv`, `histories.csv` and `failures.csv` under `dir`.
pub fn write_sweep(dir: &Path, outcome: &SweepOutcome) -> Result<()> {
    let rows: Vec<Vec<String>> = outcome.records.iter().map(|r| r.row.fields()).collect();
    write_csv(&dir.join("runs.csv"), &METRIC_HEADER, &rows)?;

    let mut header = vec!["lambda", "dt", "runs"];
    header.extend(MetricReport::COLUMNS);
    let agg: Vec<Vec<String>> = aggregate(&outcome.records)
        .into_iter()
        .map(|(l, dt, n, v)| {
            let mut f = vec![l.to_string(), dt.to_string(), n.to_string()];
            f.extend(v.iter().map(f64::to_string));
            f
        })
        .collect();
    write_csv(&dir.join("aggregate.csv"), &header, &agg)?;

    let mut hist = Vec::new();
    for r in &outcome.records {
        let id = run_id("sice", r.row.lambda, r.row.dt, r.row.seed);
        hist.extend(history_rows(&id, &r.history));
    }
    write_csv(&dir.join("histories.csv"), &HISTORY_HEADER, &hist)?;

    let fails: Vec<Vec<String>> = outcome
        .failures
        .iter()
        .map(|f| vec![f.lambda.to_string(), f.dt.to_string(), f.seed.to_string(), f.message.clone()])
        .collect();
    write_csv(&dir.join("failures.csv"), &["lambda", "dt", "seed", "error"], &fails)
}

pub fn run_id(model: &str, lambda: f64, dt: usize, seed: u64) -> String {
    format!("{model}-lambda{lambda:e}-dt{dt}-seed{seed}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepSpec {
        SweepSpec {
            lambdas: vec![1e-3, 1.0],
            dts: vec![2],
            repeats: 2,
            data: StaticDgpSpec { n: 120, dx: 3, ..Default::default() },
            model: SiceConfig { latent_dim: 2, width: 8, epochs: 2, eval_samples: 4, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn cell_count_and_order() {
        let spec = SweepSpec { dts: vec![2], repeats: 3, ..Default::default() };
        assert_eq!(spec.cells().len(), 21);
        let out = run_sweep(&tiny(), 2).unwrap();
        assert_eq!(out.records.len(), 4);
        assert!(out.failures.is_empty());
        let seeds: Vec<u64> = out.records.iter().map(|r| r.row.seed).collect();
        assert_eq!(seeds, vec![0, 1, 0, 1]);
        assert_eq!(aggregate(&out.records).len(), 2);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        assert_eq!(run_sweep(&tiny(), 1).unwrap(), run_sweep(&tiny(), 3).unwrap());
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(SweepSpec { lambdas: vec![], ..Default::default() }.validate().is_err());
        assert!(SweepSpec { repeats: 0, ..Default::default() }.validate().is_err());
    }
}
