use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricReport;
use crate::sice::{EpochRecord, SurrogateEstimate};

/// Per-run metrics columns shared by `train` and `sweep`.
pub const METRIC_HEADER: [&str; 11] = [
    "lambda",
    "dt",
    "seed",
    "rmse_y",
    "mae_y",
    "ate_error",
    "pehe",
    "auuc",
    "hsic_zt",
    "mi_probe",
    "kl_bottleneck",
];

pub const HISTORY_HEADER: [&str; 6] = ["run_id", "epoch", "total", "supervised", "recon", "kl"];

/// Everything needed to reproduce and audit one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: String,
    pub model: String,
    pub data: String,
    pub train_fraction: f64,
    pub treated_flag: String,
    /// Effective configuration after defaults, config file and flags.
    pub config: serde_json::Value,
    pub history: Vec<EpochRecord>,
    pub metrics: MetricReport,
    pub surrogate_mi: Option<SurrogateEstimate>,
    pub mi_probe_convention: String,
    pub wall_clock_seconds: f64,
}

/// One row of [`METRIC_HEADER`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub lambda: f64,
    pub dt: usize,
    pub seed: u64,
    pub metrics: MetricReport,
}

impl MetricRow {
    pub fn fields(&self) -> Vec<String> {
        let mut f = vec![self.lambda.to_string(), self.dt.to_string(), self.seed.to_string()];
        f.extend(self.metrics.values().iter().map(f64::to_string));
        f
    }

    pub fn parse(path: &Path, record: &csv::StringRecord) -> Result<Self> {
        let schema = |column: &str, value: &str| Error::Schema {
            path: path.to_path_buf(),
            message: format!("column {column}: cannot parse {value:?}"),
        };
        let get = |i: usize| record.get(i).unwrap_or("");
        let num = |i: usize| get(i).parse::<f64>().map_err(|_| schema(METRIC_HEADER[i], get(i)));
        let mut values = [0.0; 8];
        for (k, v) in values.iter_mut().enumerate() {
            *v = num(k + 3)?;
        }
        Ok(Self {
            lambda: num(0)?,
            dt: get(1).parse().map_err(|_| schema("dt", get(1)))?,
            seed: get(2).parse().map_err(|_| schema("seed", get(2)))?,
            metrics: MetricReport {
                rmse_y: values[0],
                mae_y: values[1],
                ate_error: values[2],
                pehe: values[3],
                auuc: values[4],
                hsic_zt: values[5],
                mi_probe: values[6],
                kl_bottleneck: values[7],
            },
        })
    }
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header.iter().map(AsRef::as_ref)).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn history_rows(run_id: &str, history: &[EpochRecord]) -> Vec<Vec<String>> {
    history
        .iter()
        .map(|r| {
            vec![
                run_id.to_string(),
                r.epoch.to_string(),
                r.total.to_string(),
                r.supervised.to_string(),
                r.recon.to_string(),
                r.kl.to_string(),
            ]
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads every row of a metrics CSV, checking the header first.
pub fn read_metric_rows(path: &Path) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers().map_err(|e| csv_io(path, e))?.clone();
    for (i, expected) in METRIC_HEADER.iter().enumerate() {
        if header.get(i) != Some(*expected) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!("column {i} should be {expected}, found {:?}", header.get(i)),
            });
        }
    }
    r.records()
        .map(|rec| rec.map_err(|e| csv_io(path, e)).and_then(|rec| MetricRow::parse(path, &rec)))
        .collect()
}
