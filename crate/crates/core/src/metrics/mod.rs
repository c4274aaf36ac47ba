//! Evaluation metrics: factual and causal errors, uplift ranking, kernel
//! dependence and a classifier-based mutual information probe.

mod auuc;
mod errors;
mod hsic;
mod probe;

pub use auuc::{auuc, uplift_curve, TreatedFlag};
pub use errors::{ate_error, mae, pehe, rmse};
pub use hsic::{hsic, median_bandwidth, BANDWIDTH_FLOOR};
pub use probe::{binary_entropy, mi_probe, LogisticProbe, ProbeEstimate, MI_PROBE_CONVENTION};

use serde::{Deserialize, Serialize};

/// One evaluation of a fitted model on held-out data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub rmse_y: f64,
    pub mae_y: f64,
    pub ate_error: f64,
    pub pehe: f64,
    pub auuc: f64,
    pub hsic_zt: f64,
    pub mi_probe: f64,
    /// Mean KL from the encoder posterior to the prior.
    pub kl_bottleneck: f64,
}

impl MetricReport {
    pub const COLUMNS: [&'static str; 8] =
        ["rmse_y", "mae_y", "ate_error", "pehe", "auuc", "hsic_zt", "mi_probe", "kl_bottleneck"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.rmse_y,
            self.mae_y,
            self.ate_error,
            self.pehe,
            self.auuc,
            self.hsic_zt,
            self.mi_probe,
            self.kl_bottleneck,
        ]
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        Self::COLUMNS.iter().position(|c| *c == column).map(|i| self.values()[i])
    }
}
