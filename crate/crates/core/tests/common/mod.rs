#![allow(dead_code)]

use infreg::autodiff::{ParamStore, Tensor};
use infreg::synthgen::{DynamicDgp, StaticDgp, StaticDataset, TrajectoryDataset};

/// Largest normwise relative error per parameter block between the stored
/// analytic gradients and central differences of `loss`.
pub fn fd_block_errors(store: &mut ParamStore, step: f64, loss: impl Fn(&ParamStore) -> f64) -> Vec<(String, f64)> {
    let ids: Vec<_> = store.ids().collect();
    let mut out = Vec::new();
    for id in ids {
        let analytic = store.grad(id).expect("analytic gradient present").data().to_vec();
        let mut numeric = vec![0.0; analytic.len()];
        for (k, g) in numeric.iter_mut().enumerate() {
            let orig = store.value(id).data()[k];
            store.value_mut(id).data_mut()[k] = orig + step;
            let up = loss(store);
            store.value_mut(id).data_mut()[k] = orig - step;
            let down = loss(store);
            store.value_mut(id).data_mut()[k] = orig;
            *g = (up - down) / (2.0 * step);
        }
        out.push((store.name(id).to_string(), relative_error(&analytic, &numeric)));
    }
    out
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Static ground truth `(t - t_alt) . (beta + Gamma x) / sqrt(dt)` from the
/// frozen simulator parameters.
pub fn static_oracle(dgp: &StaticDgp, data: &StaticDataset) -> Vec<f64> {
    let dt = data.t.cols();
    (0..data.y.len())
        .map(|i| {
            let x = data.x.row(i);
            (0..dt)
                .map(|j| (data.t.at(i, j) - data.t_alt.at(i, j)) * (dgp.beta[j] + dot(&dgp.gamma[j], x)))
                .sum::<f64>()
                / (dt as f64).sqrt()
        })
        .collect()
}

/// One-step ground truth of the taken action against its complement, `[t][i]`.
pub fn dynamic_oracle(dgp: &DynamicDgp, data: &TrajectoryDataset) -> Vec<Vec<f64>> {
    let da = data.da;
    (0..data.steps)
        .map(|t| {
            data.trajectories
                .iter()
                .map(|tr| {
                    let (x, a) = (tr.x.row(t), tr.a.row(t));
                    (0..da).map(|j| (2.0 * a[j] - 1.0) * (dgp.beta[j] + dot(&dgp.gamma[j], x))).sum::<f64>()
                        / (da as f64).sqrt()
                })
                .collect()
        })
        .collect()
}

pub fn rms_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn mean_diff_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len() as f64).abs()
}

pub fn complement(t: &Tensor) -> Tensor {
    Tensor::matrix(t.rows(), t.cols(), t.data().iter().map(|v| 1.0 - v).collect())
}

/// Mutual information of a joint table `p[z][t]` in nats.
pub fn table_info(p: &[Vec<f64>]) -> f64 {
    let pz: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let pt: Vec<f64> = (0..p[0].len()).map(|t| p.iter().map(|r| r[t]).sum()).collect();
    let mut i = 0.0;
    for (z, row) in p.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            if v > 0.0 {
                i += v * (v / (pz[z] * pt[t])).ln();
            }
        }
    }
    i
}
