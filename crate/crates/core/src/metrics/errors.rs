use crate::error::{Error, Result};

fn paired<'a>(pred: &'a [f64], truth: &'a [f64]) -> Result<impl Iterator<Item = f64> + 'a> {
    if pred.is_empty() {
        return Err(Error::usage("metric over empty input"));
    }
    if pred.len() != truth.len() {
        return Err(Error::usage(format!(
            "metric inputs differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    Ok(pred.iter().zip(truth).map(|(p, t)| p - t))
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let n = pred.len() as f64;
    Ok((paired(pred, truth)?.map(|d| d * d).sum::<f64>() / n).sqrt())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    let n = pred.len() as f64;
    Ok(paired(pred, truth)?.map(f64::abs).sum::<f64>() / n)
}

/// Root-mean-square error of individual effects.
pub fn pehe(ite_hat: &[f64], ite_true: &[f64]) -> Result<f64> {
    rmse(ite_hat, ite_true)
}

/// `|mean(ite_hat) - mean(ite_true)|`.
pub fn ate_error(ite_hat: &[f64], ite_true: &[f64]) -> Result<f64> {
    let n = ite_hat.len() as f64;
    Ok((paired(ite_hat, ite_true)?.sum::<f64>() / n).abs())
}
