use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Smallest Gaussian bandwidth; used when the median pairwise distance is 0.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

fn squared_distances(x: &Tensor) -> Vec<f64> {
    let n = x.rows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    d
}

/// Median of the pairwise (i < j) Euclidean distances, floored.
pub fn median_bandwidth(sq: &[f64], n: usize) -> f64 {
    let mut upper: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq[i * n + j].sqrt())
        .collect();
    if upper.is_empty() {
        return BANDWIDTH_FLOOR;
    }
    let mid = upper.len() / 2;
    let (_, m, _) = upper.select_nth_unstable_by(mid, f64::total_cmp);
    let mut median = *m;
    if upper.len().is_multiple_of(2) {
        let lower = upper[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        median = 0.5 * (median + lower);
    }
    median.max(BANDWIDTH_FLOOR)
}

fn gaussian_gram(x: &Tensor) -> Vec<f64> {
    let n = x.rows();
    let sq = squared_distances(x);
    let sigma = median_bandwidth(&sq, n);
    let denom = 2.0 * sigma * sigma;
    sq.into_iter().map(|d| (-d / denom).exp()).collect()
}

/// Biased HSIC, `trace(K H L H) / n^2`, Gaussian kernels with median-heuristic
/// bandwidths chosen separately for each block.
pub fn hsic(z: &Tensor, t: &Tensor) -> Result<f64> {
    let n = z.rows();
    if t.rows() != n {
        return Err(Error::usage(format!("hsic: {n} rows of z but {} of t", t.rows())));
    }
    if n < 4 {
        return Err(Error::usage(format!("hsic needs at least 4 samples, got {n}")));
    }
    let k = gaussian_gram(z);
    let l = gaussian_gram(t);

    // H K H entrywise: K_ij - rowmean_i - colmean_j + grand mean
    let nf = n as f64;
    let row_mean: Vec<f64> = (0..n).map(|i| k[i * n..(i + 1) * n].iter().sum::<f64>() / nf).collect();
    let grand = row_mean.iter().sum::<f64>() / nf;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let kc = k[i * n + j] - row_mean[i] - row_mean[j] + grand;
            acc += kc * l[i * n + j];
        }
    }
    Ok(acc / (nf * nf))
}
