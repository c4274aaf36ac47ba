use crate::error::{Error, Result};

/// Reduction of a treatment vector to the binary arm used by uplift curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TreatedFlag {
    /// Treated when any component is active.
    #[default]
    AnyActive,
    /// Treated when the given component is active.
    Component(usize),
}

impl TreatedFlag {
    pub fn apply(self, t: &[f64]) -> bool {
        match self {
            TreatedFlag::AnyActive => t.iter().any(|&v| v != 0.0),
            TreatedFlag::Component(j) => t.get(j).is_some_and(|&v| v != 0.0),
        }
    }
}

/// Uplift curve over prefixes of the ranking by descending score (stable, so
/// ties keep index order). Point `k` is
/// `(mean_treated(y) - mean_control(y)) * k / n` over the top `k` units; a
/// prefix missing either arm repeats the last defined point (0 before any).
pub fn uplift_curve(scores: &[f64], outcomes: &[f64], treated: &[bool]) -> Result<Vec<f64>> {
    let n = scores.len();
    if n == 0 {
        return Err(Error::usage("uplift curve over empty input"));
    }
    if outcomes.len() != n || treated.len() != n {
        return Err(Error::usage("uplift curve inputs differ in length"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut sum_t, mut sum_c, mut n_t, mut n_c) = (0.0, 0.0, 0usize, 0usize);
    let mut last = 0.0;
    let mut curve = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        if treated[i] {
            sum_t += outcomes[i];
            n_t += 1;
        } else {
            sum_c += outcomes[i];
            n_c += 1;
        }
        if n_t > 0 && n_c > 0 {
            last = (sum_t / n_t as f64 - sum_c / n_c as f64) * (k + 1) as f64 / n as f64;
        }
        curve.push(last);
    }
    Ok(curve)
}

/// Trapezoidal area under [`uplift_curve`] with the x-axis normalised to [0, 1].
pub fn auuc(scores: &[f64], outcomes: &[f64], treated: &[bool]) -> Result<f64> {
    let curve = uplift_curve(scores, outcomes, treated)?;
    let n = curve.len() as f64;
    let mut prev = 0.0;
    let mut area = 0.0;
    for &c in &curve {
        area += 0.5 * (prev + c);
        prev = c;
    }
    Ok(area / n)
}
