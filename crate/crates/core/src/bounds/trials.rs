use rayon::prelude::*;
use serde::Serialize;

use super::checks::{
    check_bayes_binary, check_fano, check_mi_decomposition, check_pinsker_chain, check_probe_bound, check_risk_gap,
    worst_profile_ratio, CheckReport,
};
use super::tables::{ChannelSpec, DiscreteJoint, LossProfileTable};
use crate::error::Result;
use crate::rng::{RngStream, Stream};

/// Largest support per axis in randomized trials.
pub const MAX_SUPPORT: usize = 12;
pub const PROFILES_PER_JOINT: usize = 10;
const DECODERS_PER_TRIAL: usize = 2;
const PROBES_PER_TRIAL: usize = 2;

pub const CHECKERS: [(&str, f64); 6] = [
    ("pinsker_chain", 1e-9),
    ("risk_gap", 1e-9),
    ("bayes_binary", 1e-12),
    ("fano", 1e-12),
    ("mi_decomposition", 1e-12),
    ("probe_bound", 1e-12),
];

fn tolerance(checker: &str) -> f64 {
    CHECKERS.iter().find(|(c, _)| *c == checker).map_or(1e-9, |(_, t)| *t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckerSummary {
    pub checker: String,
    pub instances: usize,
    pub links: usize,
    pub vacuous_links: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsSummary {
    pub trials: usize,
    pub seed: u64,
    pub checkers: Vec<CheckerSummary>,
    /// Largest `|gap| / bound` seen by the adversarial profile search.
    pub adversarial_max_ratio: f64,
    /// Largest `|gap|` and `bound` over exactly independent joints.
    pub independence_max_gap: f64,
    pub independence_max_bound: f64,
}

impl BoundsSummary {
    pub fn total_violations(&self) -> usize {
        self.checkers.iter().map(|c| c.violations).sum()
    }

    pub fn worst_slack(&self) -> f64 {
        self.checkers.iter().map(|c| c.worst_slack).fold(f64::INFINITY, f64::min)
    }
}

fn support(rng: &mut RngStream, lo: usize, hi: usize) -> usize {
    lo + rng.index(hi - lo + 1)
}

fn random_joint(rng: &mut RngStream, rows: usize, cols: usize) -> DiscreteJoint {
    let mut p = rng.dirichlet(rows * cols, 1.0);
    renormalize(&mut p);
    DiscreteJoint::new(rows, cols, p).expect("dirichlet draw is a distribution")
}

fn random_rows(rng: &mut RngStream, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows)
        .flat_map(|_| {
            let mut r = rng.dirichlet(cols, 1.0);
            renormalize(&mut r);
            r
        })
        .collect()
}

/// Pushes a floating-point simplex draw back onto total mass 1.
fn renormalize(p: &mut [f64]) {
    let s: f64 = p.iter().sum();
    for v in p.iter_mut() {
        *v /= s;
    }
}

/// Distribution with entries that are multiples of 1/64, so products and sums
/// of such tables are exact in binary floating point.
fn dyadic(rng: &mut RngStream, n: usize) -> Vec<f64> {
    let mut counts = vec![0u32; n];
    for _ in 0..64 {
        counts[rng.index(n)] += 1;
    }
    counts.iter().map(|&c| f64::from(c) / 64.0).collect()
}

#[derive(Debug, Default)]
struct TrialOutcome {
    reports: Vec<CheckReport>,
    independence_gap: f64,
    independence_bound: f64,
}

fn run_trial(seed: u64, index: u64) -> Result<TrialOutcome> {
    let mut rng = RngStream::with_substream(seed, Stream::Trials, index);
    let mut out = TrialOutcome::default();

    let (nz, nt) = (support(&mut rng, 2, MAX_SUPPORT), support(&mut rng, 2, MAX_SUPPORT));
    let joint = random_joint(&mut rng, nz, nt);
    out.reports.push(check_pinsker_chain(&joint)?);

    for _ in 0..PROFILES_PER_JOINT {
        let lambda = 0.1 + 4.9 * rng.uniform();
        let values = (0..nz * nt).map(|_| lambda * (2.0 * rng.uniform() - 1.0)).collect();
        let profile = LossProfileTable::new(nz, nt, values, lambda)?;
        out.reports.push(check_risk_gap(&joint, &profile)?.report());
    }

    let (iz, it) = (support(&mut rng, 2, MAX_SUPPORT), support(&mut rng, 2, MAX_SUPPORT));
    let (pz, pi) = (dyadic(&mut rng, iz), dyadic(&mut rng, it));
    let indep = DiscreteJoint::independent(&pz, &pi)?;
    let values = (0..iz * it).map(|_| 2.0 * rng.uniform() - 1.0).collect();
    let gap = check_risk_gap(&indep, &LossProfileTable::new(iz, it, values, 1.0)?)?;
    out.independence_gap = gap.gap.abs();
    out.independence_bound = gap.bound;
    out.reports.push(check_pinsker_chain(&indep)?);

    let bz = support(&mut rng, 2, MAX_SUPPORT);
    let arms = vec![rng.dirichlet(bz, 1.0), rng.dirichlet(bz, 1.0)];
    let arms: Vec<Vec<f64>> = arms
        .into_iter()
        .map(|mut a| {
            renormalize(&mut a);
            a
        })
        .collect();
    let balanced = DiscreteJoint::from_arms(&[0.5, 0.5], &arms)?;
    out.reports.push(check_bayes_binary(&balanced)?.report("bayes_binary"));

    let k = support(&mut rng, 2, 6);
    let fz = support(&mut rng, 2, MAX_SUPPORT);
    let fano_joint = if index.is_multiple_of(2) {
        let arms: Vec<Vec<f64>> = (0..k).map(|_| random_rows(&mut rng, 1, fz)).collect();
        DiscreteJoint::from_arms(&vec![1.0 / k as f64; k], &arms)?
    } else {
        random_joint(&mut rng, fz, k)
    };
    out.reports.push(check_fano(&fano_joint)?.report());

    let (nx, nt, nz) = (
        support(&mut rng, 2, MAX_SUPPORT),
        support(&mut rng, 2, MAX_SUPPORT),
        support(&mut rng, 1, MAX_SUPPORT),
    );
    let p_x_t = random_joint(&mut rng, nx, nt);
    let channel = ChannelSpec::new(nx, nz, random_rows(&mut rng, nx, nz))?;
    let decoders: Vec<Vec<f64>> = (0..DECODERS_PER_TRIAL).map(|_| random_rows(&mut rng, nz * nt, nx)).collect();
    out.reports.push(check_mi_decomposition(&p_x_t, &channel, &decoders)?.report);

    for _ in 0..PROBES_PER_TRIAL {
        let probe = random_rows(&mut rng, nz, nt);
        out.reports.push(check_probe_bound(&p_x_t, &channel, &probe)?.report);
    }
    Ok(out)
}

/// Coordinate ascent over joint tables on the worst-case ratio
/// `|R_CF - R_F| / (2 sqrt(2) lambda sqrt(I))`; returns the best ratio found.
pub fn adversarial_ratio_search(seed: u64, restarts: usize, steps: usize) -> Result<f64> {
    let best: Vec<f64> = (0..restarts as u64)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = RngStream::with_substream(seed, Stream::Aux, r);
            let (nz, nt) = (support(&mut rng, 2, 4), support(&mut rng, 2, 3));
            let mut p = rng.dirichlet(nz * nt, 1.0);
            renormalize(&mut p);
            let mut current = worst_profile_ratio(&DiscreteJoint::new(nz, nt, p.clone())?)?;
            let mut step = 0.5;
            for _ in 0..steps {
                let cell = rng.index(p.len());
                let factor = (step * (2.0 * rng.uniform() - 1.0)).exp();
                let mut trial = p.clone();
                trial[cell] *= factor;
                renormalize(&mut trial);
                let Ok(joint) = DiscreteJoint::new(nz, nt, trial.clone()) else { continue };
                let ratio = worst_profile_ratio(&joint)?;
                if ratio.is_finite() && ratio > current {
                    current = ratio;
                    p = trial;
                } else {
                    step = (step * 0.995).max(1e-3);
                }
            }
            Ok(current)
        })
        .collect::<Result<_>>()?;
    Ok(best.into_iter().fold(0.0, f64::max))
}

/// Runs every checker on `trials` random instances, each from its own
/// substream of `seed`, so results do not depend on thread count.
pub fn run_bounds_trials(trials: usize, seed: u64) -> Result<BoundsSummary> {
    let outcomes: Vec<TrialOutcome> =
        (0..trials as u64).into_par_iter().map(|i| run_trial(seed, i)).collect::<Result<_>>()?;

    let mut checkers: Vec<CheckerSummary> = CHECKERS
        .iter()
        .map(|(name, tol)| CheckerSummary {
            checker: (*name).to_string(),
            instances: 0,
            links: 0,
            vacuous_links: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            tolerance: *tol,
        })
        .collect();
    let mut independence_max_gap: f64 = 0.0;
    let mut independence_max_bound: f64 = 0.0;
    for o in &outcomes {
        independence_max_gap = independence_max_gap.max(o.independence_gap);
        independence_max_bound = independence_max_bound.max(o.independence_bound);
        for r in &o.reports {
            let s = checkers.iter_mut().find(|c| c.checker == r.checker).expect("known checker");
            let tol = tolerance(r.checker);
            s.instances += 1;
            for l in &r.links {
                s.links += 1;
                if l.vacuous {
                    s.vacuous_links += 1;
                    continue;
                }
                if l.slack < -tol || l.slack.is_nan() {
                    s.violations += 1;
                }
                s.worst_slack = s.worst_slack.min(l.slack);
            }
        }
    }
    Ok(BoundsSummary {
        trials,
        seed,
        checkers,
        adversarial_max_ratio: adversarial_ratio_search(seed, 16, 400)?,
        independence_max_gap,
        independence_max_bound,
    })
}
