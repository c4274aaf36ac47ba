use serde::Serialize;
use std::f64::consts::{LN_2, SQRT_2};

use super::tables::{entropy, exact_info, exact_kl, exact_tv, ChannelSpec, DiscreteJoint, KlValue, LossProfileTable};
use crate::error::{Error, Result};

/// One asserted inequality `lhs <= rhs` (or identity, when `identity` is set).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs` for inequalities, `-|rhs - lhs|` for identities.
    pub slack: f64,
    /// Holds trivially because a side is infinite; not asserted numerically.
    pub vacuous: bool,
}

impl Link {
    pub fn inequality(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: rhs - lhs, vacuous: false }
    }

    pub fn identity(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: -(rhs - lhs).abs(), vacuous: false }
    }

    pub fn vacuous(name: impl Into<String>, lhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs: f64::INFINITY, slack: f64::INFINITY, vacuous: true }
    }
}

/// Links produced by one checker on one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub checker: &'static str,
    pub links: Vec<Link>,
}

impl CheckReport {
    pub fn worst_slack(&self) -> f64 {
        self.links.iter().filter(|l| !l.vacuous).map(|l| l.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn holds(&self, tolerance: f64) -> bool {
        self.worst_slack() >= -tolerance
    }
}

/// `TV(p_t, p_Z)` and `KL(p_t || p_Z)` for every arm with mass.
fn arm_divergences(joint: &DiscreteJoint) -> Result<Vec<(f64, f64, KlValue)>> {
    let pz = joint.row_marginal();
    let pi = joint.col_marginal();
    let mut out = Vec::new();
    for (t, &w) in pi.iter().enumerate() {
        if let Some(arm) = joint.arm(t) {
            out.push((w, exact_tv(&arm, &pz)?, exact_kl(&arm, &pz)?));
        }
    }
    Ok(out)
}

/// Triangle, Pinsker and Jensen links of the chain bounding the average
/// pairwise arm distance by `sqrt(I)`.
pub fn check_pinsker_chain(joint: &DiscreteJoint) -> Result<CheckReport> {
    let pi = joint.col_marginal();
    let arms: Vec<Option<Vec<f64>>> = (0..joint.cols()).map(|t| joint.arm(t)).collect();
    let mut pairwise = 0.0;
    for (t, a) in arms.iter().enumerate() {
        for (s, b) in arms.iter().enumerate() {
            if let (Some(a), Some(b)) = (a, b) {
                pairwise += pi[t] * pi[s] * exact_tv(a, b)?;
            }
        }
    }
    let divs = arm_divergences(joint)?;
    let mean_tv: f64 = divs.iter().map(|(w, tv, _)| w * tv).sum();
    let info = exact_info(joint).max(0.0);

    let mut links = vec![Link::inequality("triangle", pairwise, 2.0 * mean_tv)];
    let mut mean_root_kl = 0.0;
    let mut any_infinite = false;
    for (k, (w, tv, kl)) in divs.iter().enumerate() {
        let name = format!("pinsker[{k}]");
        match kl {
            KlValue::Finite(kl) => {
                links.push(Link::inequality(name, *tv, (kl.max(0.0) / 2.0).sqrt()));
                mean_root_kl += w * kl.max(0.0).sqrt();
            }
            KlValue::Infinite => {
                links.push(Link::vacuous(name, *tv));
                any_infinite = true;
            }
        }
    }
    if any_infinite {
        links.push(Link::vacuous("jensen", f64::INFINITY));
    } else {
        links.push(Link::inequality("jensen", mean_root_kl, info.sqrt()));
    }
    Ok(CheckReport { checker: "pinsker_chain", links })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RiskGap {
    pub r_f: f64,
    pub r_cf: f64,
    pub gap: f64,
    pub bound: f64,
}

impl RiskGap {
    pub fn report(&self) -> CheckReport {
        CheckReport {
            checker: "risk_gap",
            links: vec![Link::inequality("gap", self.gap.abs(), self.bound)],
        }
    }

    /// `|gap| / bound`, 0 when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.bound == 0.0 {
            if self.gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.gap.abs() / self.bound
        }
    }
}

/// Factual risk under `p(z | t)` against counterfactual risk under `p_Z`,
/// compared with `2 sqrt(2) lambda sqrt(I)`.
pub fn check_risk_gap(joint: &DiscreteJoint, profile: &LossProfileTable) -> Result<RiskGap> {
    if profile.rows() != joint.rows() || profile.cols() != joint.cols() {
        return Err(Error::Precondition("profile and joint tables differ in shape".into()));
    }
    let pz = joint.row_marginal();
    let pi = joint.col_marginal();
    let mut r_f = 0.0;
    let mut r_cf = 0.0;
    for (t, &p_t) in pi.iter().enumerate() {
        for (z, &m) in pz.iter().enumerate() {
            r_f += joint.at(z, t) * profile.at(z, t);
            r_cf += p_t * m * profile.at(z, t);
        }
    }
    let info = exact_info(joint).max(0.0);
    Ok(RiskGap { r_f, r_cf, gap: r_cf - r_f, bound: 2.0 * SQRT_2 * profile.lambda() * info.sqrt() })
}

/// Largest `|gap| / bound` over profiles for a fixed joint; attained by
/// `phi_t(z) = lambda * sign(p_Z(z) - p(z | t))`.
pub fn worst_profile_ratio(joint: &DiscreteJoint) -> Result<f64> {
    let pz = joint.row_marginal();
    let mut values = vec![0.0; joint.rows() * joint.cols()];
    for t in 0..joint.cols() {
        if let Some(arm) = joint.arm(t) {
            for z in 0..joint.rows() {
                values[z * joint.cols() + t] = if pz[z] >= arm[z] { 1.0 } else { -1.0 };
            }
        }
    }
    let profile = LossProfileTable::new(joint.rows(), joint.cols(), values, 1.0)?;
    Ok(check_risk_gap(joint, &profile)?.ratio())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BayesBound {
    pub e_star: f64,
    pub bound: f64,
    pub info: f64,
}

impl BayesBound {
    pub fn report(&self, checker: &'static str) -> CheckReport {
        CheckReport { checker, links: vec![Link::inequality("bayes_error", self.bound, self.e_star)] }
    }
}

/// Balanced binary treatment: `e* = (1 - TV(p_0, p_1)) / 2 >= 1/2 - sqrt(I / 2)`.
pub fn check_bayes_binary(joint: &DiscreteJoint) -> Result<BayesBound> {
    let pi = joint.col_marginal();
    if pi.len() != 2 || (pi[0] - 0.5).abs() > 1e-12 {
        return Err(Error::Precondition(format!("balanced binary treatment required, prior is {pi:?}")));
    }
    let (p0, p1) = (joint.arm(0), joint.arm(1));
    let (Some(p0), Some(p1)) = (p0, p1) else { unreachable!("balanced arms have mass") };
    let info = exact_info(joint).max(0.0);
    Ok(BayesBound {
        e_star: 0.5 * (1.0 - exact_tv(&p0, &p1)?),
        bound: 0.5 - (info / 2.0).sqrt(),
        info,
    })
}

/// Bayes error of the MAP rule, `1 - sum_z max_t p(z, t)`.
pub fn map_error(joint: &DiscreteJoint) -> f64 {
    let hit: f64 = (0..joint.rows())
        .map(|z| (0..joint.cols()).map(|t| joint.at(z, t)).fold(0.0, f64::max))
        .sum();
    (1.0 - hit).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FanoBound {
    pub e_star: f64,
    /// `1 - (I + ln 2) / ln K`; a theorem only under a uniform prior.
    pub uniform_bound: f64,
    /// `(H(T) - I - ln 2) / ln K`, valid for every prior.
    pub prior_bound: f64,
    pub uniform_prior: bool,
    pub info: f64,
}

impl FanoBound {
    pub fn report(&self) -> CheckReport {
        let mut links = vec![Link::inequality("fano_prior", self.prior_bound, self.e_star)];
        if self.uniform_prior {
            links.push(Link::inequality("fano_uniform", self.uniform_bound, self.e_star));
        }
        CheckReport { checker: "fano", links }
    }
}

/// Multiclass Fano lower bound on the Bayes error.
pub fn check_fano(joint: &DiscreteJoint) -> Result<FanoBound> {
    let k = joint.cols();
    if k < 2 {
        return Err(Error::Precondition("at least two treatment classes required".into()));
    }
    let pi = joint.col_marginal();
    let ln_k = (k as f64).ln();
    let info = exact_info(joint).max(0.0);
    Ok(FanoBound {
        e_star: map_error(joint),
        uniform_bound: 1.0 - (info + LN_2) / ln_k,
        prior_bound: (entropy(&pi) - info - LN_2) / ln_k,
        uniform_prior: pi.iter().all(|p| (p - 1.0 / k as f64).abs() <= 1e-12),
        info,
    })
}

/// `p(x, t, z) = p(x, t) q(z | x, t)`, indexed `[x][t][z]`.
fn triple(p_x_t: &DiscreteJoint, channel: &ChannelSpec) -> Result<Vec<Vec<Vec<f64>>>> {
    if channel.inputs() != p_x_t.rows() {
        return Err(Error::Precondition(format!(
            "channel has {} inputs, joint has {} covariate values",
            channel.inputs(),
            p_x_t.rows()
        )));
    }
    Ok((0..p_x_t.rows())
        .map(|x| {
            (0..p_x_t.cols())
                .map(|t| (0..channel.outputs()).map(|z| p_x_t.at(x, t) * channel.prob(x, t, z)).collect())
                .collect()
        })
        .collect())
}

/// `I(A; B | C)` from a table `p[c][a][b]`.
fn conditional_info(p: &[Vec<Vec<f64>>]) -> f64 {
    let mut total = 0.0;
    for slab in p {
        let mass: f64 = slab.iter().flatten().sum();
        if mass <= 0.0 {
            continue;
        }
        let pa: Vec<f64> = slab.iter().map(|r| r.iter().sum()).collect();
        let pb: Vec<f64> = (0..slab[0].len()).map(|b| slab.iter().map(|r| r[b]).sum()).collect();
        for (a, row) in slab.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    total += v * (v * mass / (pa[a] * pb[b])).ln();
                }
            }
        }
    }
    total
}

fn joint_of(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<Vec<f64>>> {
    vec![(0..rows).map(|a| (0..cols).map(|b| f(a, b)).collect()).collect()]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiDecomposition {
    pub i_zt: f64,
    pub i_zx: f64,
    pub i_zx_given_t: f64,
    pub i_zt_given_x: f64,
    pub i_xt: f64,
    /// `H(X | T) + E log p(x | z, t)` at the optimal decoder.
    pub decoder_bound: f64,
    pub report: CheckReport,
}

/// Verifies `I(z;t) = I(z;t|x) + I(z;x) - I(z;x|t)` with `I(z;t|x) = 0`,
/// data processing, and that the optimal decoder's lower bound on `I(z;x|t)`
/// turns `I(z;x) - bound` into an upper bound on `I(z;t)`. Any `decoders`
/// given as `p(x | z, t)` tables indexed `[(z * |T| + t) * |X| + x]` are
/// checked against the same upper-bound direction.
pub fn check_mi_decomposition(p_x_t: &DiscreteJoint, channel: &ChannelSpec, decoders: &[Vec<f64>]) -> Result<MiDecomposition> {
    if !channel.ignores_treatment() {
        return Err(Error::Precondition("encoder channel depends on the treatment".into()));
    }
    let p = triple(p_x_t, channel)?;
    let (nx, nt, nz) = (p_x_t.rows(), p_x_t.cols(), channel.outputs());
    let at = |x: usize, t: usize, z: usize| p[x][t][z];

    let p_zt = joint_of(nz, nt, |z, t| (0..nx).map(|x| at(x, t, z)).sum());
    let p_zx = joint_of(nz, nx, |z, x| (0..nt).map(|t| at(x, t, z)).sum());
    let i_zt = conditional_info(&p_zt);
    let i_zx = conditional_info(&p_zx);
    let by_t: Vec<Vec<Vec<f64>>> = (0..nt)
        .map(|t| (0..nz).map(|z| (0..nx).map(|x| at(x, t, z)).collect()).collect())
        .collect();
    let i_zx_given_t = conditional_info(&by_t);
    let by_x: Vec<Vec<Vec<f64>>> =
        (0..nx).map(|x| (0..nz).map(|z| (0..nt).map(|t| at(x, t, z)).collect()).collect()).collect();
    let i_zt_given_x = conditional_info(&by_x);
    let i_xt = exact_info(p_x_t);

    // H(X|T) + E log p(x | z, t) for a decoder table
    let pi = p_x_t.col_marginal();
    let h_x_given_t: f64 = (0..nt)
        .map(|t| p_x_t.arm(t).map_or(0.0, |arm| pi[t] * entropy(&arm)))
        .sum();
    let decoder_value = |dec: &dyn Fn(usize, usize, usize) -> f64| -> f64 {
        let mut ll = 0.0;
        for x in 0..nx {
            for t in 0..nt {
                for z in 0..nz {
                    let w = at(x, t, z);
                    if w > 0.0 {
                        ll += w * dec(z, t, x).ln();
                    }
                }
            }
        }
        h_x_given_t + ll
    };
    let p_zt_flat = |z: usize, t: usize| p_zt[0][z][t];
    let optimal = decoder_value(&|z, t, x| at(x, t, z) / p_zt_flat(z, t));

    let mut links = vec![
        Link::identity("conditional_independence", i_zt_given_x, 0.0),
        Link::identity("three_term", i_zt, i_zt_given_x + i_zx - i_zx_given_t),
        Link::inequality("data_processing", i_zt, i_xt),
        Link::identity("optimal_decoder", optimal, i_zx_given_t),
        Link::inequality("surrogate_direction", i_zt, i_zx - optimal),
    ];
    for (k, dec) in decoders.iter().enumerate() {
        if dec.len() != nz * nt * nx {
            return Err(Error::Validation(format!("decoder {k} has the wrong shape")));
        }
        let value = decoder_value(&|z, t, x| dec[(z * nt + t) * nx + x]);
        let name = format!("decoder[{k}]");
        if value.is_finite() {
            links.push(Link::inequality(name, i_zt, i_zx - value));
        } else {
            links.push(Link::vacuous(name, i_zt));
        }
    }
    Ok(MiDecomposition {
        i_zt,
        i_zx,
        i_zx_given_t,
        i_zt_given_x,
        i_xt,
        decoder_bound: optimal,
        report: CheckReport { checker: "mi_decomposition", links },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeBound {
    /// `E log p_theta(t | z) + H(T)`; `-inf` when the probe rules out an observed pair.
    pub value: f64,
    pub info: f64,
    /// The same quantity at the exact posterior.
    pub optimal: f64,
    pub report: CheckReport,
}

/// Classifier bound `E log p_theta(t | z) + H(T) <= I(z; t)` for a probe table
/// `probe[z * |T| + t]`, and equality at the exact posterior.
pub fn check_probe_bound(p_x_t: &DiscreteJoint, channel: &ChannelSpec, probe: &[f64]) -> Result<ProbeBound> {
    let p = triple(p_x_t, channel)?;
    let (nt, nz) = (p_x_t.cols(), channel.outputs());
    let table: Vec<f64> = (0..nz)
        .flat_map(|z| (0..nt).map(move |t| (z, t)))
        .map(|(z, t)| p.iter().map(|slab| slab[t][z]).sum())
        .collect();
    let joint = DiscreteJoint::new(nz, nt, table)?;
    if probe.len() != nz * nt {
        return Err(Error::Validation("probe table shape mismatch".into()));
    }
    for (z, row) in probe.chunks(nt).enumerate() {
        let s: f64 = row.iter().sum();
        if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!("probe row {z} is not a distribution")));
        }
    }
    let bound_for = |q: &dyn Fn(usize, usize) -> f64| -> f64 {
        let mut ll = 0.0;
        for z in 0..nz {
            for t in 0..nt {
                let w = joint.at(z, t);
                if w > 0.0 {
                    ll += w * q(z, t).ln();
                }
            }
        }
        ll + entropy(&joint.col_marginal())
    };
    let pz = joint.row_marginal();
    let value = bound_for(&|z, t| probe[z * nt + t]);
    let optimal = bound_for(&|z, t| joint.at(z, t) / pz[z]);
    let info = exact_info(&joint);
    let probe_link = if value.is_finite() {
        Link::inequality("probe", value, info)
    } else {
        Link::vacuous("probe", value)
    };
    Ok(ProbeBound {
        value,
        info,
        optimal,
        report: CheckReport {
            checker: "probe_bound",
            links: vec![probe_link, Link::identity("optimal_probe", optimal, info)],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic_independent() -> DiscreteJoint {
        DiscreteJoint::independent(&[0.5, 0.25, 0.125, 0.125], &[0.25, 0.75]).unwrap()
    }

    #[test]
    fn independence_is_tight_everywhere() {
        let j = dyadic_independent();
        let chain = check_pinsker_chain(&j).unwrap();
        assert!(chain.links.iter().all(|l| l.lhs == 0.0 && l.rhs == 0.0));
        let profile = LossProfileTable::new(4, 2, vec![0.3, -1.0, 1.0, 0.2, -0.7, 0.9, 0.1, -0.4], 1.0).unwrap();
        let gap = check_risk_gap(&j, &profile).unwrap();
        assert_eq!(gap.gap, 0.0);
        assert_eq!(gap.bound, 0.0);
    }

    #[test]
    fn disjoint_arms() {
        let j = DiscreteJoint::from_arms(&[0.5, 0.5], &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (p0, p1) = (j.arm(0).unwrap(), j.arm(1).unwrap());
        assert_eq!(exact_tv(&p0, &p1).unwrap(), 1.0);
        assert_eq!(exact_kl(&p0, &p1).unwrap(), KlValue::Infinite);
        assert!(check_pinsker_chain(&j).unwrap().holds(1e-12));

        let b = check_bayes_binary(&j).unwrap();
        assert_eq!(b.e_star, 0.0);
        assert!((b.info - LN_2).abs() < 1e-15);
        assert!((b.bound - (0.5 - (LN_2 / 2.0).sqrt())).abs() < 1e-15);
        assert!((b.bound + 0.0887).abs() < 1e-4);
    }

    #[test]
    fn pinsker_chain_flags_infinite_links_as_vacuous() {
        // an arm charging an atom outside the marginal is impossible, so the
        // vacuous path is exercised through the link constructor directly
        let l = Link::vacuous("pinsker[0]", 1.0);
        let r = CheckReport { checker: "pinsker_chain", links: vec![l, Link::inequality("x", 0.0, 1.0)] };
        assert_eq!(r.worst_slack(), 1.0);
    }

    #[test]
    fn identical_arms_make_bayes_tight() {
        let j = DiscreteJoint::from_arms(&[0.5, 0.5], &[vec![0.2, 0.8], vec![0.2, 0.8]]).unwrap();
        let b = check_bayes_binary(&j).unwrap();
        assert_eq!(b.e_star, 0.5);
        assert_eq!(b.bound, 0.5);
    }

    #[test]
    fn unbalanced_prior_rejected_for_binary_bayes() {
        let j = DiscreteJoint::from_arms(&[0.4, 0.6], &[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(check_bayes_binary(&j), Err(Error::Precondition(_))));
    }

    #[test]
    fn fano_examples() {
        let j = DiscreteJoint::independent(&[0.5, 0.5], &[0.25; 4]).unwrap();
        let f = check_fano(&j).unwrap();
        assert_eq!(f.e_star, 0.75);
        assert!((f.uniform_bound - 0.5).abs() < 1e-15);
        assert!(f.report().holds(0.0));

        let reveal = DiscreteJoint::new(3, 3, vec![0.2, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.5]).unwrap();
        let f = check_fano(&reveal).unwrap();
        assert_eq!(f.e_star, 0.0);
        assert!(f.prior_bound <= 0.0);
    }

    #[test]
    fn uniform_form_of_fano_needs_uniform_prior() {
        // skewed prior, no information: MAP error is small yet the uniform-prior
        // form would demand at least one half
        let j = DiscreteJoint::independent(&[1.0], &[0.97, 0.01, 0.01, 0.01]).unwrap();
        let f = check_fano(&j).unwrap();
        assert!(!f.uniform_prior);
        assert!(f.e_star < f.uniform_bound);
        assert!(f.report().holds(1e-12));
    }

    #[test]
    fn decomposition_identity_and_constant_channels() {
        let p_x_t = DiscreteJoint::new(3, 2, vec![0.3, 0.05, 0.1, 0.15, 0.05, 0.35]).unwrap();
        let id = check_mi_decomposition(&p_x_t, &ChannelSpec::identity(3), &[]).unwrap();
        assert!((id.i_zt - exact_info(&p_x_t)).abs() < 1e-15);
        assert!(id.report.holds(1e-12));
        let c = check_mi_decomposition(&p_x_t, &ChannelSpec::constant(3), &[]).unwrap();
        assert_eq!(c.i_zt, 0.0);
    }

    #[test]
    fn treatment_aware_channel_rejected() {
        let p_x_t = DiscreteJoint::new(1, 2, vec![0.5, 0.5]).unwrap();
        let ch = ChannelSpec::with_treatment(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(matches!(check_mi_decomposition(&p_x_t, &ch, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn probe_examples() {
        let p_x_t = DiscreteJoint::new(2, 2, vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        let ch = ChannelSpec::identity(2);
        let posterior = [0.8, 0.2, 0.2, 0.8];
        let exact = check_probe_bound(&p_x_t, &ch, &posterior).unwrap();
        assert!((exact.value - exact.info).abs() < 1e-12);
        let marginal = check_probe_bound(&p_x_t, &ch, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(marginal.value.abs() < 1e-15);
        assert!(marginal.value <= marginal.info);
    }

    #[test]
    fn worst_profile_ratio_below_one() {
        let j = DiscreteJoint::from_arms(&[0.5, 0.5], &[vec![0.51, 0.49], vec![0.49, 0.51]]).unwrap();
        // near-uniform arms make Pinsker and Jensen tight; the remaining factor
        // of two is the triangle step's averaging
        let r = worst_profile_ratio(&j).unwrap();
        assert!(r <= 0.5 && r > 0.499, "{r}");
    }
}
