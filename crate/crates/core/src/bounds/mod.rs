//! Exact checks of the information-theoretic inequalities behind the method,
//! by enumeration on small finite probability spaces.

mod checks;
mod tables;
mod trials;

pub use checks::{
    check_bayes_binary, check_fano, check_mi_decomposition, check_pinsker_chain, check_probe_bound, check_risk_gap,
    map_error, worst_profile_ratio, BayesBound, CheckReport, FanoBound, Link, MiDecomposition, ProbeBound, RiskGap,
};
pub use tables::{
    entropy, exact_info, exact_kl, exact_tv, ChannelSpec, DiscreteJoint, KlValue, LossProfileTable, MASS_TOLERANCE,
};
pub use trials::{
    adversarial_ratio_search, run_bounds_trials, BoundsSummary, CheckerSummary, CHECKERS, MAX_SUPPORT,
    PROFILES_PER_JOINT,
};
