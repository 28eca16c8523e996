//! Tabular toolkit for uniformly ergodic average-reward MDPs.
//!
//! The crate is organized bottom-up:
//!
//! * [`mdp`]: domain types ([`TabularMdp`], [`Policy`], [`InducedChain`]) and the JSON file layer.
//! * [`dp`]: exact discounted dynamic programming and the variance diagnostics.
//! * [`average`]: stationary distributions, gain/bias via the Poisson equation, exact optimal gain.
//! * [`ergodicity`]: mixing time, Doeblin minorization coefficients and minorization time.
//! * [`sampling`]: the seeded generative model and empirical kernels.
//! * [`algorithms`]: perturbed model-based planning, the average-to-discounted reduction and
//!   the worst-case-sized baseline reducer.
//! * [`instances`]: the two-state hard family and random ergodic MDPs.
//! * [`experiments`]: the replication harness (sweeps, CSV, log-log regression, SVG).
//!
//! States and actions are dense 0-based indices everywhere. Tables indexed by `(s, a)` are
//! stored row-major as `s * n_actions + a`; kernels as `(s * n_actions + a) * n_states + s'`.

pub mod algorithms;
pub mod average;
pub mod dp;
pub mod ergodicity;
pub mod error;
pub mod experiments;
pub mod instances;
mod linalg;
pub mod mdp;
pub mod sampling;

pub use algorithms::{
    beta_delta, eta_star, perturb_rewards, plan_reduction, pmbp, solve_amdp, solve_amdp_baseline,
    LearnedPolicy, PerturbationSpec, PlanOptions, ReductionPlan, Sizing,
};
pub use average::{
    average_reward, optimal_average_reward, poisson_solve, stationary, GainBias,
    StationaryDistribution,
};
pub use dp::{
    aux_value_sequence, evaluate_discounted, greedy_policy, sigma, solve_bellman,
    DiscountedSolution,
};
pub use ergodicity::{
    mdp_ergodicity, minorization_coefficient, minorization_time, mixing_time, ErgodicityReport,
};
pub use error::{Error, Result};
pub use instances::{calibrate_theta, hard_instance, random_ergodic_mdp, HardInstanceSpec};
pub use mdp::{span_seminorm, InducedChain, Policy, TabularMdp, ValueVector, Violation};
pub use sampling::{build_empirical_kernel, empirical_mdp, EmpiricalModel, GenerativeModel};
