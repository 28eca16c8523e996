//! Perturbed model-based planning and the average-to-discounted reduction.
//!
//! [`pmbp`] perturbs the rewards with i.i.d. `Unif(0, zeta)` noise, builds the empirical
//! kernel from `n` generative draws per pair, solves the empirical discounted problem and
//! returns its greedy policy. [`solve_amdp`] picks `(gamma, zeta, n)` for an average-reward
//! target `epsilon` from the minorization time and runs [`pmbp`].
//!
//! The baseline reducer shares `gamma` and `zeta` but sizes `n` for a worst-case discounted
//! error bound, `n ∝ (1 - gamma)^{-3} t^{-2}`, which costs `epsilon^{-3}` samples overall.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dp::{self, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp, ValueVector};
use crate::sampling::{self, unit_f64, GenerativeModel};

/// The plan constant `c = 4 * 486^2`.
pub const PLAN_CONSTANT: f64 = 944_784.0;

/// Default sample cap above which the baseline warns.
pub const DEFAULT_BUDGET_CAP: u64 = 1_000_000_000;

/// `beta_delta(eta) = 2 ln(24 |S| |A| log2(1 / (1 - gamma)) / ((1 - gamma)^2 eta delta))`.
pub fn beta_delta(
    eta: f64,
    delta: f64,
    gamma: f64,
    n_states: usize,
    n_actions: usize,
) -> Result<f64> {
    check_gamma(gamma)?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::param(format!("eta {eta} not in (0,1]")));
    }
    check_delta(delta)?;
    let h = 1.0 - gamma;
    let arg = 24.0 * (n_states * n_actions) as f64 * (1.0 / h).log2() / (h * h * eta * delta);
    let beta = 2.0 * arg.ln();
    if !beta.is_finite() || arg <= 1.0 {
        return Err(Error::param(format!("beta undefined (log argument {arg})")));
    }
    Ok(beta)
}

/// `eta*_delta = zeta delta (1 - gamma) / (9 |S| |A|^2)`.
pub fn eta_star(zeta: f64, delta: f64, gamma: f64, n_states: usize, n_actions: usize) -> f64 {
    zeta * delta * (1.0 - gamma) / (9.0 * n_states as f64 * (n_actions * n_actions) as f64)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.5..1.0).contains(&gamma) {
        return Err(Error::param(format!(
            "discount factor {gamma} not in [1/2,1)"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta {delta} not in (0,1)")));
    }
    Ok(())
}

/// Realized reward perturbation `R = r + Z`, `Z(s, a) ~ Unif(0, zeta)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub zeta: f64,
    pub perturbed_rewards: Vec<f64>,
    pub z_values: Vec<f64>,
}

/// Draws the perturbation from its own ChaCha8 stream, disjoint from the sampler's.
pub fn perturb_rewards(mdp: &TabularMdp, zeta: f64, seed: u64) -> Result<PerturbationSpec> {
    if !(zeta >= 0.0 && zeta.is_finite()) {
        return Err(Error::param(format!("zeta {zeta} must be non-negative")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let z_values: Vec<f64> = (0..mdp.n_pairs())
        .map(|_| zeta * unit_f64(rng.next_u64()))
        .collect();
    let perturbed_rewards = mdp
        .rewards()
        .iter()
        .zip(&z_values)
        .map(|(r, z)| r + z)
        .collect();
    Ok(PerturbationSpec {
        zeta,
        perturbed_rewards,
        z_values,
    })
}

/// Which sample-size rule a plan follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sizing {
    /// `n = c beta / ((1 - gamma)^2 t)`.
    Ours,
    /// `n = c beta / ((1 - gamma)^3 t^2)`.
    Baseline,
}

impl Sizing {
    pub fn name(self) -> &'static str {
        match self {
            Sizing::Ours => "ours",
            Sizing::Baseline => "baseline",
        }
    }
}

impl std::str::FromStr for Sizing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(Sizing::Ours),
            "baseline" => Ok(Sizing::Baseline),
            other => Err(Error::param(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Replaces `c`; scaled-down values give desk-sized experiments.
    pub constant: f64,
    /// Raise `n` to at least `64 beta / (1 - gamma)`.
    pub enforce_gate: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            constant: PLAN_CONSTANT,
            enforce_gate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionPlan {
    pub sizing: Sizing,
    pub epsilon: f64,
    pub delta: f64,
    pub t_minorize: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub beta: f64,
    pub eta_star: f64,
    pub constant: f64,
    pub n_per_sa: u64,
    pub total_samples: u64,
}

impl ReductionPlan {
    /// `64 beta / (1 - gamma)`.
    pub fn minimum_samples(&self) -> f64 {
        64.0 * self.beta / (1.0 - self.gamma)
    }
}

/// The reduction with default options and our sizing.
pub fn plan_reduction(
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    n_states: usize,
    n_actions: usize,
) -> Result<ReductionPlan> {
    plan_with(
        epsilon,
        delta,
        t_minorize,
        n_states,
        n_actions,
        Sizing::Ours,
        &PlanOptions::default(),
    )
}

/// `gamma = 1 - epsilon / (19 t)`, `zeta = (1 - gamma) t / 4`, `n` per `sizing`, rounded up.
pub fn plan_with(
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    n_states: usize,
    n_actions: usize,
    sizing: Sizing,
    options: &PlanOptions,
) -> Result<ReductionPlan> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param(format!("epsilon {epsilon} not in (0,1]")));
    }
    check_delta(delta)?;
    if !(t_minorize >= 1.0 && t_minorize.is_finite()) {
        return Err(Error::param(format!(
            "t_minorize {t_minorize} must be >= 1"
        )));
    }
    if !(options.constant > 0.0 && options.constant.is_finite()) {
        return Err(Error::param("plan constant must be positive"));
    }
    let h = epsilon / (19.0 * t_minorize);
    let gamma = 1.0 - h;
    check_gamma(gamma)?;
    let zeta = h * t_minorize / 4.0;
    let eta = eta_star(zeta, delta, gamma, n_states, n_actions);
    let beta = beta_delta(eta, delta, gamma, n_states, n_actions)?;
    let mut n = match sizing {
        Sizing::Ours => options.constant * beta / (h * h * t_minorize),
        Sizing::Baseline => options.constant * beta / (h * h * h * t_minorize * t_minorize),
    };
    if options.enforce_gate {
        n = n.max(64.0 * beta / h);
    }
    let n = n.ceil();
    let pairs = (n_states * n_actions) as u64;
    if !(n >= 1.0 && n < u64::MAX as f64) {
        return Err(Error::CountOverflow { n: u64::MAX });
    }
    let n_per_sa = n as u64;
    let total_samples = n_per_sa
        .checked_mul(pairs)
        .ok_or(Error::CountOverflow { n: n_per_sa })?;
    Ok(ReductionPlan {
        sizing,
        epsilon,
        delta,
        t_minorize,
        gamma,
        zeta,
        beta,
        eta_star: eta,
        constant: options.constant,
        n_per_sa,
        total_samples,
    })
}

/// Parameters a learned policy was produced with.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Parameters {
    Plan(ReductionPlan),
    Raw {
        gamma: f64,
        zeta: f64,
        n_per_sa: u64,
    },
}

impl Parameters {
    pub fn gamma(&self) -> f64 {
        match self {
            Parameters::Plan(p) => p.gamma,
            Parameters::Raw { gamma, .. } => *gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnedPolicy {
    pub policy: Policy,
    pub empirical_value: ValueVector,
    pub parameters: Parameters,
    pub samples_used: u64,
    pub seed: u64,
}

/// Perturbed model-based planning.
///
/// `seed` drives the reward perturbation; next-state draws come from `gm`'s own streams.
pub fn pmbp(
    gm: &GenerativeModel,
    gamma: f64,
    zeta: f64,
    n: u64,
    seed: u64,
    tol: f64,
) -> Result<LearnedPolicy> {
    check_gamma(gamma)?;
    let perturbation = perturb_rewards(gm.source(), zeta, seed)?;
    let em = sampling::build_empirical_kernel(gm, n)?;
    let mdp = sampling::empirical_mdp(&em, &perturbation.perturbed_rewards, zeta)?;
    let solution = dp::solve_bellman(&mdp, None, gamma, tol)?;
    Ok(LearnedPolicy {
        policy: solution.policy,
        empirical_value: solution.value,
        parameters: Parameters::Raw {
            gamma,
            zeta,
            n_per_sa: n,
        },
        samples_used: n * (gm.n_states() * gm.n_actions()) as u64,
        seed,
    })
}

/// Runs [`pmbp`] with the `(gamma, zeta, n)` of a plan.
pub fn run_plan(gm: &GenerativeModel, plan: &ReductionPlan, seed: u64) -> Result<LearnedPolicy> {
    let mut learned = pmbp(gm, plan.gamma, plan.zeta, plan.n_per_sa, seed, DEFAULT_TOL)?;
    learned.parameters = Parameters::Plan(plan.clone());
    Ok(learned)
}

/// Average-reward policy learning through the discounted reduction.
pub fn solve_amdp(
    gm: &GenerativeModel,
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    seed: u64,
) -> Result<LearnedPolicy> {
    let plan = plan_reduction(epsilon, delta, t_minorize, gm.n_states(), gm.n_actions())?;
    run_plan(gm, &plan, seed)
}

/// The worst-case-sized reduction, warning when it needs more than [`DEFAULT_BUDGET_CAP`] samples.
pub fn solve_amdp_baseline(
    gm: &GenerativeModel,
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    seed: u64,
) -> Result<LearnedPolicy> {
    solve_amdp_baseline_capped(gm, epsilon, delta, t_minorize, seed, DEFAULT_BUDGET_CAP)
}

pub fn solve_amdp_baseline_capped(
    gm: &GenerativeModel,
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    seed: u64,
    budget_cap: u64,
) -> Result<LearnedPolicy> {
    let plan = plan_with(
        epsilon,
        delta,
        t_minorize,
        gm.n_states(),
        gm.n_actions(),
        Sizing::Baseline,
        &PlanOptions::default(),
    )?;
    if plan.total_samples > budget_cap {
        log::warn!(
            "baseline needs {} samples, above the budget cap {budget_cap}",
            plan.total_samples
        );
    }
    run_plan(gm, &plan, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_example() {
        let beta = beta_delta(0.01, 0.1, 0.9, 2, 2).unwrap();
        let by_hand = 2.0 * (24.0 * 4.0 * 10f64.log2() / 1e-5).ln();
        assert_abs_diff_eq!(beta, by_hand, epsilon = 1e-12);
        assert_abs_diff_eq!(beta, 34.55, epsilon = 0.01);
    }

    #[test]
    fn beta_doubling_eta() {
        let a = beta_delta(0.01, 0.1, 0.9, 2, 2).unwrap();
        let b = beta_delta(0.02, 0.1, 0.9, 2, 2).unwrap();
        assert_abs_diff_eq!(a - b, 2.0 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn beta_rejects_bad_inputs() {
        assert!(beta_delta(0.01, 0.1, 0.4, 2, 2).is_err());
        assert!(beta_delta(2.0, 0.1, 0.9, 2, 2).is_err());
        assert!(beta_delta(0.01, 1.0, 0.9, 2, 2).is_err());
    }

    #[test]
    fn eta_star_examples() {
        assert_abs_diff_eq!(eta_star(0.009, 0.1, 0.99, 2, 2), 1.25e-7, epsilon = 1e-20);
        let one = eta_star(0.01, 0.1, 0.99, 3, 2);
        assert_abs_diff_eq!(eta_star(0.03, 0.1, 0.99, 3, 2), 3.0 * one, epsilon = 1e-20);
        assert_abs_diff_eq!(eta_star(0.01, 0.1, 0.99, 3, 4), one / 4.0, epsilon = 1e-20);
    }

    #[test]
    fn plan_example() {
        let plan = plan_reduction(0.5, 0.1, 10.0, 2, 2).unwrap();
        assert_abs_diff_eq!(plan.gamma, 1.0 - 1.0 / 380.0, epsilon = 1e-15);
        assert_abs_diff_eq!(plan.zeta, 10.0 / 1520.0, epsilon = 1e-15);
        assert_eq!(plan.total_samples, plan.n_per_sa * 4);
        assert!(plan.n_per_sa as f64 >= plan.minimum_samples());
        assert_eq!(PLAN_CONSTANT, 4.0 * 486.0 * 486.0);
    }

    #[test]
    fn baseline_ratio_is_19_over_eps() {
        let opts = PlanOptions::default();
        let ours = plan_with(0.5, 0.1, 10.0, 2, 2, Sizing::Ours, &opts).unwrap();
        let base = plan_with(0.5, 0.1, 10.0, 2, 2, Sizing::Baseline, &opts).unwrap();
        let ratio = base.n_per_sa as f64 / ours.n_per_sa as f64;
        assert_abs_diff_eq!(ratio, 38.0, epsilon = 1e-6);
        let ours = plan_with(1.0, 0.1, 1.0, 2, 2, Sizing::Ours, &opts).unwrap();
        let base = plan_with(1.0, 0.1, 1.0, 2, 2, Sizing::Baseline, &opts).unwrap();
        assert!(base.n_per_sa >= ours.n_per_sa);
    }

    #[test]
    fn halving_eps_quadruples_n_up_to_logs() {
        let a = plan_reduction(0.4, 0.1, 10.0, 2, 2).unwrap();
        let b = plan_reduction(0.2, 0.1, 10.0, 2, 2).unwrap();
        let ratio = b.n_per_sa as f64 / a.n_per_sa as f64;
        assert!(
            ratio > 4.0 && ratio < 4.0 * b.beta / a.beta + 1e-9,
            "{ratio}"
        );
    }

    #[test]
    fn gate_raises_n() {
        let opts = PlanOptions {
            constant: 1e-3,
            enforce_gate: true,
        };
        let plan = plan_with(0.5, 0.1, 10.0, 2, 2, Sizing::Ours, &opts).unwrap();
        assert_eq!(plan.n_per_sa, plan.minimum_samples().ceil() as u64);
    }

    #[test]
    fn plan_rejects_out_of_range() {
        assert!(plan_reduction(0.0, 0.1, 10.0, 2, 2).is_err());
        assert!(plan_reduction(1.5, 0.1, 10.0, 2, 2).is_err());
        assert!(plan_reduction(0.5, 0.1, 0.5, 2, 2).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let mdp = TabularMdp::new(1, 2, vec![0.2, 0.7], vec![1.0, 1.0]).unwrap();
        let zero = perturb_rewards(&mdp, 0.0, 9).unwrap();
        assert_eq!(zero.perturbed_rewards, mdp.rewards());
        let a = perturb_rewards(&mdp, 0.1, 9).unwrap();
        let b = perturb_rewards(&mdp, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert!(perturb_rewards(&mdp, -1.0, 9).is_err());
    }

    #[test]
    fn perturbation_mean() {
        let n = 10_000;
        let mdp = TabularMdp::new(1, n, vec![0.5; n], vec![1.0; n]).unwrap();
        let spec = perturb_rewards(&mdp, 0.1, 1).unwrap();
        assert!(spec.z_values.iter().all(|z| (0.0..=0.1).contains(z)));
        let mean = spec.z_values.iter().sum::<f64>() / n as f64;
        assert!((0.047..=0.053).contains(&mean), "{mean}");
    }

    #[test]
    fn pmbp_on_deterministic_kernel_is_exact() {
        let mdp = TabularMdp::from_nested(
            &[vec![0.1, 0.0], vec![0.0, 1.0]],
            &[
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            ],
        )
        .unwrap();
        let exact = dp::solve_bellman(&mdp, None, 0.9, DEFAULT_TOL).unwrap();
        let gm = GenerativeModel::new(mdp, 4);
        let learned = pmbp(&gm, 0.9, 0.0, 3, 4, DEFAULT_TOL).unwrap();
        assert_eq!(learned.policy, exact.policy);
        assert_eq!(learned.samples_used, 12);
        assert_eq!(gm.total_samples_drawn(), 12);
    }

    #[test]
    fn pmbp_rejects_small_gamma() {
        let mdp = TabularMdp::new(1, 1, vec![0.0], vec![1.0]).unwrap();
        let gm = GenerativeModel::new(mdp, 0);
        assert!(pmbp(&gm, 0.3, 0.0, 1, 0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn sizing_parse() {
        assert_eq!("ours".parse::<Sizing>().unwrap(), Sizing::Ours);
        assert_eq!("baseline".parse::<Sizing>().unwrap(), Sizing::Baseline);
        assert!("other".parse::<Sizing>().is_err());
    }
}
