//! Exact discounted dynamic programming.
//!
//! [`solve_bellman`] runs value iteration until the sup-norm Bellman residual is at most
//! `tol (1 - gamma) / (2 gamma)`, which guarantees `||v - v*|| <= tol`, and then polishes
//! with exact policy evaluation of the greedy policy (re-greedying until the policy is
//! stable). The polished value is the exact fixed point up to linear-solve rounding.

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{InducedChain, Policy, TabularMdp, ValueVector};

/// Default solve tolerance for [`solve_bellman`].
pub const DEFAULT_TOL: f64 = 1e-10;

/// Upper bound on policy-improvement rounds during the polish phase.
const MAX_POLISH_ROUNDS: usize = 100;

/// Output of [`solve_bellman`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedSolution {
    pub value: ValueVector,
    pub policy: Policy,
    /// Value-iteration sweeps performed before polishing.
    pub iterations: usize,
    /// Final sup-norm Bellman residual of `value`.
    pub residual: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(format!(
            "discount factor {gamma} not in (0,1)"
        )));
    }
    Ok(())
}

/// `v = (I - gamma P) ^ {-1} r` for a chain, by direct solve.
pub fn evaluate_chain(chain: &InducedChain, gamma: f64) -> Result<ValueVector> {
    check_gamma(gamma)?;
    let n = chain.n_states();
    let a = linalg::identity_minus(n, chain.transition(), gamma);
    let v = linalg::solve(a, chain.reward()).ok_or(Error::MalformedKernel)?;
    Ok(ValueVector::from_finite(v))
}

/// Discounted value `v^pi = (I - gamma P_pi)^{-1} r_pi`.
pub fn evaluate_discounted(mdp: &TabularMdp, policy: &Policy, gamma: f64) -> Result<ValueVector> {
    evaluate_chain(&mdp.induce(policy)?, gamma)
}

/// Policy evaluation against an arbitrary `(s, a)` reward table.
pub fn evaluate_with_rewards(
    mdp: &TabularMdp,
    rewards: &[f64],
    policy: &Policy,
    gamma: f64,
) -> Result<ValueVector> {
    evaluate_chain(&mdp.induce_with_rewards(policy, rewards)?, gamma)
}

#[inline]
fn q_value(mdp: &TabularMdp, rewards: &[f64], gamma: f64, v: &[f64], s: usize, a: usize) -> f64 {
    rewards[s * mdp.n_actions() + a] + gamma * mdp.expect(s, a, v)
}

/// One Bellman optimality sweep; returns `(T v, ||T v - v||_inf)`.
fn bellman_sweep(mdp: &TabularMdp, rewards: &[f64], gamma: f64, v: &[f64]) -> (Vec<f64>, f64) {
    let mut out = Vec::with_capacity(v.len());
    let mut residual = 0.0f64;
    for s in 0..mdp.n_states() {
        let best = (0..mdp.n_actions())
            .map(|a| q_value(mdp, rewards, gamma, v, s, a))
            .fold(f64::NEG_INFINITY, f64::max);
        residual = residual.max((best - v[s]).abs());
        out.push(best);
    }
    (out, residual)
}

/// Sup-norm Bellman residual `||T v - v||_inf` with rewards `R` (defaults to the MDP's).
pub fn bellman_residual(
    mdp: &TabularMdp,
    rewards_override: Option<&[f64]>,
    gamma: f64,
    v: &[f64],
) -> f64 {
    let rewards = rewards_override.unwrap_or(mdp.rewards());
    bellman_sweep(mdp, rewards, gamma, v).1
}

/// Greedy policy `pi(s) = argmax_a R(s,a) + gamma p_{s,a}[v]`, ties to the lowest index.
pub fn greedy_policy(
    mdp: &TabularMdp,
    rewards_override: Option<&[f64]>,
    gamma: f64,
    v: &[f64],
) -> Policy {
    let rewards = rewards_override.unwrap_or(mdp.rewards());
    let actions = (0..mdp.n_states())
        .map(|s| {
            let mut best_a = 0;
            let mut best_q = q_value(mdp, rewards, gamma, v, s, 0);
            for a in 1..mdp.n_actions() {
                let q = q_value(mdp, rewards, gamma, v, s, a);
                if q > best_q {
                    best_q = q;
                    best_a = a;
                }
            }
            best_a
        })
        .collect();
    Policy::new(actions)
}

/// Largest amount by which some action beats the policy's own action, `max_s (max_a Q - Q(s, pi(s)))`.
pub fn greedy_gap(
    mdp: &TabularMdp,
    rewards_override: Option<&[f64]>,
    gamma: f64,
    v: &[f64],
    policy: &Policy,
) -> f64 {
    let rewards = rewards_override.unwrap_or(mdp.rewards());
    (0..mdp.n_states())
        .map(|s| {
            let own = q_value(mdp, rewards, gamma, v, s, policy.action(s));
            let best = (0..mdp.n_actions())
                .map(|a| q_value(mdp, rewards, gamma, v, s, a))
                .fold(f64::NEG_INFINITY, f64::max);
            best - own
        })
        .fold(0.0, f64::max)
}

/// Iteration cap `ceil(log(2 / ((1 - gamma) tol)) / (1 - gamma)) + 1000`.
pub fn iteration_cap(gamma: f64, tol: f64) -> usize {
    let c = (2.0 / ((1.0 - gamma) * tol)).ln().max(0.0) / (1.0 - gamma);
    c.ceil() as usize + 1000
}

/// Solves the Bellman optimality equation of `M(R, P, gamma)`.
///
/// `rewards_override` substitutes `R` for the MDP's own rewards (perturbed planning).
pub fn solve_bellman(
    mdp: &TabularMdp,
    rewards_override: Option<&[f64]>,
    gamma: f64,
    tol: f64,
) -> Result<DiscountedSolution> {
    check_gamma(gamma)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::param(format!("tolerance {tol} must be positive")));
    }
    if let Some(r) = rewards_override {
        mdp.check_reward_table(r)?;
    }
    let rewards = rewards_override.unwrap_or(mdp.rewards());
    let threshold = tol * (1.0 - gamma) / (2.0 * gamma);
    let cap = iteration_cap(gamma, tol);

    // warm start from the value of the myopic greedy policy
    let start = greedy_policy(mdp, Some(rewards), gamma, &vec![0.0; mdp.n_states()]);
    let mut v = evaluate_with_rewards(mdp, rewards, &start, gamma)?.into_inner();
    let mut iterations = 0;
    loop {
        let (next, residual) = bellman_sweep(mdp, rewards, gamma, &v);
        v = next;
        iterations += 1;
        if residual <= threshold {
            break;
        }
        if iterations >= cap {
            return Err(Error::IterationLimit {
                iterations,
                residual,
            });
        }
    }

    let (value, policy) = polish(mdp, rewards, gamma, &v)?;
    let residual = bellman_sweep(mdp, rewards, gamma, &value).1;
    Ok(DiscountedSolution {
        value,
        policy,
        iterations,
        residual,
    })
}

/// Policy iteration started from the greedy policy of `v`. An action is replaced only when
/// another beats it by more than rounding noise, so exact ties keep the lowest index.
fn polish(
    mdp: &TabularMdp,
    rewards: &[f64],
    gamma: f64,
    v: &[f64],
) -> Result<(ValueVector, Policy)> {
    let mut policy = greedy_policy(mdp, Some(rewards), gamma, v);
    let mut value = evaluate_with_rewards(mdp, rewards, &policy, gamma)?;
    for _ in 0..MAX_POLISH_ROUNDS {
        let mut changed = false;
        let mut actions = policy.actions().to_vec();
        for (s, slot) in actions.iter_mut().enumerate() {
            let own = q_value(mdp, rewards, gamma, &value, s, *slot);
            let noise = 1e-12 * own.abs().max(1.0);
            let mut best_a = *slot;
            let mut best_q = own + noise;
            for a in 0..mdp.n_actions() {
                let q = q_value(mdp, rewards, gamma, &value, s, a);
                if q > best_q {
                    best_q = q;
                    best_a = a;
                }
            }
            if best_a != *slot {
                *slot = best_a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        policy = Policy::new(actions);
        value = evaluate_with_rewards(mdp, rewards, &policy, gamma)?;
    }
    Ok((value, policy))
}

/// `sigma(v)(s,a) = sqrt(Var_{p_{s,a}}(v))`, stored as an `(s, a)` table.
pub fn sigma(mdp: &TabularMdp, v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mdp.n_pairs());
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let row = mdp.row(s, a);
            let mean = mdp.expect(s, a, v);
            // centered second moment; equals p[v^2] - p[v]^2 without the cancellation
            let var: f64 = row.iter().zip(v).map(|(p, x)| p * (x - mean).powi(2)).sum();
            out.push(var.max(0.0).sqrt());
        }
    }
    out
}

/// `floor(log2(1 / (1 - gamma)) / 2)`, the default depth of [`aux_value_sequence`].
pub fn default_aux_levels(gamma: f64) -> usize {
    (0.5 * (1.0 / (1.0 - gamma)).log2()).floor().max(0.0) as usize
}

/// The auxiliary sequence `h_0 = R_pi`, `v_l = (I - gamma P_pi)^{-1} h_l`,
/// `h_{l+1} = sigma_pi(v_l)`, for `l = 0..=levels`.
///
/// Evaluated against the kernel of `mdp`; pass an empirical MDP for the `P-hat` variant.
pub fn aux_value_sequence(
    mdp: &TabularMdp,
    policy: &Policy,
    rewards: &[f64],
    gamma: f64,
    levels: Option<usize>,
) -> Result<Vec<(ValueVector, ValueVector)>> {
    let levels = levels.unwrap_or_else(|| default_aux_levels(gamma));
    if levels > 64 {
        return Err(Error::param(format!(
            "{levels} auxiliary levels exceeds 64"
        )));
    }
    let chain = mdp.induce_with_rewards(policy, rewards)?;
    let mut out = Vec::with_capacity(levels + 1);
    let mut h = chain.reward().to_vec();
    for l in 0..=levels {
        let v = evaluate_chain(&chain.with_reward(h.clone())?, gamma)?;
        let next_h = if l < levels {
            let sig = sigma(mdp, &v);
            (0..mdp.n_states())
                .map(|s| sig[s * mdp.n_actions() + policy.action(s)])
                .collect()
        } else {
            Vec::new()
        };
        out.push((ValueVector::from_finite(h), v));
        h = next_h;
    }
    Ok(out)
}
