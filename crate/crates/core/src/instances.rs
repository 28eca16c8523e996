//! Test MDP generators.
//!
//! The hard family has two states with rewards `r(0, .) = 0` and `r(1, .) = 1`. From state 0
//! every action moves to state 1 with probability `theta`; from state 1 action `a` moves back
//! with probability `theta (1 + kappa_a)`, where `kappa_0 = 0` and `kappa_a = kappa` otherwise.
//! The stationary mass of state 1 under action `a` is `1 / (2 + kappa_a)`, so the optimal gain
//! is `1/2` and every other action loses exactly `kappa / (2 (2 + kappa))`.
//!
//! The optimal chain is the symmetric two-state chain, whose Doeblin coefficients are
//! `q_m = 1 - (1 - 2 theta)^m <= 2 theta m`, so its minorization time is `1 / (2 theta)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ergodicity::{self, DEFAULT_M_MAX};
use crate::error::{Error, Result};
use crate::mdp::{InducedChain, TabularMdp};

/// Relative accuracy [`calibrate_theta`] guarantees.
pub const CALIBRATION_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardInstanceSpec {
    pub t_minorize_target: f64,
    pub theta: f64,
    pub kappa: f64,
    pub n_actions: usize,
}

impl HardInstanceSpec {
    /// Calibrates `theta` so the optimal chain has minorization time `t_minorize_target`.
    pub fn calibrated(t_minorize_target: f64, kappa: f64, n_actions: usize) -> Result<Self> {
        Ok(HardInstanceSpec {
            t_minorize_target,
            theta: calibrate_theta(t_minorize_target)?,
            kappa,
            n_actions,
        })
    }

    /// `1/2 - 1/(2 + kappa)`, the gain lost by any action other than 0 in state 1.
    pub fn optimality_gap(&self) -> f64 {
        self.kappa / (2.0 * (2.0 + self.kappa))
    }
}

/// Builds the two-state hard instance.
pub fn hard_instance(spec: &HardInstanceSpec) -> Result<TabularMdp> {
    let HardInstanceSpec {
        theta,
        kappa,
        n_actions,
        ..
    } = *spec;
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::param(format!("theta {theta} not in (0, 0.5]")));
    }
    if !(kappa >= 0.0 && theta * (1.0 + kappa) <= 1.0) {
        return Err(Error::param(format!(
            "kappa {kappa} must be non-negative with theta (1 + kappa) <= 1"
        )));
    }
    if n_actions < 2 {
        return Err(Error::param("the hard instance needs at least 2 actions"));
    }
    let mut rewards = vec![0.0; 2 * n_actions];
    rewards[n_actions..].fill(1.0);
    let mut kernel = Vec::with_capacity(4 * n_actions);
    for _ in 0..n_actions {
        kernel.extend_from_slice(&[1.0 - theta, theta]);
    }
    for a in 0..n_actions {
        let back = if a == 0 { theta } else { theta * (1.0 + kappa) };
        kernel.extend_from_slice(&[back, 1.0 - back]);
    }
    TabularMdp::new(2, n_actions, rewards, kernel)
}

fn symmetric_t_minorize(theta: f64, target: f64) -> Result<f64> {
    let chain = InducedChain::new(
        2,
        vec![1.0 - theta, theta, theta, 1.0 - theta],
        vec![0.0, 1.0],
    )?;
    let m_max = DEFAULT_M_MAX.max((8.0 * target).ceil() as usize);
    Ok(ergodicity::minorization_time(&chain, m_max)?.0)
}

/// Bisects `theta in (0, 1/2]` until the optimal chain's minorization time is within 2% of
/// `target` (in practice to rounding).
pub fn calibrate_theta(target: f64) -> Result<f64> {
    if !(target >= 1.0 && target.is_finite()) {
        return Err(Error::param(format!("target {target} must be >= 1")));
    }
    let within = |t: f64| (t - target).abs() <= CALIBRATION_TOL * target;
    let mut hi = 0.5;
    let t_hi = symmetric_t_minorize(hi, target)?;
    if within(t_hi) {
        return Ok(hi);
    }
    let mut lo = 1.0 / (4.0 * target);
    let t_lo = symmetric_t_minorize(lo, target)?;
    if !(t_lo > target && t_hi < target) {
        return Err(Error::param(format!(
            "bisection does not bracket target {target}: t({lo}) = {t_lo}, t({hi}) = {t_hi}"
        )));
    }
    let mut best = (f64::INFINITY, hi);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        let t = symmetric_t_minorize(mid, target)?;
        if (t - target).abs() < best.0 {
            best = ((t - target).abs(), mid);
        }
        if t > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if best.0 <= 1e-12 * target || hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    if !within(target + best.0) {
        return Err(Error::param(format!(
            "could not calibrate theta for target {target}"
        )));
    }
    Ok(best.1)
}

/// Random MDP whose kernel entries are all at least `min_prob`, so `q_1 >= n_states min_prob`.
///
/// Each row is `S min_prob uniform + (1 - S min_prob) Dirichlet(1, ..., 1)`; rewards are
/// uniform on `[0, 1]`.
pub fn random_ergodic_mdp(
    n_states: usize,
    n_actions: usize,
    seed: u64,
    min_prob: f64,
) -> Result<TabularMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::param("need at least one state and one action"));
    }
    let floor_mass = n_states as f64 * min_prob;
    if !(min_prob > 0.0 && floor_mass <= 1.0) {
        return Err(Error::param(format!(
            "min_prob {min_prob} not in (0, 1/{n_states}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rewards: Vec<f64> = (0..n_states * n_actions).map(|_| rng.random()).collect();
    let mut kernel = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let gammas: Vec<f64> = (0..n_states)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let total: f64 = gammas.iter().sum();
        kernel.extend(
            gammas
                .iter()
                .map(|g| min_prob + (1.0 - floor_mass) * g / total),
        );
    }
    TabularMdp::new(n_states, n_actions, rewards, kernel)
}
