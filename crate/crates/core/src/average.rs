//! Long-run average reward: stationary distributions, gains, the Poisson equation and the
//! exact optimal gain by policy enumeration.
//!
//! The bias is normalized by `eta[u] = 0`, which makes it the transient value
//! `u(s) = E_s sum_t (r(X_t) - alpha)` for aperiodic chains. Periodic chains are accepted and
//! receive the same linear-algebra solution (the Cesaro limit); only chains with more than
//! one recurrent class are rejected.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{InducedChain, Policy, TabularMdp, ValueVector};

/// Singular-value tolerance of the rank test on `I - P`.
pub const RANK_TOL: f64 = 1e-9;
/// Default cap on `|A|^|S|` for exhaustive enumeration.
pub const ENUMERATION_CAP: u64 = 1 << 20;
/// Gains closer than this are treated as tied.
pub const GAIN_TIE_TOL: f64 = 1e-12;

const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    /// `eta[f] = sum_s eta(s) f(s)`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.probs.iter().zip(f).map(|(p, x)| p * x).sum()
    }
}

/// Gain `alpha`, bias `u` and the sup-norm Poisson residual `||r - alpha - (I - P) u||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainBias {
    pub gain: f64,
    pub bias: ValueVector,
    pub residual: f64,
}

/// Stationary distribution `eta = eta P`, `sum eta = 1`.
pub fn stationary(chain: &InducedChain) -> Result<StationaryDistribution> {
    let n = chain.n_states();
    let p = chain.transition();
    // (I - P)^T eta = 0, with the last equation replaced by sum eta = 1
    let mut a = linalg::identity_minus(n, p, 1.0).transpose();
    let null = linalg::null_space_dim(&a, RANK_TOL);
    if null != 1 {
        return Err(Error::NotErgodic(format!(
            "I - P has a {null}-dimensional null space (expected 1)"
        )));
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let mut eta = linalg::solve(a, &rhs)
        .ok_or_else(|| Error::NotErgodic("stationary system is singular".into()))?;
    for x in eta.iter_mut() {
        *x = x.max(0.0);
    }
    let total: f64 = eta.iter().sum();
    eta.iter_mut().for_each(|x| *x /= total);

    let moved = linalg::vec_mat(n, &eta, p);
    let residual = linalg::sup_diff(&moved, &eta);
    if residual > STATIONARY_RESIDUAL_TOL {
        return Err(Error::NotErgodic(format!(
            "stationary residual {residual:e} exceeds {STATIONARY_RESIDUAL_TOL:e}"
        )));
    }
    Ok(StationaryDistribution { probs: eta })
}

/// Gain `alpha = eta[r]`.
pub fn average_reward(chain: &InducedChain) -> Result<f64> {
    Ok(stationary(chain)?.expect(chain.reward()))
}

/// Solves `(I - P) u = r - alpha 1` with `eta[u] = 0`.
///
/// Uses the fundamental matrix: `u = (I - P + 1 eta)^{-1} (r - alpha 1)`, and since
/// `eta (I - P + 1 eta) = eta`, the solution automatically satisfies `eta[u] = eta[r] - alpha = 0`.
pub fn poisson_solve(chain: &InducedChain) -> Result<GainBias> {
    let n = chain.n_states();
    let p = chain.transition();
    let r = chain.reward();
    let eta = stationary(chain)?;
    let gain = eta.expect(r);

    let mut z = linalg::identity_minus(n, p, 1.0);
    for i in 0..n {
        for j in 0..n {
            z[(i, j)] += eta.probs[j];
        }
    }
    let centered: Vec<f64> = r.iter().map(|x| x - gain).collect();
    let bias = linalg::solve(z, &centered)
        .ok_or_else(|| Error::NotErgodic("fundamental matrix is singular".into()))?;
    let residual = poisson_residual(chain, gain, &bias);
    Ok(GainBias {
        gain,
        bias: ValueVector::from_finite(bias),
        residual,
    })
}

/// `||r - alpha 1 - (I - P) u||_inf`.
pub fn poisson_residual(chain: &InducedChain, gain: f64, bias: &[f64]) -> f64 {
    let n = chain.n_states();
    let pu = linalg::mat_vec(n, chain.transition(), bias);
    (0..n)
        .map(|s| (chain.reward()[s] - gain - bias[s] + pu[s]).abs())
        .fold(0.0, f64::max)
}

/// `ᾱ = max_pi alpha^pi` by exhaustive enumeration, with the default cap.
pub fn optimal_average_reward(mdp: &TabularMdp) -> Result<(f64, Policy)> {
    optimal_average_reward_capped(mdp, ENUMERATION_CAP)
}

/// As [`optimal_average_reward`] with an explicit cap on `|A|^|S|`.
///
/// Ties (within [`GAIN_TIE_TOL`]) go to the lexicographically smallest policy.
pub fn optimal_average_reward_capped(mdp: &TabularMdp, cap: u64) -> Result<(f64, Policy)> {
    let count = mdp.n_policies();
    if count > cap as f64 {
        return Err(Error::EnumerationInfeasible { count, cap });
    }
    let mut best: Option<(f64, Policy)> = None;
    for policy in Policy::enumerate(mdp.n_states(), mdp.n_actions()) {
        let gain = average_reward(&mdp.induce(&policy)?)?;
        match &best {
            Some((g, _)) if gain <= g + GAIN_TIE_TOL => {}
            _ => best = Some((gain, policy)),
        }
    }
    Ok(best.expect("at least one policy"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn symmetric(theta: f64, r: [f64; 2]) -> InducedChain {
        InducedChain::from_rows(
            &[vec![1.0 - theta, theta], vec![theta, 1.0 - theta]],
            r.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn symmetric_chain_is_uniform() {
        for theta in [0.01, 0.3, 0.99] {
            let eta = stationary(&symmetric(theta, [0.0, 1.0])).unwrap();
            assert_abs_diff_eq!(eta.probs[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(eta.probs[1], 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn iid_chain_returns_the_row() {
        let row = vec![0.2, 0.5, 0.3];
        let chain = InducedChain::from_rows(&[row.clone(), row.clone(), row.clone()], vec![0.0; 3])
            .unwrap();
        let eta = stationary(&chain).unwrap();
        for (a, b) in eta.probs.iter().zip(&row) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_state_matches_power_iteration() {
        let rows = vec![
            vec![0.1, 0.6, 0.3],
            vec![0.4, 0.4, 0.2],
            vec![0.7, 0.05, 0.25],
        ];
        let chain = InducedChain::from_rows(&rows, vec![0.0; 3]).unwrap();
        let eta = stationary(&chain).unwrap();
        let mut dist = vec![1.0, 0.0, 0.0];
        for _ in 0..2000 {
            dist = linalg::vec_mat(3, &dist, chain.transition());
        }
        for (a, b) in eta.probs.iter().zip(&dist) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn two_recurrent_classes_rejected() {
        let chain =
            InducedChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0, 1.0]).unwrap();
        assert!(matches!(stationary(&chain), Err(Error::NotErgodic(_))));
        assert!(poisson_solve(&chain).is_err());
    }

    #[test]
    fn gain_examples() {
        assert_abs_diff_eq!(
            average_reward(&symmetric(0.3, [0.7, 0.7])).unwrap(),
            0.7,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            average_reward(&symmetric(0.1, [0.0, 1.0])).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn poisson_examples() {
        let gb = poisson_solve(&symmetric(0.3, [0.4, 0.4])).unwrap();
        assert_abs_diff_eq!(gb.gain, 0.4, epsilon = 1e-12);
        assert!(gb.bias.sup_norm() < 1e-12);

        let chain = symmetric(0.1, [0.0, 1.0]);
        let gb = poisson_solve(&chain).unwrap();
        assert_abs_diff_eq!(gb.gain, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gb.bias[0], -2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(gb.bias[1], 2.5, epsilon = 1e-12);
        assert!(gb.residual <= 1e-10);

        let shifted: Vec<f64> = gb.bias.iter().map(|u| u + 7.0).collect();
        assert!(poisson_residual(&chain, gb.gain, &shifted) <= 1e-10);
    }

    #[test]
    fn periodic_chain_gets_cesaro_gain() {
        let chain =
            InducedChain::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0, 1.0]).unwrap();
        let gb = poisson_solve(&chain).unwrap();
        assert_abs_diff_eq!(gb.gain, 0.5, epsilon = 1e-12);
        assert!(gb.residual <= 1e-10);
    }

    #[test]
    fn action_independent_picks_smallest_policy() {
        let mdp = TabularMdp::from_nested(
            &[vec![0.3, 0.3], vec![0.9, 0.9]],
            &[
                vec![vec![0.4, 0.6], vec![0.4, 0.6]],
                vec![vec![0.8, 0.2], vec![0.8, 0.2]],
            ],
        )
        .unwrap();
        let (_, policy) = optimal_average_reward(&mdp).unwrap();
        assert_eq!(policy.actions(), &[0, 0]);
    }

    #[test]
    fn enumeration_cap() {
        let kernel: Vec<f64> = (0..6).flat_map(|_| [0.25, 0.25, 0.5]).collect();
        let mdp = TabularMdp::new(3, 2, vec![0.0; 6], kernel).unwrap();
        assert!(matches!(
            optimal_average_reward_capped(&mdp, 4),
            Err(Error::EnumerationInfeasible { .. })
        ));
        assert!(optimal_average_reward_capped(&mdp, 8).is_ok());
    }
}
