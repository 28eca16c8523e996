//! Mixing and minorization times.
//!
//! For a fixed lag `m`, the best Doeblin pair `P^m(s, .) >= q psi(.)` uses the column minima:
//! any admissible `q psi(s')` is at most `min_s P^m(s, s')`, so `q <= sum_{s'} min_s P^m(s, s')`,
//! and `psi` proportional to the column minima attains that bound.
//!
//! Distances are `l1` (twice total variation).

use serde::Serialize;

use crate::average::{self, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{InducedChain, Policy, TabularMdp};

/// Default lag cap for the minorization and mixing scans.
pub const DEFAULT_M_MAX: usize = 4096;

/// Slack on the `<= 1/2` mixing test, absorbing rounding in the stationary solve.
const MIX_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyErgodicity {
    pub policy: Policy,
    pub t_mix: usize,
    pub t_minorize: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub t_mix: usize,
    pub t_minorize: f64,
    pub best_m: usize,
    pub q_at_best_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_policy: Option<Vec<PolicyErgodicity>>,
}

impl ErgodicityReport {
    /// `t_minorize <= 22 t_mix <= 22 ln(16) t_minorize`.
    pub fn sandwich_holds(&self) -> bool {
        let t_mix = self.t_mix as f64;
        self.t_minorize <= 22.0 * t_mix && 22.0 * t_mix <= 22.0 * 16f64.ln() * self.t_minorize
    }
}

/// Successive powers `P, P^2, ...` of a chain.
struct Powers<'a> {
    n: usize,
    p: &'a [f64],
    current: Vec<f64>,
}

impl<'a> Powers<'a> {
    fn new(chain: &'a InducedChain) -> Self {
        Powers {
            n: chain.n_states(),
            p: chain.transition(),
            current: chain.transition().to_vec(),
        }
    }

    fn advance(&mut self) {
        self.current = linalg::matmul(self.n, &self.current, self.p);
    }
}

fn column_minimum_mass(n: usize, pm: &[f64]) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| pm[i * n + j]).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `q_m = sum_{s'} min_s P^m(s, s')`.
pub fn minorization_coefficient(chain: &InducedChain, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::param("lag m must be at least 1"));
    }
    let mut powers = Powers::new(chain);
    for _ in 1..m {
        powers.advance();
    }
    Ok(column_minimum_mass(chain.n_states(), &powers.current))
}

/// `min_{1 <= m <= m_max} m / q_m`, returned as `(t_minorize, best_m, q_best)`.
///
/// Since `m / q_m >= m`, the scan stops once `m` reaches the best ratio found.
pub fn minorization_time(chain: &InducedChain, m_max: usize) -> Result<(f64, usize, f64)> {
    if m_max == 0 {
        return Err(Error::param("m_max must be at least 1"));
    }
    let n = chain.n_states();
    let mut powers = Powers::new(chain);
    let mut best: Option<(f64, usize, f64)> = None;
    for m in 1..=m_max {
        if let Some((t, _, _)) = best {
            if m as f64 >= t {
                break;
            }
        }
        if m > 1 {
            powers.advance();
        }
        let q = column_minimum_mass(n, &powers.current);
        if q > 0.0 {
            let ratio = m as f64 / q;
            if best.is_none_or(|(t, _, _)| ratio < t) {
                best = Some((ratio, m, q));
            }
        }
    }
    best.ok_or(Error::NotUniformlyErgodic {
        policy: Vec::new(),
        m_max,
    })
}

/// Smallest `m` with `max_s ||P^m(s, .) - eta||_1 <= 1/2`.
pub fn mixing_time(chain: &InducedChain, m_max: usize) -> Result<usize> {
    let n = chain.n_states();
    let eta = average::stationary(chain)?.probs;
    let mut powers = Powers::new(chain);
    for m in 1..=m_max {
        if m > 1 {
            powers.advance();
        }
        let dist = powers
            .current
            .chunks(n)
            .map(|row| {
                row.iter()
                    .zip(&eta)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        if dist <= 0.5 + MIX_SLACK {
            return Ok(m);
        }
    }
    Err(Error::NotMixing { m_max })
}

/// Mixing and minorization report for a single chain.
pub fn chain_ergodicity(chain: &InducedChain, m_max: usize) -> Result<ErgodicityReport> {
    let (t_minorize, best_m, q) = minorization_time(chain, m_max)?;
    let t_mix = mixing_time(chain, m_max)?;
    let report = ErgodicityReport {
        t_mix,
        t_minorize,
        best_m,
        q_at_best_m: q,
        per_policy: None,
    };
    debug_assert!(report.sandwich_holds(), "sandwich violated: {report:?}");
    Ok(report)
}

/// Worst-case `t_mix` and `t_minorize` over all deterministic policies.
pub fn mdp_ergodicity(mdp: &TabularMdp, m_max: usize) -> Result<ErgodicityReport> {
    let count = mdp.n_policies();
    if count > ENUMERATION_CAP as f64 {
        return Err(Error::EnumerationInfeasible {
            count,
            cap: ENUMERATION_CAP,
        });
    }
    let mut per_policy = Vec::new();
    let mut worst_mix = 0;
    let mut worst_minorize: Option<(f64, usize, f64)> = None;
    for policy in Policy::enumerate(mdp.n_states(), mdp.n_actions()) {
        let chain = mdp.induce(&policy)?;
        let report = chain_ergodicity(&chain, m_max).map_err(|e| match e {
            Error::NotErgodic(_) | Error::NotUniformlyErgodic { .. } | Error::NotMixing { .. } => {
                Error::NotUniformlyErgodic {
                    policy: policy.actions().to_vec(),
                    m_max,
                }
            }
            other => other,
        })?;
        worst_mix = worst_mix.max(report.t_mix);
        if worst_minorize.is_none_or(|(t, _, _)| report.t_minorize > t) {
            worst_minorize = Some((report.t_minorize, report.best_m, report.q_at_best_m));
        }
        per_policy.push(PolicyErgodicity {
            policy,
            t_mix: report.t_mix,
            t_minorize: report.t_minorize,
        });
    }
    let (t_minorize, best_m, q_at_best_m) = worst_minorize.expect("at least one policy");
    let report = ErgodicityReport {
        t_mix: worst_mix,
        t_minorize,
        best_m,
        q_at_best_m,
        per_policy: Some(per_policy),
    };
    debug_assert!(report.sandwich_holds(), "sandwich violated: {report:?}");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn symmetric(theta: f64) -> InducedChain {
        InducedChain::from_rows(
            &[vec![1.0 - theta, theta], vec![theta, 1.0 - theta]],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    fn iid() -> InducedChain {
        let row = vec![0.2, 0.3, 0.5];
        InducedChain::from_rows(&[row.clone(), row.clone(), row], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(minorization_coefficient(&iid(), 1).unwrap(), 1.0);
        let identity =
            InducedChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2]).unwrap();
        assert_eq!(minorization_coefficient(&identity, 5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            minorization_coefficient(&symmetric(0.1), 1).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        assert!(minorization_coefficient(&iid(), 0).is_err());
    }

    #[test]
    fn coefficient_closed_form() {
        let theta: f64 = 0.07;
        for m in 1..30 {
            let q = minorization_coefficient(&symmetric(theta), m).unwrap();
            assert_abs_diff_eq!(q, 1.0 - (1.0 - 2.0 * theta).powi(m as i32), epsilon = 1e-12);
        }
    }

    #[test]
    fn minorization_time_examples() {
        assert_eq!(minorization_time(&iid(), 100).unwrap(), (1.0, 1, 1.0));
        let (t, m, _) = minorization_time(&symmetric(0.1), 4096).unwrap();
        assert_eq!(t, 5.0);
        assert_eq!(m, 1);
        assert_eq!(minorization_time(&symmetric(0.5), 10).unwrap().0, 1.0);
        let identity =
            InducedChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![0.0; 2]).unwrap();
        assert!(matches!(
            minorization_time(&identity, 50),
            Err(Error::NotUniformlyErgodic { .. })
        ));
    }

    #[test]
    fn periodic_chain_needs_no_minorization_at_any_lag() {
        let flip =
            InducedChain::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]], vec![0.0; 2]).unwrap();
        assert!(minorization_time(&flip, 64).is_err());
    }

    #[test]
    fn mixing_time_examples() {
        assert_eq!(mixing_time(&iid(), 100).unwrap(), 1);
        assert_eq!(mixing_time(&symmetric(0.1), 100).unwrap(), 4);
        assert_eq!(mixing_time(&symmetric(0.25), 100).unwrap(), 1);
        assert!(matches!(
            mixing_time(&symmetric(0.001), 10),
            Err(Error::NotMixing { m_max: 10 })
        ));
    }

    #[test]
    fn action_independent_mdp_matches_chain() {
        let mdp = TabularMdp::from_nested(
            &[vec![0.0, 1.0], vec![1.0, 0.0]],
            &[
                vec![vec![0.9, 0.1], vec![0.9, 0.1]],
                vec![vec![0.1, 0.9], vec![0.1, 0.9]],
            ],
        )
        .unwrap();
        let report = mdp_ergodicity(&mdp, DEFAULT_M_MAX).unwrap();
        let chain = chain_ergodicity(&symmetric(0.1), DEFAULT_M_MAX).unwrap();
        assert_eq!(report.t_mix, chain.t_mix);
        assert_eq!(report.t_minorize, chain.t_minorize);
        assert_eq!(report.per_policy.as_ref().unwrap().len(), 4);
    }

    #[test]
    fn absorbing_policy_is_named() {
        let mdp = TabularMdp::from_nested(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[
                vec![vec![0.5, 0.5], vec![1.0, 0.0]],
                vec![vec![0.5, 0.5], vec![0.0, 1.0]],
            ],
        )
        .unwrap();
        match mdp_ergodicity(&mdp, 64) {
            Err(Error::NotUniformlyErgodic { policy, .. }) => assert_eq!(policy, vec![1, 1]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
