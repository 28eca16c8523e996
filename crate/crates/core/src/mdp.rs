//! Core domain types: finite MDPs, deterministic policies, induced chains and the JSON layer.

use std::fmt;
use std::io::Read;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

/// Tolerance on kernel row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// First invariant violated by a candidate MDP or chain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {what} at (s={s},a={a})")]
    NonFinite {
        what: &'static str,
        s: usize,
        a: usize,
    },
    #[error("negative probability {value} at (s={s},a={a},s'={next})")]
    NegativeProbability {
        s: usize,
        a: usize,
        next: usize,
        value: f64,
    },
    #[error("row sum ≠ 1 at (s={s},a={a}): {sum}")]
    RowSum { s: usize, a: usize, sum: f64 },
    #[error("reward out of [0,{max}] at (s={s},a={a}): {value}")]
    RewardOutOfRange {
        s: usize,
        a: usize,
        value: f64,
        max: f64,
    },
}

/// Reward table and transition kernel of a finite MDP.
///
/// Rewards are stored as `rewards[s * n_actions + a]` and the kernel as
/// `kernel[(s * n_actions + a) * n_states + s']`. Instances are immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    rewards: Vec<f64>,
    kernel: Vec<f64>,
    reward_max: f64,
}

impl TabularMdp {
    /// Builds and validates an MDP with rewards in `[0, 1]`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        rewards: Vec<f64>,
        kernel: Vec<f64>,
    ) -> Result<Self> {
        Self::with_reward_bound(n_states, n_actions, rewards, kernel, 1.0)
    }

    /// Same as [`TabularMdp::new`] but admits rewards in `[0, reward_max]`.
    ///
    /// Perturbed rewards `r + Z` with `Z <= zeta` need `reward_max = 1 + zeta`.
    pub fn with_reward_bound(
        n_states: usize,
        n_actions: usize,
        rewards: Vec<f64>,
        kernel: Vec<f64>,
        reward_max: f64,
    ) -> Result<Self> {
        validate_parts(n_states, n_actions, &rewards, &kernel, reward_max)?;
        Ok(TabularMdp {
            n_states,
            n_actions,
            rewards,
            kernel,
            reward_max,
        })
    }

    /// Builds from nested tables `rewards[s][a]` and `kernel[s][a][s']`.
    pub fn from_nested(rewards: &[Vec<f64>], kernel: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_states = rewards.len();
        let n_actions = rewards.first().map_or(0, Vec::len);
        let file = MdpFile {
            n_states,
            n_actions,
            rewards: rewards.to_vec(),
            kernel: kernel.to_vec(),
        };
        let (flat_r, flat_k) = file.flatten()?;
        Self::new(n_states, n_actions, flat_r, flat_k)
    }

    /// Re-checks every invariant. Always `Ok` for values built through the constructors.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        validate_parts(
            self.n_states,
            self.n_actions,
            &self.rewards,
            &self.kernel,
            self.reward_max,
        )
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of state-action pairs, `|S| |A|`.
    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    /// `|A|^|S|`, the size of the deterministic stationary policy class (as a float, it may be huge).
    pub fn n_policies(&self) -> f64 {
        (self.n_actions as f64).powi(self.n_states as i32)
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn reward_max(&self) -> f64 {
        self.reward_max
    }

    /// The next-state distribution `p_{s,a}`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.kernel[start..start + self.n_states]
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// `p_{s,a}[v] = sum_{s'} p_{s,a}(s') v(s')`.
    pub fn expect(&self, s: usize, a: usize, v: &[f64]) -> f64 {
        self.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum()
    }

    /// Checks a reward table shape for use as an override.
    pub(crate) fn check_reward_table(&self, rewards: &[f64]) -> Result<()> {
        if rewards.len() != self.n_pairs() {
            return Err(Error::param(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                self.n_pairs()
            )));
        }
        if let Some(i) = rewards.iter().position(|r| !r.is_finite()) {
            return Err(Error::param(format!("non-finite reward at index {i}")));
        }
        Ok(())
    }

    /// Checks that `policy` is a valid policy for this MDP.
    pub fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.len() != self.n_states {
            return Err(Error::param(format!(
                "policy has {} entries, expected {}",
                policy.len(),
                self.n_states
            )));
        }
        for (s, &a) in policy.actions().iter().enumerate() {
            if a >= self.n_actions {
                return Err(Error::InvalidPolicy {
                    state: s,
                    action: a,
                    n_actions: self.n_actions,
                });
            }
        }
        Ok(())
    }

    /// The Markov chain `(P_pi, r_pi)` induced by a deterministic policy.
    pub fn induce(&self, policy: &Policy) -> Result<InducedChain> {
        self.induce_with_rewards(policy, &self.rewards)
    }

    /// Like [`TabularMdp::induce`] but reads rewards from `rewards` (an `(s, a)` table).
    pub fn induce_with_rewards(&self, policy: &Policy, rewards: &[f64]) -> Result<InducedChain> {
        self.check_policy(policy)?;
        self.check_reward_table(rewards)?;
        let n = self.n_states;
        let mut transition = Vec::with_capacity(n * n);
        let mut reward = Vec::with_capacity(n);
        for (s, &a) in policy.actions().iter().enumerate() {
            transition.extend_from_slice(self.row(s, a));
            reward.push(rewards[s * self.n_actions + a]);
        }
        Ok(InducedChain {
            n_states: n,
            transition,
            reward,
        })
    }

    /// Parses the JSON interchange format.
    ///
    /// Rows whose sum is within [`ROW_SUM_TOL`] of one but not exactly one are renormalized
    /// once; each such row is reported in the returned warnings.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<(Self, Vec<String>)> {
        let file: MdpFile = serde_json::from_reader(reader)?;
        file.into_mdp()
    }

    pub fn from_json_str(text: &str) -> Result<(Self, Vec<String>)> {
        Self::from_json_reader(text.as_bytes())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MdpFile::from(self)).expect("MDP serializes")
    }
}

/// On-disk layout: `{"n_states", "n_actions", "rewards": [[..]], "kernel": [[[..]]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MdpFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub rewards: Vec<Vec<f64>>,
    pub kernel: Vec<Vec<Vec<f64>>>,
}

impl MdpFile {
    fn flatten(&self) -> std::result::Result<(Vec<f64>, Vec<f64>), Violation> {
        let (ns, na) = (self.n_states, self.n_actions);
        if self.rewards.len() != ns || self.kernel.len() != ns {
            return Err(Violation::Shape(format!(
                "expected {ns} reward and kernel rows, got {} and {}",
                self.rewards.len(),
                self.kernel.len()
            )));
        }
        let mut rewards = Vec::with_capacity(ns * na);
        let mut kernel = Vec::with_capacity(ns * na * ns);
        for s in 0..ns {
            if self.rewards[s].len() != na || self.kernel[s].len() != na {
                return Err(Violation::Shape(format!(
                    "state {s}: expected {na} actions"
                )));
            }
            rewards.extend_from_slice(&self.rewards[s]);
            for a in 0..na {
                if self.kernel[s][a].len() != ns {
                    return Err(Violation::Shape(format!(
                        "kernel row (s={s},a={a}) has {} entries, expected {ns}",
                        self.kernel[s][a].len()
                    )));
                }
                kernel.extend_from_slice(&self.kernel[s][a]);
            }
        }
        Ok((rewards, kernel))
    }

    fn into_mdp(self) -> Result<(TabularMdp, Vec<String>)> {
        let (rewards, mut kernel) = self.flatten()?;
        let ns = self.n_states;
        let mut warnings = Vec::new();
        if ns > 0 {
            for (i, row) in kernel.chunks_mut(ns).enumerate() {
                let sum: f64 = row.iter().sum();
                if sum != 1.0 && (sum - 1.0).abs() <= ROW_SUM_TOL {
                    row.iter_mut().for_each(|p| *p /= sum);
                    warnings.push(format!(
                        "renormalized kernel row (s={},a={}) with sum {sum:.17}",
                        i / self.n_actions,
                        i % self.n_actions
                    ));
                }
            }
        }
        let mdp = TabularMdp::new(self.n_states, self.n_actions, rewards, kernel)?;
        Ok((mdp, warnings))
    }
}

impl From<&TabularMdp> for MdpFile {
    fn from(mdp: &TabularMdp) -> Self {
        let (ns, na) = (mdp.n_states, mdp.n_actions);
        MdpFile {
            n_states: ns,
            n_actions: na,
            rewards: (0..ns)
                .map(|s| (0..na).map(|a| mdp.reward(s, a)).collect())
                .collect(),
            kernel: (0..ns)
                .map(|s| (0..na).map(|a| mdp.row(s, a).to_vec()).collect())
                .collect(),
        }
    }
}

/// Checks the MDP invariants on raw tables, returning the first violation found.
pub fn validate_parts(
    n_states: usize,
    n_actions: usize,
    rewards: &[f64],
    kernel: &[f64],
    reward_max: f64,
) -> std::result::Result<(), Violation> {
    if n_states == 0 || n_actions == 0 {
        return Err(Violation::Shape(format!(
            "need at least one state and one action, got |S|={n_states}, |A|={n_actions}"
        )));
    }
    let pairs = n_states * n_actions;
    if rewards.len() != pairs {
        return Err(Violation::Shape(format!(
            "reward table has {} entries, expected {pairs}",
            rewards.len()
        )));
    }
    if kernel.len() != pairs * n_states {
        return Err(Violation::Shape(format!(
            "kernel has {} entries, expected {}",
            kernel.len(),
            pairs * n_states
        )));
    }
    for s in 0..n_states {
        for a in 0..n_actions {
            let i = s * n_actions + a;
            let row = &kernel[i * n_states..(i + 1) * n_states];
            check_row(row, s, a)?;
            let r = rewards[i];
            if !r.is_finite() {
                return Err(Violation::NonFinite {
                    what: "reward",
                    s,
                    a,
                });
            }
            if !(0.0..=reward_max).contains(&r) {
                return Err(Violation::RewardOutOfRange {
                    s,
                    a,
                    value: r,
                    max: reward_max,
                });
            }
        }
    }
    Ok(())
}

fn check_row(row: &[f64], s: usize, a: usize) -> std::result::Result<(), Violation> {
    for (next, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            return Err(Violation::NonFinite {
                what: "probability",
                s,
                a,
            });
        }
        if p < 0.0 {
            return Err(Violation::NegativeProbability {
                s,
                a,
                next,
                value: p,
            });
        }
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Violation::RowSum { s, a, sum });
    }
    Ok(())
}

/// A deterministic stationary policy `pi: S -> A`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Policy {
    actions: Vec<usize>,
}

impl Policy {
    pub fn new(actions: Vec<usize>) -> Self {
        Policy { actions }
    }

    /// The policy playing action `a` in every state.
    pub fn constant(n_states: usize, a: usize) -> Self {
        Policy {
            actions: vec![a; n_states],
        }
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// All `|A|^|S|` policies in lexicographic order (state 0 most significant).
    pub fn enumerate(n_states: usize, n_actions: usize) -> PolicyIter {
        PolicyIter {
            next: (n_actions > 0).then(|| vec![0; n_states]),
            n_actions,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.actions.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Iterator returned by [`Policy::enumerate`].
#[derive(Debug, Clone)]
pub struct PolicyIter {
    next: Option<Vec<usize>>,
    n_actions: usize,
}

impl Iterator for PolicyIter {
    type Item = Policy;

    fn next(&mut self) -> Option<Policy> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        // odometer increment from the last state
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.n_actions {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(Policy::new(current))
    }
}

/// A finite real vector of values (`v`, `u` or `h`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueVector(Vec<f64>);

impl ValueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite value at index {i}")));
        }
        Ok(ValueVector(values))
    }

    pub(crate) fn from_finite(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ValueVector(values)
    }

    pub fn zeros(n: usize) -> Self {
        ValueVector(vec![0.0; n])
    }

    pub fn span(&self) -> f64 {
        span_seminorm(&self.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ValueVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Span semi-norm `max_i v_i - min_i v_i` (zero for an empty vector).
pub fn span_seminorm(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo
}

/// The chain `(P_pi, r_pi)` a policy induces on the state space.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    n_states: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
}

impl InducedChain {
    /// Builds a chain from a row-major transition matrix and a reward vector.
    pub fn new(n_states: usize, transition: Vec<f64>, reward: Vec<f64>) -> Result<Self> {
        if n_states == 0 || transition.len() != n_states * n_states || reward.len() != n_states {
            return Err(Violation::Shape(format!(
                "chain with {n_states} states needs {} transition and {n_states} reward entries",
                n_states * n_states
            ))
            .into());
        }
        for (s, row) in transition.chunks(n_states).enumerate() {
            check_row(row, s, 0)?;
        }
        if let Some(s) = reward.iter().position(|r| !r.is_finite()) {
            return Err(Violation::NonFinite {
                what: "reward",
                s,
                a: 0,
            }
            .into());
        }
        Ok(InducedChain {
            n_states,
            transition,
            reward,
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(rows: &[Vec<f64>], reward: Vec<f64>) -> Result<Self> {
        let n = rows.len();
        let transition = rows.iter().flatten().copied().collect();
        Self::new(n, transition, reward)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Row-major `P_pi`.
    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.transition[s * self.n_states..(s + 1) * self.n_states]
    }

    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    /// Same transition matrix with a different reward vector.
    pub fn with_reward(&self, reward: Vec<f64>) -> Result<Self> {
        Self::new(self.n_states, self.transition.clone(), reward)
    }
}
