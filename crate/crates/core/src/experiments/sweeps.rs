//! The two sample-complexity sweeps.
//!
//! The error of one replication is the suboptimality `ᾱ - alpha^pi` of the learned policy.
//! On a fixed instance that quantity is a threshold event (zero once the gap is resolved), so
//! the epsilon-sweep ties the instance to the target: the gap parameter is
//! `kappa = kappa_per_epsilon * epsilon`, the usual construction for rate experiments.

use serde::Serialize;

use crate::algorithms::{plan_with, PlanOptions, ReductionPlan, Sizing, PLAN_CONSTANT};
use crate::error::{Error, Result};
use crate::instances::{hard_instance, HardInstanceSpec};

use super::regression::{fit_log_log, RegressionResult};
use super::{run_configurations, summarize, Configuration, ExperimentRecord, SweepPoint};

/// Scale applied to the plan constant in desk-sized epsilon-sweeps.
pub const DESK_CONSTANT_SCALE: f64 = 1e-7;

/// `k` log-spaced values from `a` to `b` inclusive.
pub fn log_spaced(a: f64, b: f64, k: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b >= a && k >= 1) {
        return Err(Error::param(format!("bad log-spaced grid {a}:{b}:{k}")));
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    let (la, lb) = (a.log10(), b.log10());
    Ok((0..k)
        .map(|i| 10f64.powf(la + (lb - la) * i as f64 / (k - 1) as f64))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<ExperimentRecord>,
    pub points: Vec<SweepPoint>,
    /// `None` when fewer than two configurations were run.
    pub regression: Option<RegressionResult>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EpsSweepConfig {
    pub algo: Sizing,
    pub t_minorize: f64,
    pub n_actions: usize,
    pub kappa_per_epsilon: f64,
    pub delta: f64,
    /// Total-sample budgets, one configuration each.
    pub budgets: Vec<u64>,
    pub reps: usize,
    pub seed: u64,
    pub plan: PlanOptions,
    /// Budgets above this are rejected.
    pub budget_cap: u64,
    pub threads: Option<usize>,
}

impl EpsSweepConfig {
    /// Desk-sized defaults: five budgets from `10^6.8` to `10^8.3`, 50 replications.
    pub fn desk(algo: Sizing) -> Self {
        let budgets = log_spaced(10f64.powf(6.8), 10f64.powf(8.3), 5)
            .expect("valid grid")
            .into_iter()
            .map(|b| b.round() as u64)
            .collect();
        EpsSweepConfig {
            algo,
            t_minorize: 10.0,
            n_actions: 4,
            kappa_per_epsilon: 0.005,
            delta: 0.1,
            budgets,
            reps: 50,
            seed: 1,
            plan: PlanOptions {
                constant: PLAN_CONSTANT * DESK_CONSTANT_SCALE,
                enforce_gate: false,
            },
            budget_cap: 1_000_000_000,
            threads: None,
        }
    }

    /// Unscaled constant with the minimum-sample gate and 300 replications; budgets start at
    /// the cheapest baseline plan and span 1.5 decades.
    pub fn full_scale(algo: Sizing) -> Result<Self> {
        let plan = PlanOptions::default();
        let mut cfg = EpsSweepConfig {
            reps: 300,
            plan,
            budget_cap: u64::MAX,
            ..Self::desk(algo)
        };
        let floor = plan_with(
            1.0,
            cfg.delta,
            cfg.t_minorize,
            2,
            cfg.n_actions,
            Sizing::Baseline,
            &plan,
        )?
        .total_samples as f64;
        cfg.budgets = log_spaced(floor, floor * 10f64.powf(1.5), 5)?
            .into_iter()
            .map(|b| b.ceil() as u64)
            .collect();
        Ok(cfg)
    }
}

fn plan_n(
    epsilon: f64,
    delta: f64,
    t_minorize: f64,
    n_actions: usize,
    sizing: Sizing,
    options: &PlanOptions,
) -> Option<ReductionPlan> {
    plan_with(epsilon, delta, t_minorize, 2, n_actions, sizing, options).ok()
}

/// Smallest `epsilon in (0, 1]` whose plan fits in `budget` total samples on a two-state
/// instance with `n_actions` actions; `BudgetExceeded` if even `epsilon = 1` does not fit.
pub fn implied_epsilon(
    budget: u64,
    delta: f64,
    t_minorize: f64,
    n_actions: usize,
    sizing: Sizing,
    options: &PlanOptions,
) -> Result<f64> {
    let fits = |eps: f64| {
        plan_n(eps, delta, t_minorize, n_actions, sizing, options)
            .is_some_and(|p| p.total_samples <= budget)
    };
    if !fits(1.0) {
        let required = plan_with(1.0, delta, t_minorize, 2, n_actions, sizing, options)?;
        return Err(Error::BudgetExceeded {
            required: required.total_samples,
            cap: budget,
        });
    }
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok(hi)
}

/// Error against total samples for one reducer; the slope estimates the sample-complexity
/// exponent `-1/2` (ours) or `-1/3` (baseline).
pub fn eps_sweep(cfg: &EpsSweepConfig) -> Result<SweepOutcome> {
    if cfg.budgets.len() < 4 {
        return Err(Error::param(format!(
            "the budget grid needs at least 4 points, got {}",
            cfg.budgets.len()
        )));
    }
    let (lo, hi) = cfg
        .budgets
        .iter()
        .fold((u64::MAX, 0), |(lo, hi), &b| (lo.min(b), hi.max(b)));
    if (hi as f64 / lo as f64).log10() < 1.5 - 1e-9 {
        return Err(Error::param(
            "the budget grid must span at least 1.5 decades",
        ));
    }
    if cfg.reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    if let Some(&b) = cfg.budgets.iter().find(|&&b| b > cfg.budget_cap) {
        return Err(Error::BudgetExceeded {
            required: b,
            cap: cfg.budget_cap,
        });
    }
    let theta = crate::instances::calibrate_theta(cfg.t_minorize)?;

    // reject the whole sweep before sampling if any budget is infeasible
    let mut configs = Vec::with_capacity(cfg.budgets.len());
    for &budget in &cfg.budgets {
        let eps = implied_epsilon(
            budget,
            cfg.delta,
            cfg.t_minorize,
            cfg.n_actions,
            cfg.algo,
            &cfg.plan,
        )?;
        let plan = plan_with(
            eps,
            cfg.delta,
            cfg.t_minorize,
            2,
            cfg.n_actions,
            cfg.algo,
            &cfg.plan,
        )?;
        let spec = HardInstanceSpec {
            t_minorize_target: cfg.t_minorize,
            theta,
            kappa: cfg.kappa_per_epsilon * eps,
            n_actions: cfg.n_actions,
        };
        configs.push(Configuration::new(hard_instance(&spec)?, plan)?);
    }
    for c in &configs {
        log::info!(
            "{} eps={:.4} n={} total={}",
            cfg.algo.name(),
            c.plan.epsilon,
            c.plan.n_per_sa,
            c.plan.total_samples
        );
    }

    let records = run_configurations(&configs, cfg.reps, cfg.seed, cfg.threads)?;
    finish(records, |p| p.total_samples as f64)
}

#[derive(Debug, Clone)]
pub struct TminorizeSweepConfig {
    pub targets: Vec<f64>,
    /// `n_per_sa = ceil(c_samples * t)`.
    pub c_samples: f64,
    pub reps: usize,
    pub seed: u64,
    pub n_actions: usize,
    pub kappa: f64,
    /// Nominal target fixing `gamma` and `zeta` at each `t`.
    pub epsilon: f64,
    pub delta: f64,
    pub threads: Option<usize>,
}

impl TminorizeSweepConfig {
    /// Targets `{10, 31.6, 100}`, `C = 4500`, 30 replications.
    pub fn desk() -> Self {
        TminorizeSweepConfig {
            targets: vec![10.0, 31.6, 100.0],
            c_samples: 4500.0,
            reps: 30,
            seed: 1,
            n_actions: 4,
            kappa: 0.005,
            epsilon: 0.5,
            delta: 0.1,
            threads: None,
        }
    }

    /// Targets over `[10, 1000]` and 300 replications.
    pub fn full_scale() -> Self {
        TminorizeSweepConfig {
            targets: log_spaced(10.0, 1000.0, 5).expect("valid grid"),
            reps: 300,
            ..Self::desk()
        }
    }
}

/// Error against minorization time at `n = C t` samples per pair; a flat slope means the
/// required samples grow linearly in `t`.
pub fn tminorize_sweep(cfg: &TminorizeSweepConfig) -> Result<SweepOutcome> {
    if cfg.targets.is_empty() {
        return Err(Error::param("no targets given"));
    }
    if !(cfg.c_samples > 0.0 && cfg.c_samples.is_finite()) {
        return Err(Error::param("C must be positive"));
    }
    if cfg.reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let options = PlanOptions {
        enforce_gate: false,
        ..PlanOptions::default()
    };
    let mut configs = Vec::with_capacity(cfg.targets.len());
    for &t in &cfg.targets {
        let spec = HardInstanceSpec::calibrated(t, cfg.kappa, cfg.n_actions)?;
        let mut plan = plan_with(
            cfg.epsilon,
            cfg.delta,
            t,
            2,
            cfg.n_actions,
            Sizing::Ours,
            &options,
        )?;
        plan.n_per_sa = (cfg.c_samples * t).ceil() as u64;
        plan.total_samples = plan.n_per_sa * 2 * cfg.n_actions as u64;
        configs.push(Configuration::new(hard_instance(&spec)?, plan)?);
    }
    let records = run_configurations(&configs, cfg.reps, cfg.seed, cfg.threads)?;
    finish(records, |p| p.t_minorize)
}

fn finish(records: Vec<ExperimentRecord>, x: impl Fn(&SweepPoint) -> f64) -> Result<SweepOutcome> {
    let points = summarize(&records);
    let mut warnings = Vec::new();
    let regression = if points.len() < 2 {
        warnings.push("fewer than two configurations: slope undefined".to_string());
        None
    } else {
        let xs: Vec<f64> = points.iter().map(&x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.mean_error).collect();
        Some(fit_log_log(&xs, &ys)?)
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(SweepOutcome {
        records,
        points,
        regression,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn log_spaced_endpoints() {
        let g = log_spaced(1e5, 1e7, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_abs_diff_eq!(g[0], 1e5, epsilon = 1e-6);
        assert_abs_diff_eq!(g[2], 1e6, epsilon = 1e-4);
        assert_abs_diff_eq!(g[4], 1e7, epsilon = 1e-3);
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn implied_epsilon_inverts_the_plan() {
        let opts = PlanOptions {
            constant: PLAN_CONSTANT * DESK_CONSTANT_SCALE,
            enforce_gate: false,
        };
        for sizing in [Sizing::Ours, Sizing::Baseline] {
            let budget = 20_000_000;
            let eps = implied_epsilon(budget, 0.1, 10.0, 4, sizing, &opts).unwrap();
            let plan = plan_with(eps, 0.1, 10.0, 2, 4, sizing, &opts).unwrap();
            assert!(plan.total_samples <= budget);
            let tighter = plan_with(eps * 0.999, 0.1, 10.0, 2, 4, sizing, &opts).unwrap();
            assert!(tighter.total_samples > budget);
        }
        assert!(matches!(
            implied_epsilon(1000, 0.1, 10.0, 4, Sizing::Baseline, &opts),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn grid_preconditions() {
        let mut cfg = EpsSweepConfig::desk(Sizing::Ours);
        cfg.budgets.truncate(3);
        assert!(eps_sweep(&cfg).is_err());
        let mut cfg = EpsSweepConfig::desk(Sizing::Ours);
        cfg.budgets = vec![1_000_000, 2_000_000, 3_000_000, 4_000_000];
        assert!(eps_sweep(&cfg).is_err());
    }

    #[test]
    fn single_target_has_no_slope() {
        let cfg = TminorizeSweepConfig {
            targets: vec![10.0],
            c_samples: 10.0,
            reps: 2,
            threads: Some(1),
            ..TminorizeSweepConfig::desk()
        };
        let out = tminorize_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.regression.is_none());
        assert_eq!(out.warnings.len(), 1);
    }
}
