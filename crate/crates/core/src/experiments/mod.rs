//! Replication harness for the sample-complexity experiments.
//!
//! Each configuration is a fixed `(instance, plan)` pair replicated `reps` times. Replication
//! `k` of configuration `i` uses the seed `base ^ mix(i, k)`, so records do not depend on the
//! worker count or on scheduling; records are collected in `(config, replication)` order.

mod output;
mod regression;
mod sweeps;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{self, ReductionPlan, Sizing};
use crate::average;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::sampling::GenerativeModel;

pub use output::{read_csv, svg_plot, write_csv, PlotSeries, CSV_HEADER};
pub use regression::{fit_log_log, ols, RegressionResult};
pub use sweeps::{
    eps_sweep, implied_epsilon, log_spaced, tminorize_sweep, EpsSweepConfig, SweepOutcome,
    TminorizeSweepConfig, DESK_CONSTANT_SCALE,
};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "AMDPKIT_THREADS";

/// One replication's outcome; field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub algo: Sizing,
    pub t_minorize: f64,
    pub epsilon_target: f64,
    pub n_per_sa: u64,
    pub total_samples: u64,
    pub replication: u64,
    pub seed: u64,
    pub alpha_hat: f64,
    pub error: f64,
    pub wall_time_ms: u64,
}

/// A fixed instance and plan to replicate.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub mdp: Arc<TabularMdp>,
    /// Exact optimal gain of `mdp`.
    pub alpha_bar: f64,
    pub plan: ReductionPlan,
}

impl Configuration {
    /// Computes the exact optimal gain by enumeration.
    pub fn new(mdp: TabularMdp, plan: ReductionPlan) -> Result<Self> {
        let (alpha_bar, _) = average::optimal_average_reward(&mdp)?;
        Ok(Configuration {
            mdp: Arc::new(mdp),
            alpha_bar,
            plan,
        })
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// `base ^ mix(config, replication)`.
pub fn replication_seed(base: u64, config: usize, replication: usize) -> u64 {
    base ^ splitmix64(splitmix64(config as u64) ^ replication as u64)
}

/// Worker count: the explicit value, else `AMDPKIT_THREADS`, else the available parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(THREADS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs one replication: fresh generative model, learned policy, exact gain of that policy.
pub fn replicate_once(
    config: &Configuration,
    config_index: usize,
    replication: usize,
    base_seed: u64,
) -> Result<ExperimentRecord> {
    let started = Instant::now();
    let seed = replication_seed(base_seed, config_index, replication);
    let gm = GenerativeModel::new((*config.mdp).clone(), seed);
    let learned = algorithms::run_plan(&gm, &config.plan, seed)?;
    let alpha_hat = average::average_reward(&config.mdp.induce(&learned.policy)?)?;
    Ok(ExperimentRecord {
        algo: config.plan.sizing,
        t_minorize: config.plan.t_minorize,
        epsilon_target: config.plan.epsilon,
        n_per_sa: config.plan.n_per_sa,
        total_samples: learned.samples_used,
        replication: replication as u64,
        seed,
        alpha_hat,
        error: config.alpha_bar - alpha_hat,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

/// Replicates every configuration `reps` times on a pool of `threads` workers.
pub fn run_configurations(
    configs: &[Configuration],
    reps: usize,
    base_seed: u64,
    threads: Option<usize>,
) -> Result<Vec<ExperimentRecord>> {
    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(threads))
        .build()
        .map_err(|e| Error::param(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        jobs.par_iter()
            .map(|&(c, r)| replicate_once(&configs[c], c, r, base_seed))
            .collect()
    })
}

/// Per-configuration mean of the error column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub algo: Sizing,
    pub t_minorize: f64,
    pub epsilon_target: f64,
    pub n_per_sa: u64,
    pub total_samples: u64,
    pub reps: usize,
    pub mean_error: f64,
}

/// Groups records by configuration (first-appearance order) and averages their errors.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SweepPoint> {
    let mut out: Vec<SweepPoint> = Vec::new();
    for r in records {
        let existing = out.iter_mut().find(|p| {
            p.algo == r.algo
                && p.t_minorize == r.t_minorize
                && p.epsilon_target == r.epsilon_target
                && p.total_samples == r.total_samples
        });
        match existing {
            Some(p) => {
                p.mean_error += r.error;
                p.reps += 1;
            }
            None => out.push(SweepPoint {
                algo: r.algo,
                t_minorize: r.t_minorize,
                epsilon_target: r.epsilon_target,
                n_per_sa: r.n_per_sa,
                total_samples: r.total_samples,
                reps: 1,
                mean_error: r.error,
            }),
        }
    }
    for p in &mut out {
        p.mean_error /= p.reps as f64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_across_jobs() {
        let mut seen = std::collections::HashSet::new();
        for c in 0..10 {
            for r in 0..100 {
                assert!(seen.insert(replication_seed(7, c, r)));
            }
        }
        assert_eq!(replication_seed(7, 3, 4), replication_seed(7, 3, 4));
    }

    #[test]
    fn explicit_threads_win() {
        assert_eq!(resolve_threads(Some(3)), 3);
        assert!(resolve_threads(None) >= 1);
    }
}
