//! Generative model and empirical kernels.
//!
//! Every `(s, a)` pair owns an independent ChaCha8 stream: the key is derived from the seed,
//! the stream id is `s * |A| + a`, and draw `i` reads the 64-bit word at position `2 i`.
//! A draw is therefore a pure function of `(seed, s, a, i)`, so bulk sampling, single draws
//! and parallel schedules all agree.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Maps a 64-bit word to a uniform variate on `[0, 1)` with 53 bits of precision.
#[inline]
pub(crate) fn unit_f64(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seeded next-state sampler over a hidden ground-truth MDP.
#[derive(Debug)]
pub struct GenerativeModel {
    source: TabularMdp,
    seed: u64,
    base: ChaCha8Rng,
    cdf: Vec<f64>,
    drawn: Vec<AtomicU64>,
}

impl GenerativeModel {
    pub fn new(source: TabularMdp, seed: u64) -> Self {
        let ns = source.n_states();
        let mut cdf = Vec::with_capacity(source.kernel().len());
        for row in source.kernel().chunks(ns) {
            let mut acc = 0.0;
            for p in row {
                acc += p;
                cdf.push(acc);
            }
        }
        let drawn = (0..source.n_pairs()).map(|_| AtomicU64::new(0)).collect();
        GenerativeModel {
            source,
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
            cdf,
            drawn,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_states(&self) -> usize {
        self.source.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.source.n_actions()
    }

    /// The known reward table `r`.
    pub fn rewards(&self) -> &[f64] {
        self.source.rewards()
    }

    /// Ground truth, for evaluation code only; learners must not read the kernel.
    pub fn source(&self) -> &TabularMdp {
        &self.source
    }

    /// Draws taken so far at `(s, a)`.
    pub fn samples_drawn(&self, s: usize, a: usize) -> u64 {
        self.drawn[s * self.n_actions() + a].load(Ordering::Relaxed)
    }

    pub fn total_samples_drawn(&self) -> u64 {
        self.drawn.iter().map(|c| c.load(Ordering::Relaxed)).sum()
    }

    fn stream(&self, pair: usize, first_draw: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(pair as u64);
        rng.set_word_pos(2 * first_draw as u128);
        rng
    }

    #[inline]
    fn invert(&self, pair: usize, u: f64) -> usize {
        let ns = self.n_states();
        let cdf = &self.cdf[pair * ns..(pair + 1) * ns];
        // the last state absorbs rounding in the final cumulative sum
        cdf[..ns - 1].iter().position(|&c| u < c).unwrap_or(ns - 1)
    }

    fn check_pair(&self, s: usize, a: usize) -> Result<usize> {
        if s >= self.n_states() || a >= self.n_actions() {
            return Err(Error::param(format!(
                "state-action pair ({s},{a}) out of range"
            )));
        }
        Ok(s * self.n_actions() + a)
    }

    /// One next-state sample from `p_{s,a}`.
    pub fn draw_next_state(&self, s: usize, a: usize) -> Result<usize> {
        let pair = self.check_pair(s, a)?;
        let index = self.drawn[pair].fetch_add(1, Ordering::Relaxed);
        let mut rng = self.stream(pair, index);
        Ok(self.invert(pair, unit_f64(rng.next_u64())))
    }

    /// Reserves `n` consecutive draw indices at `pair` and tallies the sampled states.
    fn tally(&self, pair: usize, n: u64) -> Result<Vec<u64>> {
        let counter = &self.drawn[pair];
        let mut start = counter.load(Ordering::Relaxed);
        loop {
            let end = start.checked_add(n).ok_or(Error::CountOverflow { n })?;
            match counter.compare_exchange_weak(start, end, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => break,
                Err(current) => start = current,
            }
        }
        let ns = self.n_states();
        let mut counts = vec![0u64; ns];
        let mut rng = self.stream(pair, start);
        if ns == 2 {
            let c0 = self.cdf[pair * 2];
            let mut zeros = 0u64;
            for _ in 0..n {
                zeros += u64::from(unit_f64(rng.next_u64()) < c0);
            }
            counts[0] = zeros;
            counts[1] = n - zeros;
        } else {
            for _ in 0..n {
                counts[self.invert(pair, unit_f64(rng.next_u64()))] += 1;
            }
        }
        Ok(counts)
    }
}

/// Sample counts `N(s, a, s')` with `n` draws per pair, and the implied kernel `p-hat`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalModel {
    n_states: usize,
    n_actions: usize,
    n_per_sa: u64,
    counts: Vec<u64>,
}

impl EmpiricalModel {
    /// Builds a model from raw counts laid out like a kernel; every row must sum to `n`.
    pub fn from_counts(n_states: usize, n_actions: usize, counts: Vec<u64>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || counts.len() != n_states * n_actions * n_states {
            return Err(Error::param("count table has the wrong shape"));
        }
        let n: u64 = counts[..n_states].iter().sum();
        if n == 0
            || counts
                .chunks(n_states)
                .any(|row| row.iter().sum::<u64>() != n)
        {
            return Err(Error::param(
                "every count row must have the same positive total",
            ));
        }
        Ok(EmpiricalModel {
            n_states,
            n_actions,
            n_per_sa: n,
            counts,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_per_sa(&self) -> u64 {
        self.n_per_sa
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, s: usize, a: usize, next: usize) -> u64 {
        self.counts[(s * self.n_actions + a) * self.n_states + next]
    }

    /// `p-hat(s, a, s') = N(s, a, s') / n`, laid out like a kernel.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.n_per_sa as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// Draws exactly `n` next states at every `(s, a)` and returns the counts.
pub fn build_empirical_kernel(gm: &GenerativeModel, n: u64) -> Result<EmpiricalModel> {
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    let pairs = gm.source.n_pairs() as u64;
    if n.checked_mul(pairs).is_none() {
        return Err(Error::CountOverflow { n });
    }
    let rows: Vec<Vec<u64>> = (0..gm.source.n_pairs())
        .into_par_iter()
        .map(|pair| gm.tally(pair, n))
        .collect::<Result<_>>()?;
    Ok(EmpiricalModel {
        n_states: gm.n_states(),
        n_actions: gm.n_actions(),
        n_per_sa: n,
        counts: rows.concat(),
    })
}

/// Packages `(R, p-hat)` as an MDP whose rewards may reach `1 + zeta`.
pub fn empirical_mdp(em: &EmpiricalModel, rewards: &[f64], zeta: f64) -> Result<TabularMdp> {
    TabularMdp::with_reward_bound(
        em.n_states,
        em.n_actions,
        rewards.to_vec(),
        em.frequencies(),
        1.0 + zeta.max(0.0),
    )
}
