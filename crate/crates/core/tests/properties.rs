use amdpkit::algorithms::{plan_with, PlanOptions};
use amdpkit::average::poisson_residual;
use amdpkit::dp::bellman_residual;
use amdpkit::{
    aux_value_sequence, average_reward, evaluate_discounted, mdp_ergodicity,
    optimal_average_reward, poisson_solve, random_ergodic_mdp, sigma, solve_bellman, span_seminorm,
    stationary, Policy, Sizing,
};
use proptest::prelude::*;

fn small_mdp() -> impl Strategy<Value = amdpkit::TabularMdp> {
    (1usize..=4, 1usize..=3, any::<u64>(), 1e-3f64..0.2).prop_map(|(s, a, seed, floor)| {
        random_ergodic_mdp(s, a, seed, floor.min(1.0 / s as f64)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_value_dominates_every_policy(mdp in small_mdp(), gamma in 0.3f64..0.99) {
        let sol = solve_bellman(&mdp, None, gamma, 1e-10).unwrap();
        let res = bellman_residual(&mdp, None, gamma, &sol.value);
        prop_assert!(res <= 1e-9, "residual {res}");
        for p in Policy::enumerate(mdp.n_states(), mdp.n_actions()) {
            let v = evaluate_discounted(&mdp, &p, gamma).unwrap();
            for (opt, x) in sol.value.iter().zip(v.iter()) {
                prop_assert!(*opt >= x - 1e-8);
            }
        }
        let greedy_value = evaluate_discounted(&mdp, &sol.policy, gamma).unwrap();
        let err = greedy_value.iter().zip(sol.value.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-8);
    }

    #[test]
    fn values_lie_in_the_reward_range(mdp in small_mdp(), gamma in 0.1f64..0.999) {
        let sol = solve_bellman(&mdp, None, gamma, 1e-10).unwrap();
        let hi = mdp.reward_max() / (1.0 - gamma);
        for &x in sol.value.iter() {
            prop_assert!(x >= -1e-9 && x <= hi + 1e-9);
        }
    }

    #[test]
    fn stationary_distribution_is_invariant(mdp in small_mdp(), pick in any::<u64>()) {
        let policies: Vec<Policy> = Policy::enumerate(mdp.n_states(), mdp.n_actions()).collect();
        let policy = &policies[(pick % policies.len() as u64) as usize];
        let chain = mdp.induce(policy).unwrap();
        let eta = stationary(&chain).unwrap();
        let n = chain.n_states();
        prop_assert!((eta.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for j in 0..n {
            let flowed: f64 = (0..n).map(|i| eta.probs[i] * chain.row(i)[j]).sum();
            prop_assert!((flowed - eta.probs[j]).abs() <= 1e-12);
            prop_assert!(eta.probs[j] >= 0.0);
        }
        let gain = average_reward(&chain).unwrap();
        prop_assert!((gain - eta.expect(chain.reward())).abs() <= 1e-12);
    }

    #[test]
    fn poisson_solution_is_unique_up_to_constants(mdp in small_mdp(), shift in -50.0f64..50.0) {
        let chain = mdp.induce(&Policy::constant(mdp.n_states(), 0)).unwrap();
        let gb = poisson_solve(&chain).unwrap();
        prop_assert!(gb.residual <= 1e-10);
        let shifted: Vec<f64> = gb.bias.iter().map(|u| u + shift).collect();
        prop_assert!(poisson_residual(&chain, gb.gain, &shifted) <= 1e-9);
        let eta = stationary(&chain).unwrap();
        prop_assert!(eta.expect(&gb.bias).abs() <= 1e-10);
    }

    /// `|(1 - gamma) v^pi - alpha^pi| <= 9 (1 - gamma) t_minorize` for every policy.
    #[test]
    fn discounted_value_tracks_gain(mdp in small_mdp(), gamma in 0.5f64..0.9999) {
        let t = mdp_ergodicity(&mdp, 4096).unwrap().t_minorize;
        for p in Policy::enumerate(mdp.n_states(), mdp.n_actions()) {
            let alpha = average_reward(&mdp.induce(&p).unwrap()).unwrap();
            let v = evaluate_discounted(&mdp, &p, gamma).unwrap();
            for x in v.iter() {
                prop_assert!(((1.0 - gamma) * x - alpha).abs() <= 9.0 * (1.0 - gamma) * t);
            }
        }
    }

    #[test]
    fn ergodicity_sandwich(mdp in small_mdp()) {
        let report = mdp_ergodicity(&mdp, 4096).unwrap();
        prop_assert!(report.sandwich_holds(), "{report:?}");
        prop_assert!(report.t_minorize >= 1.0);
    }

    #[test]
    fn optimal_gain_dominates_discounted_limits(mdp in small_mdp()) {
        let (gain, policy) = optimal_average_reward(&mdp).unwrap();
        for p in Policy::enumerate(mdp.n_states(), mdp.n_actions()) {
            prop_assert!(average_reward(&mdp.induce(&p).unwrap()).unwrap() <= gain + 1e-12);
        }
        let own = average_reward(&mdp.induce(&policy).unwrap()).unwrap();
        prop_assert!((own - gain).abs() <= 1e-12);
    }

    #[test]
    fn span_is_shift_invariant(v in prop::collection::vec(-1e3f64..1e3, 1..8), c in -1e3f64..1e3) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((span_seminorm(&v) - span_seminorm(&shifted)).abs() <= 1e-9);
        prop_assert!(span_seminorm(&v) >= 0.0);
    }

    /// Auxiliary levels: `h_l >= 0` past level 0, `|v_l| <= |h_l| / (1 - gamma)`, and
    /// `h_{l+1} <= span(v_l) / 2`.
    #[test]
    fn auxiliary_sequence_bounds(mdp in small_mdp(), gamma in 0.5f64..0.999) {
        let policy = Policy::constant(mdp.n_states(), mdp.n_actions() - 1);
        let seq = aux_value_sequence(&mdp, &policy, mdp.rewards(), gamma, None).unwrap();
        for (l, (h, v)) in seq.iter().enumerate() {
            prop_assert!(v.sup_norm() <= h.sup_norm() / (1.0 - gamma) * (1.0 + 1e-10) + 1e-12);
            if l > 0 {
                prop_assert!(h.iter().all(|&x| x >= 0.0));
            }
            if let Some((next_h, _)) = seq.get(l + 1) {
                prop_assert!(next_h.sup_norm() <= v.span() / 2.0 + 1e-9);
            }
        }
        let sig = sigma(&mdp, &seq[0].1);
        prop_assert!(sig.iter().all(|&x| x >= 0.0 && x <= seq[0].1.span() / 2.0 + 1e-9));
    }

    /// The plan needs more samples for smaller epsilon, larger t and the worst-case rule.
    #[test]
    fn plan_monotonicity(eps in 0.01f64..1.0, t in 1.0f64..1000.0, scale in 1.01f64..3.0) {
        let opts = PlanOptions::default();
        // plans too large for u64 counts are rejected; they sit above every representable plan
        let n = |e: f64, t: f64, s: Sizing| {
            plan_with(e, 0.1, t, 2, 2, s, &opts).map_or(u64::MAX, |p| p.n_per_sa)
        };
        prop_assert!(n(eps / scale, t, Sizing::Ours) >= n(eps, t, Sizing::Ours));
        prop_assert!(n(eps, t * scale, Sizing::Ours) >= n(eps, t, Sizing::Ours));
        prop_assert!(n(eps, t, Sizing::Baseline) >= n(eps, t, Sizing::Ours));
    }
}
