mod common;

use proptest::prelude::*;
use uwsched::decentral::{
    critical_sizes, local_beta, neighbor_range, offline_plan_local, optimize_packet_size, packet_lp, plan_all,
    solve_budget_lp, stationary_distribution, LocalModel, LpItem, MIN_SU_PACKET_BITS,
};
use uwsched::harness::{Arm, ScenarioConfig};
use uwsched::netmodel::reception_window;

#[test]
fn local_models_have_expected_scopes() {
    let config = ScenarioConfig::default();
    let arm = Arm::build(config.network_spec().unwrap(), &config, true).unwrap();
    let ranges: Vec<_> = (0..4).map(|i| neighbor_range(&arm.network, i)).collect();
    assert_eq!(ranges, vec![0..2, 0..3, 0..2, 0..1]);
    let (locals, plans) = plan_all(&arm.network, config.traffic, &arm.sensing, 30, 0.8, true, config.state_cap).unwrap();
    let sizes: Vec<usize> = locals.iter().map(LocalModel::n_states).collect();
    assert_eq!(sizes, vec![8, 10, 8, 6]);
    assert_eq!(plans.len(), 4);
}

#[test]
fn threshold_rule_equals_argmax_and_reference_recursion() {
    let config = ScenarioConfig::default();
    let arm = Arm::build(config.network_spec().unwrap(), &config, true).unwrap();
    let horizon = 60;
    let beta_bar = local_beta(config.beta, 4);
    for reuse in [Some(3), None] {
        for i in 0..4 {
            let local = LocalModel::build(&arm.network, config.traffic, &arm.sensing, i, config.state_cap).unwrap();
            let plan = offline_plan_local(&local, horizon, beta_bar, reuse).unwrap();
            let oracle = common::local_oracle(&local, horizon, beta_bar, reuse);
            for t in 0..horizon {
                for prev in [false, true] {
                    for s in 0..local.n_states() {
                        let omega = local.basis_vector(prev, s);
                        let threshold = plan.decide_threshold(t, &omega);
                        assert_eq!(threshold, plan.argmax_decision(t, &omega), "su {i} t {t} ({prev}, {s})");
                        assert_eq!(threshold, oracle.decisions[t][prev as usize][s], "su {i} t {t} ({prev}, {s})");
                    }
                }
                if !plan.eligible(t) {
                    assert!(oracle.decisions[t].iter().flatten().all(|&d| !d));
                }
            }
        }
    }
}

#[test]
fn local_beta_composes_to_beta() {
    for &(beta, n) in &[(0.8, 4usize), (0.5, 2), (0.95, 7)] {
        assert!((local_beta(beta, n).powi(n as i32) - beta).abs() < 1e-12);
    }
}

#[test]
fn stationary_distribution_is_fixed_point() {
    let config = ScenarioConfig::default();
    let arm = Arm::build(config.network_spec().unwrap(), &config, true).unwrap();
    let pi = stationary_distribution(&arm.model, 0).unwrap();
    let next = arm.model.predict(&pi, 0);
    assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for (a, b) in pi.iter().zip(&next) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn critical_sizes_avoid_primary_receptions() {
    let config = ScenarioConfig::default();
    let network = common::network(&config);
    let c = network.sound_speed();
    for i in 0..network.n_su {
        let max = network.spec.su_packet_bits[i];
        let sizes = critical_sizes(&network, i, max);
        assert!(sizes.contains(&max));
        assert!(sizes.windows(2).all(|w| w[0] < w[1]));
        assert!(sizes.iter().all(|&b| (MIN_SU_PACKET_BITS..=max).contains(&b) && b % 8 == 0));
        let su = &network.hops[network.su_hop(i)];
        for &bits in &sizes {
            if bits == max || bits == MIN_SU_PACKET_BITS {
                continue;
            }
            // A proper critical size ends exactly where some primary reception begins.
            let end = bits as f64 / su.bit_rate;
            let touches = (0..network.n_pu).any(|j| {
                let pu = &network.hops[j];
                let rx = reception_window(&network, j);
                let arrive = uwsched::netmodel::distance(&su.tx, &pu.rx) / c;
                (arrive + end - rx.start).abs() * su.bit_rate < 8.0 + 1e-6
            });
            let heard = (0..network.n_pu).any(|j| {
                let pu = &network.hops[j];
                let start = uwsched::netmodel::distance(&pu.tx, &su.rx) / c - su.length / c;
                (end - start).abs() * su.bit_rate < 8.0 + 1e-6
            });
            assert!(touches || heard, "su {i}: {bits} bits");
        }
    }
}

#[test]
fn lp_greedy_matches_dual_bound_on_real_instances() {
    let config = ScenarioConfig::default();
    let network = common::network(&config);
    for i in 0..network.n_su {
        for beta in [0.5, 0.8, 0.95] {
            let (items, _, budget) = packet_lp(&network, config.traffic, i, beta, true, config.state_cap).unwrap();
            let sol = solve_budget_lp(&items, budget);
            let dual = common::lp_dual_bound(&items, budget);
            assert!((sol.gain - dual).abs() <= 1e-6 * dual.abs().max(1e-9), "su {i} beta {beta}: {} vs {dual}", sol.gain);
        }
    }
}

#[test]
fn optimizer_keeps_full_packets_at_low_beta() {
    let config = ScenarioConfig::default();
    let network = common::network(&config);
    for i in 0..network.n_su {
        let plan = optimize_packet_size(&network, config.traffic, i, 12_000, 0.6, true, config.state_cap).unwrap();
        assert_eq!(plan.chosen_bits, 12_000);
        assert_eq!(plan.candidates.len(), plan.objectives.len());
        let best = plan.objectives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((plan.objective - best).abs() <= 1e-9 * best.abs());
    }
}

proptest! {
    #[test]
    fn greedy_lp_is_optimal_and_feasible(
        raw in proptest::collection::vec((-5.0f64..10.0, -1.0f64..5.0), 1..12),
        budget in 0.0f64..20.0,
    ) {
        let items: Vec<LpItem> = raw.iter().map(|&(gain, cost)| LpItem { gain, cost }).collect();
        let sol = solve_budget_lp(&items, budget);
        let used: f64 = sol.q.iter().zip(&items).map(|(q, it)| q * it.cost).sum();
        prop_assert!(used <= budget.max(0.0) + 1e-9);
        prop_assert!(sol.q.iter().all(|q| (0.0..=1.0).contains(q)));
        let dual = common::lp_dual_bound(&items, budget);
        prop_assert!(sol.gain <= dual + 1e-9 * (1.0 + dual.abs()));
        prop_assert!((sol.gain - dual).abs() <= 1e-6 * (1.0 + dual.abs()), "{} vs {}", sol.gain, dual);
    }
}
