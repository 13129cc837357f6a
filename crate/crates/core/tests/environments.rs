//! Properties of the two built environments and of rollouts.

use gas_cmdp::gridworld::{build_gridworld, GridConfig, ObstacleSpec};
use gas_cmdp::rollout::{rollout, NoJudge};
use gas_cmdp::uav::{battery_transition_row, build_uav_cmdp, UavConfig};
use gas_cmdp::{gas_solve, Cmdp, GasParams};
use proptest::prelude::*;

fn row_sums_ok(m: &Cmdp) -> bool {
    (0..m.n_states()).all(|s| {
        (0..m.n_actions()).all(|a| {
            (m.transitions().entries(s, a).map(|(_, p)| p).sum::<f64>() - 1.0).abs() <= 1e-12
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn battery_rows_are_distributions(b in 0usize..30, dep in 0.0f64..6.0, arr in 0.0f64..6.0, n_b in 2usize..30) {
        let b = b % n_b;
        let row = battery_transition_row(b, dep, arr, n_b);
        prop_assert_eq!(row.len(), n_b);
        prop_assert!(row.iter().all(|&p| p >= 0.0));
        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn battery_drift_is_arrivals_minus_departures(dep in 0.0f64..5.0, arr in 0.0f64..3.0) {
        // Far from both ends nothing saturates, so the mean change is exact.
        let (b, n_b) = (20, 80);
        let row = battery_transition_row(b, dep, arr, n_b);
        let mean: f64 = row.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((mean - (b as f64 - dep + arr)).abs() <= 1e-9);
    }

    #[test]
    fn small_uav_models_are_consistent(n_z in 3usize..12, n_b in 2usize..8, gamma in 0.5f64..0.99) {
        let cfg = UavConfig { n_z, n_b, gamma, ..UavConfig::default() };
        let model = build_uav_cmdp(&cfg).unwrap();
        let m = &model.cmdp;
        prop_assert_eq!(m.n_states(), n_z * n_b);
        prop_assert_eq!(m.n_actions(), 12);
        prop_assert!(row_sums_ok(m));
        // The cost is the expected battery drop in Wh.
        for s in 0..m.n_states() {
            let (b, _) = cfg.decode_state(s);
            for a in 0..m.n_actions() {
                let drop: f64 = m.transitions().entries(s, a)
                    .map(|(j, p)| p * (b as f64 - cfg.decode_state(j).0 as f64))
                    .sum();
                prop_assert!((m.cost(s, a) - cfg.level_wh() * drop).abs() <= 1e-9);
                prop_assert!((0.0..=1.0).contains(&m.reward(s, a)));
            }
        }
    }

    #[test]
    fn small_grid_worlds_are_consistent(w in 4usize..9, h in 4usize..9, count in 0usize..6, seed in 0u64..50, delta in 0.0f64..0.3) {
        let cfg = GridConfig {
            width: w,
            height: h,
            start: [1, w],
            goal: [h, w],
            obstacles: ObstacleSpec::Generated { count, seed },
            delta,
            gamma: 0.9,
            ..GridConfig::default()
        };
        let g = build_gridworld(&cfg).unwrap();
        let m = &g.cmdp;
        prop_assert_eq!(m.n_states(), w * h + 1);
        prop_assert!(row_sums_ok(m));
        let t = g.terminal_state();
        for a in 0..4 {
            prop_assert_eq!(m.transitions().entries(t, a).collect::<Vec<_>>(), vec![(t, 1.0)]);
            prop_assert_eq!(m.transitions().entries(g.goal_state(), a).collect::<Vec<_>>(), vec![(t, 1.0)]);
        }
        // Cost is the obstacle cost times the chance of entering an obstacle.
        for s in 0..w * h {
            if s == g.goal_state() {
                continue;
            }
            for a in 0..4 {
                let p_hit: f64 = m.transitions().entries(s, a).filter(|&(j, _)| g.is_obstacle(j)).map(|(_, p)| p).sum();
                prop_assert!((m.cost(s, a) - cfg.obstacle_cost() * p_hit).abs() <= 1e-9);
            }
        }
        prop_assert_eq!(g.obstacles.len(), count);
    }

    #[test]
    fn rollouts_repeat_for_a_seed(seed in any::<u64>(), n in 1usize..200) {
        let g = build_gridworld(&GridConfig { width: 6, height: 6, start: [1, 6], goal: [6, 6],
            obstacles: ObstacleSpec::Generated { count: 4, seed: 3 }, gamma: 0.9, ..GridConfig::default() }).unwrap();
        let r = gas_solve(&g.cmdp, &GasParams::default()).unwrap();
        let a = rollout(&g.cmdp, &g, &r.policy, n, 60, seed).unwrap();
        let b = rollout(&g.cmdp, &g, &r.policy, n, 60, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for threads in [1, 4] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let c = pool.install(|| rollout(&g.cmdp, &NoJudge, &r.policy, n, 60, seed).unwrap());
            prop_assert_eq!(a.mean_disc_reward.to_bits(), c.mean_disc_reward.to_bits());
            prop_assert_eq!(a.mean_disc_cost.to_bits(), c.mean_disc_cost.to_bits());
        }
    }
}
