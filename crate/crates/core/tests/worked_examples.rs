//! Small end-to-end cases with hand-checked answers.

use gas_cmdp::baselines::{binary_search_solve, grid_scan_oracle, PdoParams};
use gas_cmdp::gridworld::{build_gridworld, GridConfig, ObstacleSpec};
use gas_cmdp::instances::{one_state_one_action, toy_two_action};
use gas_cmdp::io::{load_problem, save_problem};
use gas_cmdp::rollout::{default_horizon, HORIZON_TOL};
use gas_cmdp::uav::{build_uav_cmdp, UavConfig};
use gas_cmdp::{
    gas_solve, solve_dispatch, value_iteration_penalized, Algorithm, ErrorClass, GasParams,
    InnerLoopParams, SolveParams,
};

#[test]
fn toy_dual_minimum() {
    let m = toy_two_action(1.0);
    let params = GasParams::new(2.0, 1e-12, 1e-10);
    let gas = gas_solve(&m, &params).unwrap();
    assert!((gas.mu_star - 0.5).abs() < 1e-9);
    assert!((gas.objective - 2.5).abs() < 1e-9);
    let bs = binary_search_solve(&m, &params).unwrap();
    let queries: Vec<f64> = bs.trace.records.iter().skip(2).map(|r| r.mu).collect();
    assert_eq!(&queries[..2], &[1.0, 0.5]);
    assert!((bs.objective - 2.5).abs() < 1e-9);
    let scan = grid_scan_oracle(&m, 2.0, 21, 1e-12).unwrap();
    assert!((scan.min_point().mu - 0.5).abs() < 1e-12);
    assert!((scan.min_point().objective - 2.5).abs() < 1e-9);
}

#[test]
fn dispatch_passes_parameters_through() {
    let m = toy_two_action(1.0);
    let params = SolveParams {
        gas: GasParams::new(2.0, 1e-12, 1e-10),
        pdo: PdoParams {
            mu0: 0.0,
            kappa0: 0.1,
            xi: 5.0,
            ..PdoParams::default()
        },
    };
    for algo in [Algorithm::Gas, Algorithm::Bs, Algorithm::Pdo] {
        let r = solve_dispatch(&m, algo, &params).unwrap();
        assert_eq!(r.algorithm, algo);
        assert!((r.objective - 2.5).abs() < 1e-2, "{algo}: {}", r.objective);
    }
    let direct = gas_solve(&m, &params.gas).unwrap();
    let routed = solve_dispatch(&m, Algorithm::Gas, &params).unwrap();
    assert_eq!(direct.trace, routed.trace);
}

#[test]
fn slack_constraint_gives_zero_multiplier() {
    let cfg = GridConfig {
        width: 6,
        height: 6,
        start: [1, 6],
        goal: [6, 6],
        obstacles: ObstacleSpec::Cells(vec![[3, 5], [4, 2]]),
        gamma: 0.9,
        constraint_bound: 1e9,
        ..GridConfig::default()
    };
    let g = build_gridworld(&cfg).unwrap();
    let r = gas_solve(&g.cmdp, &GasParams::default()).unwrap();
    assert_eq!(r.mu_star, 0.0);
    assert_eq!(r.outer_iterations, 0);
    let free = value_iteration_penalized(&g.cmdp, 0.0, InnerLoopParams::default()).unwrap();
    assert_eq!(r.policy, free.greedy_policy);
}

#[test]
fn unreachable_bound_is_reported() {
    // Discounted cost is always 1 / (1 - 0.5) = 2.
    let m = one_state_one_action(1.0, 1.0, 0.5, 1.0);
    let e = gas_solve(&m, &GasParams::new(1e3, 1e-10, 1e-10)).unwrap_err();
    assert_eq!(e.class(), ErrorClass::InfeasibleOrMuMaxTooSmall);
    assert_eq!(e.class().name(), "infeasible-or-M-too-small");
    assert_eq!(e.trace().unwrap().records.len(), 2);
}

#[test]
fn environment_sizes() {
    let g = build_gridworld(&GridConfig::default()).unwrap();
    assert_eq!(g.cmdp.n_states(), 401);
    assert_eq!(g.cmdp.n_actions(), 4);
    assert_eq!(g.obstacles.len(), 30);
    let u = build_uav_cmdp(&UavConfig::default()).unwrap();
    assert_eq!(u.cmdp.n_states(), 3025);
    assert_eq!(u.cmdp.n_actions(), 12);
    assert_eq!(u.cmdp.constraint_bound(), -1.67);
}

#[test]
fn horizon_for_default_discount() {
    assert_eq!(default_horizon(0.99, HORIZON_TOL), 1375);
    assert!(0.99f64.powi(1375) < 1e-6 && 0.99f64.powi(1374) >= 1e-6);
}

#[test]
fn saved_problem_solves_identically() {
    let m = toy_two_action(1.0);
    let path = std::env::temp_dir().join(format!("gas-cmdp-worked-{}.json", std::process::id()));
    save_problem(&path, &m).unwrap();
    let back = load_problem(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let params = GasParams::new(2.0, 1e-12, 1e-10);
    assert_eq!(
        gas_solve(&m, &params).unwrap().trace,
        gas_solve(&back, &params).unwrap().trace
    );
}
