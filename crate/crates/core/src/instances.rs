//! Small reference instances: closed-form toys and seeded random CMDPs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Cmdp, TransitionRow, TransitionsBuilder};

/// One state, one self-looping action with reward `r` and cost `c`.
pub fn one_state_one_action(r: f64, c: f64, gamma: f64, bound: f64) -> Cmdp {
    let mut tb = TransitionsBuilder::new(1, 1);
    tb.set_row(0, 0, TransitionRow::Dense(vec![1.0]))
        .expect("1x1 row");
    Cmdp::new(tb.build(), vec![r], vec![c], vec![1.0], gamma, bound).expect("1x1 shapes")
}

/// One state with two self-looping actions, `a: (R=1, C=0)` and
/// `b: (R=2, C=2)`, discount 0.5.
///
/// With bound `E = 1` the dual is `max(4 - 3*mu, 2 + mu)`, minimized at
/// `mu = 0.5` with value 2.5.
pub fn toy_two_action(bound: f64) -> Cmdp {
    let mut tb = TransitionsBuilder::new(1, 2);
    tb.set_row(0, 0, TransitionRow::Dense(vec![1.0]))
        .expect("row");
    tb.set_row(0, 1, TransitionRow::Dense(vec![1.0]))
        .expect("row");
    Cmdp::new(
        tb.build(),
        vec![1.0, 2.0],
        vec![0.0, 2.0],
        vec![1.0],
        0.5,
        bound,
    )
    .expect("shapes")
}

/// Random dense CMDP with nonnegative rewards and costs.
///
/// Rewards and costs are uniform on `[0, 1)`, transition rows are normalized
/// uniform draws, the initial distribution is normalized, and the constraint
/// bound sits between the smallest and largest achievable discounted costs
/// of two crude policies so that the constraint is usually active.
pub fn random_cmdp(seed: u64, n_states: usize, n_actions: usize, gamma: f64) -> Cmdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tb = TransitionsBuilder::new(n_states, n_actions);
    for s in 0..n_states {
        for a in 0..n_actions {
            let raw: Vec<f64> = (0..n_states).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let row = raw.into_iter().map(|p| p / total).collect();
            tb.set_row(s, a, TransitionRow::Dense(row)).expect("row");
        }
    }
    let rewards: Vec<f64> = (0..n_states * n_actions).map(|_| rng.gen()).collect();
    let costs: Vec<f64> = (0..n_states * n_actions).map(|_| rng.gen()).collect();
    let raw: Vec<f64> = (0..n_states).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let beta = raw.into_iter().map(|p| p / total).collect();

    // Discounted cost lies in [min C, max C] / (1 - gamma); aim for the middle
    // of the per-state min/max range so most instances have an interior optimum.
    let lo: f64 = (0..n_states)
        .map(|s| {
            (0..n_actions)
                .map(|a| costs[s * n_actions + a])
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / n_states as f64;
    let hi: f64 = (0..n_states)
        .map(|s| {
            (0..n_actions)
                .map(|a| costs[s * n_actions + a])
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / n_states as f64;
    let frac: f64 = rng.gen_range(0.3..0.7);
    let bound = (lo + frac * (hi - lo)) / (1.0 - gamma);
    Cmdp::new(tb.build(), rewards, costs, beta, gamma, bound).expect("shapes")
}
