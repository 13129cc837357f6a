//! Greedy policy extraction, Bellman residuals and Monte Carlo rollouts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridworld::GridWorld;
use crate::model::Cmdp;
use crate::uav::UavModel;

/// One action per state.
pub type Policy = Vec<usize>;

fn q_value(cmdp: &Cmdp, s: usize, a: usize, values: &[f64], mu: f64) -> f64 {
    cmdp.reward(s, a) - mu * cmdp.cost(s, a)
        + cmdp.discount() * cmdp.transitions().expect(s, a, values)
}

fn check_values(cmdp: &Cmdp, values: &[f64]) -> Result<()> {
    if values.len() != cmdp.n_states() {
        return Err(Error::Shape(format!(
            "value vector has {} entries, CMDP has {} states",
            values.len(),
            cmdp.n_states()
        )));
    }
    Ok(())
}

/// One-step greedy policy for `R - mu*C`, lowest action index on ties.
pub fn extract_policy(cmdp: &Cmdp, values: &[f64], mu: f64) -> Result<Policy> {
    check_values(cmdp, values)?;
    Ok((0..cmdp.n_states())
        .map(|s| {
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for a in cmdp.admissible_actions(s) {
                let q = q_value(cmdp, s, a, values, mu);
                if q > best.1 {
                    best = (a, q);
                }
            }
            best.0
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BellmanError {
    /// `V(i) - max_a Q(i,a)`, signed.
    pub per_state: Vec<f64>,
    pub min_abs: f64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

/// Residual of the penalized optimality equation at every state.
pub fn bellman_error(cmdp: &Cmdp, values: &[f64], mu: f64) -> Result<BellmanError> {
    check_values(cmdp, values)?;
    let per_state: Vec<f64> = (0..cmdp.n_states())
        .map(|s| {
            let best = cmdp
                .admissible_actions(s)
                .map(|a| q_value(cmdp, s, a, values, mu))
                .fold(f64::NEG_INFINITY, f64::max);
            values[s] - best
        })
        .collect();
    let abs = per_state.iter().map(|e| e.abs());
    let min_abs = abs.clone().fold(f64::INFINITY, f64::min);
    let max_abs = abs.clone().fold(0.0, f64::max);
    let mean_abs = abs.sum::<f64>() / per_state.len().max(1) as f64;
    Ok(BellmanError {
        per_state,
        min_abs,
        mean_abs,
        max_abs,
    })
}

/// Smallest `H` with `gamma^H < tol`.
pub fn default_horizon(gamma: f64, tol: f64) -> usize {
    let mut h = (tol.ln() / gamma.ln()).floor().max(0.0) as usize;
    while gamma.powi(h as i32) >= tol {
        h += 1;
    }
    h
}

/// Tolerance used by [`default_horizon`] when none is given.
pub const HORIZON_TOL: f64 = 1e-6;

/// States that every admissible action keeps in place with zero reward and
/// zero cost; an episode can stop there without changing any total.
pub fn absorbing_states(cmdp: &Cmdp) -> Vec<bool> {
    (0..cmdp.n_states())
        .map(|s| {
            cmdp.admissible_actions(s).all(|a| {
                let (next, prob) = cmdp.transitions().row(s, a);
                next.len() == 1
                    && next[0] as usize == s
                    && prob[0] == 1.0
                    && cmdp.reward(s, a) == 0.0
                    && cmdp.cost(s, a) == 0.0
            })
        })
        .collect()
}

/// Environment-specific reading of an episode.
pub trait EpisodeJudge: Sync {
    /// Names of the success predicates; the first is the primary one.
    fn predicates(&self) -> Vec<&'static str>;

    /// One flag per predicate for the visited states (initial state first).
    fn judge(&self, path: &[usize]) -> Vec<bool>;
}

/// Judge with no success predicates.
pub struct NoJudge;

impl EpisodeJudge for NoJudge {
    fn predicates(&self) -> Vec<&'static str> {
        Vec::new()
    }

    fn judge(&self, _path: &[usize]) -> Vec<bool> {
        Vec::new()
    }
}

pub const REACHED_GOAL: &str = "reached-goal";
pub const REACHED_GOAL_SAFELY: &str = "reached-goal-without-obstacle-hit";
pub const BATTERY_NEVER_EMPTY: &str = "battery-never-empty";

impl EpisodeJudge for GridWorld {
    fn predicates(&self) -> Vec<&'static str> {
        vec![REACHED_GOAL, REACHED_GOAL_SAFELY]
    }

    fn judge(&self, path: &[usize]) -> Vec<bool> {
        let goal = self.goal_state();
        let terminal = self.terminal_state();
        match path.iter().position(|&s| s == goal || s == terminal) {
            Some(k) => vec![true, !path[..k].iter().any(|&s| self.is_obstacle(s))],
            None => vec![false, false],
        }
    }
}

impl EpisodeJudge for UavModel {
    fn predicates(&self) -> Vec<&'static str> {
        vec![BATTERY_NEVER_EMPTY]
    }

    /// The initial state is not judged, so runs may start from an empty battery.
    fn judge(&self, path: &[usize]) -> Vec<bool> {
        vec![path
            .iter()
            .skip(1)
            .all(|&s| self.config.decode_state(s).0 > 0)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RolloutStats {
    pub n_episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Episodes satisfying the primary success predicate.
    pub success_count: usize,
    pub success_rate: f64,
    /// Count per success predicate.
    pub successes: BTreeMap<String, usize>,
    pub mean_disc_reward: f64,
    pub mean_disc_cost: f64,
    pub stderr_disc_reward: f64,
    pub stderr_disc_cost: f64,
}

impl RolloutStats {
    pub fn rate(&self, predicate: &str) -> Option<f64> {
        self.successes
            .get(predicate)
            .map(|&c| c as f64 / self.n_episodes.max(1) as f64)
    }
}

/// Result of one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub states: Vec<usize>,
    pub disc_reward: f64,
    pub disc_cost: f64,
}

fn sample_index(rng: &mut ChaCha8Rng, next: impl Iterator<Item = (usize, f64)>) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, p) in next {
        acc += p;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

/// Generator of episode `index`: ChaCha8 seeded with `seed`, stream `index`.
pub fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Simulates one episode of at most `horizon` steps.
///
/// Discounted totals accumulate the expected immediate reward and cost of
/// each visited state-action pair. The episode ends early on an absorbing
/// state.
pub fn simulate_episode(
    cmdp: &Cmdp,
    policy: &[usize],
    absorbing: &[bool],
    horizon: usize,
    rng: &mut ChaCha8Rng,
) -> Episode {
    let beta = cmdp.initial_dist();
    let mut s = sample_index(rng, beta.iter().copied().enumerate());
    let mut states = vec![s];
    let (mut disc_reward, mut disc_cost, mut discount) = (0.0, 0.0, 1.0);
    for _ in 0..horizon {
        if absorbing[s] {
            break;
        }
        let a = policy[s];
        disc_reward += discount * cmdp.reward(s, a);
        disc_cost += discount * cmdp.cost(s, a);
        discount *= cmdp.discount();
        s = sample_index(rng, cmdp.transitions().entries(s, a));
        states.push(s);
    }
    Episode {
        states,
        disc_reward,
        disc_cost,
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `n_episodes` independent episodes in parallel. Episode `k` draws
/// from [`episode_rng`]`(seed, k)`, so the statistics do not depend on
/// thread count or scheduling.
pub fn rollout(
    cmdp: &Cmdp,
    judge: &dyn EpisodeJudge,
    policy: &[usize],
    n_episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<RolloutStats> {
    if horizon == 0 {
        return Err(Error::Precondition(
            "rollout horizon must be positive".into(),
        ));
    }
    if n_episodes == 0 {
        return Err(Error::Precondition(
            "rollout needs at least one episode".into(),
        ));
    }
    cmdp.ensure_valid()?;
    if policy.len() != cmdp.n_states() {
        return Err(Error::Shape(format!(
            "policy has {} entries, CMDP has {} states",
            policy.len(),
            cmdp.n_states()
        )));
    }
    if let Some(s) = (0..cmdp.n_states()).find(|&s| !cmdp.is_admissible(s, policy[s])) {
        return Err(Error::Precondition(format!(
            "policy action {} not admissible at state {s}",
            policy[s]
        )));
    }
    let absorbing = absorbing_states(cmdp);
    let names = judge.predicates();
    let results: Vec<(f64, f64, Vec<bool>)> = (0..n_episodes)
        .into_par_iter()
        .map(|k| {
            let mut rng = episode_rng(seed, k as u64);
            let ep = simulate_episode(cmdp, policy, &absorbing, horizon, &mut rng);
            (ep.disc_reward, ep.disc_cost, judge.judge(&ep.states))
        })
        .collect();

    let rewards: Vec<f64> = results.iter().map(|r| r.0).collect();
    let costs: Vec<f64> = results.iter().map(|r| r.1).collect();
    let (mean_disc_reward, stderr_disc_reward) = mean_and_stderr(&rewards);
    let (mean_disc_cost, stderr_disc_cost) = mean_and_stderr(&costs);
    let successes: BTreeMap<String, usize> = names
        .iter()
        .enumerate()
        .map(|(i, name)| (name.to_string(), results.iter().filter(|r| r.2[i]).count()))
        .collect();
    let success_count = names.first().map_or(0, |n| successes[*n]);
    Ok(RolloutStats {
        n_episodes,
        horizon,
        seed,
        success_count,
        success_rate: success_count as f64 / n_episodes as f64,
        successes,
        mean_disc_reward,
        mean_disc_cost,
        stderr_disc_reward,
        stderr_disc_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{build_gridworld, GridConfig, ObstacleSpec, RIGHT};
    use crate::instances::toy_two_action;

    #[test]
    fn greedy_policy_on_toy() {
        let m = toy_two_action(1.0);
        // Values at mu = 0 and mu = 1 from the closed form.
        assert_eq!(extract_policy(&m, &[4.0], 0.0).unwrap(), vec![1]);
        assert_eq!(extract_policy(&m, &[2.0], 1.0).unwrap(), vec![0]);
        // Exact tie at the cusp goes to action 0.
        assert_eq!(extract_policy(&m, &[2.0], 0.5).unwrap(), vec![0]);
    }

    #[test]
    fn residual_from_zero_values() {
        let m = toy_two_action(1.0);
        let be = bellman_error(&m, &[0.0], 0.0).unwrap();
        assert_eq!(be.per_state, vec![-2.0]);
        assert_eq!(be.max_abs, 2.0);
        let be = bellman_error(&m, &[4.0], 0.0).unwrap();
        assert!(be.max_abs < 1e-12);
    }

    #[test]
    fn horizon() {
        assert_eq!(default_horizon(0.99, 1e-6), 1375);
        assert!(0.99f64.powi(1375) < 1e-6 && 0.99f64.powi(1374) >= 1e-6);
        assert_eq!(default_horizon(0.5, 0.25), 3);
    }

    fn corridor() -> GridWorld {
        let cfg = GridConfig {
            width: 6,
            height: 1,
            start: [1, 1],
            goal: [1, 6],
            obstacles: ObstacleSpec::Cells(vec![]),
            delta: 0.0,
            gamma: 0.95,
            ..GridConfig::default()
        };
        build_gridworld(&cfg).unwrap()
    }

    #[test]
    fn deterministic_corridor_always_succeeds() {
        let g = corridor();
        let policy = vec![RIGHT; g.cmdp.n_states()];
        let st = rollout(&g.cmdp, &g, &policy, 50, 100, 3).unwrap();
        assert_eq!(st.success_count, 50);
        assert_eq!(st.rate(REACHED_GOAL_SAFELY), Some(1.0));
        assert!(st.stderr_disc_reward < 1e-12);
        let again = rollout(&g.cmdp, &g, &policy, 50, 100, 3).unwrap();
        assert_eq!(st, again);
    }

    #[test]
    fn rollout_rejects_bad_input() {
        let g = corridor();
        let policy = vec![RIGHT; g.cmdp.n_states()];
        assert!(rollout(&g.cmdp, &g, &policy, 10, 0, 1).is_err());
        assert!(rollout(&g.cmdp, &g, &policy[1..], 10, 5, 1).is_err());
    }

    #[test]
    fn terminal_is_absorbing() {
        let g = corridor();
        let abs = absorbing_states(&g.cmdp);
        assert!(abs[g.terminal_state()]);
        assert_eq!(abs.iter().filter(|&&b| b).count(), 1);
    }
}
