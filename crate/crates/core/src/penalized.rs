//! Inner loop: value iteration on the multiplier-penalized MDP.
//!
//! For a fixed multiplier `mu` the CMDP reduces to an unconstrained MDP with
//! reward `R - mu*C`. Alongside the value sweep we carry the discounted cost
//! of the current greedy policy, which is the slope of the dual objective in
//! `mu` and therefore gives its exact (one-sided) gradient.

use crate::error::{Error, Result};
use crate::gas::DualPoint;
use crate::model::{check_multiplier, Cmdp};

pub const DEFAULT_EPS: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Stopping rule of the inner loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerLoopParams {
    /// Threshold on the mean relative change of the value vector between sweeps.
    pub eps: f64,
    pub max_sweeps: usize,
}

impl Default for InnerLoopParams {
    fn default() -> Self {
        Self {
            eps: DEFAULT_EPS,
            max_sweeps: DEFAULT_MAX_SWEEPS,
        }
    }
}

impl InnerLoopParams {
    pub fn new(eps: f64, max_sweeps: usize) -> Self {
        Self { eps, max_sweeps }
    }

    fn check(&self) -> Result<()> {
        if !(self.eps > 0.0) || self.max_sweeps == 0 {
            return Err(Error::Precondition(format!(
                "inner loop needs eps > 0 and max_sweeps > 0 (got {}, {})",
                self.eps, self.max_sweeps
            )));
        }
        Ok(())
    }
}

/// Converged (or abandoned) inner-loop state at one multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedSolution {
    pub mu: f64,
    /// Penalized optimal values `V(i, mu)`.
    pub values: Vec<f64>,
    /// Expected discounted cost of the greedy policy from each state.
    pub cost_values: Vec<f64>,
    pub greedy_policy: Vec<usize>,
    /// Number of value sweeps performed.
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Runs value iteration on `R - mu*C` from `V = 0`.
///
/// Each sweep computes `Q(i,a) = R(i,a) - mu*C(i,a) + gamma * E[V(j)]`, sets
/// `V(i) = max_a Q(i,a)` with the lowest action index winning ties, and
/// advances the cost recursion `w(i,a) = C(i,a) + gamma * E[w(j, greedy(j))]`
/// using the greedy actions of the same sweep. Only `w(j, greedy(j))` is ever
/// read back, so the full `w(i,a)` table is never materialized.
///
/// Stops once `mean_i |V_new(i) - V(i)| / max(|V(i)|, 1) < eps`. Hitting
/// `max_sweeps` first yields `converged = false`.
pub fn value_iteration_penalized(
    cmdp: &Cmdp,
    mu: f64,
    params: InnerLoopParams,
) -> Result<PenalizedSolution> {
    cmdp.ensure_valid()?;
    check_multiplier(mu)?;
    params.check()?;

    let n = cmdp.n_states();
    let na = cmdp.n_actions();
    let gamma = cmdp.discount();
    let trans = cmdp.transitions();
    let rewards = cmdp.rewards();
    let costs = cmdp.costs();
    let penalized: Vec<f64> = rewards.iter().zip(costs).map(|(r, c)| r - mu * c).collect();
    let actions: Vec<Vec<usize>> = (0..n)
        .map(|s| cmdp.admissible_actions(s).collect())
        .collect();

    let mut values = vec![0.0; n];
    let mut next_values = vec![0.0; n];
    // w(j, greedy(j)) from the previous sweep, and the one being built.
    let mut greedy_cost = vec![0.0; n];
    let mut next_greedy_cost = vec![0.0; n];
    let mut policy = vec![0usize; n];

    let mut sweeps = 0usize;
    let mut converged = false;
    while sweeps < params.max_sweeps {
        let first = sweeps == 0;
        let mut delta = 0.0;
        for s in 0..n {
            let mut best_q = f64::NEG_INFINITY;
            let mut best_w = 0.0;
            let mut best_a = usize::MAX;
            for &a in &actions[s] {
                let (next, prob) = trans.row(s, a);
                let mut ev = 0.0;
                let mut ew = 0.0;
                for (&j, &p) in next.iter().zip(prob) {
                    ev += p * values[j as usize];
                    ew += p * greedy_cost[j as usize];
                }
                let q = penalized[s * na + a] + gamma * ev;
                if q > best_q {
                    best_q = q;
                    best_a = a;
                    // w starts at zero: the first sweep only seeds the greedy actions.
                    best_w = if first {
                        0.0
                    } else {
                        costs[s * na + a] + gamma * ew
                    };
                }
            }
            delta += (best_q - values[s]).abs() / values[s].abs().max(1.0);
            next_values[s] = best_q;
            next_greedy_cost[s] = best_w;
            policy[s] = best_a;
        }
        std::mem::swap(&mut values, &mut next_values);
        std::mem::swap(&mut greedy_cost, &mut next_greedy_cost);
        sweeps += 1;
        if delta / (n as f64) < params.eps {
            converged = true;
            break;
        }
    }

    // The fused recursion follows whichever action was greedy in each sweep,
    // and near a cusp that can alternate between tied actions. Evaluating the
    // final greedy policy, warm-started from the fused estimate, makes the
    // reported cost belong to the returned policy. Usually a few sweeps.
    let mut cost_values = greedy_cost;
    let mut next_cost = next_greedy_cost;
    let mut evaluated = false;
    for _ in 0..params.max_sweeps {
        let mut delta = 0.0;
        for s in 0..n {
            let a = policy[s];
            let w = costs[s * na + a] + gamma * trans.expect(s, a, &cost_values);
            delta += (w - cost_values[s]).abs() / cost_values[s].abs().max(1.0);
            next_cost[s] = w;
        }
        std::mem::swap(&mut cost_values, &mut next_cost);
        if delta / (n as f64) < params.eps {
            evaluated = true;
            break;
        }
    }
    converged &= evaluated;

    Ok(PenalizedSolution {
        mu,
        values,
        cost_values,
        greedy_policy: policy,
        inner_iterations: sweeps,
        converged,
    })
}

/// Dual objective `sum_i beta(i) V(i,mu) + mu*E` and its gradient
/// `E - sum_i beta(i) w(i)` from a converged inner loop.
pub fn objective_and_gradient(cmdp: &Cmdp, sol: &PenalizedSolution) -> Result<DualPoint> {
    if !sol.converged {
        return Err(Error::NotConverged {
            mu: sol.mu,
            sweeps: sol.inner_iterations,
        });
    }
    if sol.values.len() != cmdp.n_states() || sol.cost_values.len() != cmdp.n_states() {
        return Err(Error::Shape("solution does not match the CMDP".into()));
    }
    let beta = cmdp.initial_dist();
    let e = cmdp.constraint_bound();
    let value: f64 = beta.iter().zip(&sol.values).map(|(b, v)| b * v).sum();
    let cost: f64 = beta.iter().zip(&sol.cost_values).map(|(b, w)| b * w).sum();
    Ok(DualPoint {
        mu: sol.mu,
        objective: value + sol.mu * e,
        gradient: e - cost,
    })
}

/// Inner loop plus objective/gradient; non-convergence is an error.
pub fn evaluate_dual(
    cmdp: &Cmdp,
    mu: f64,
    params: InnerLoopParams,
) -> Result<(PenalizedSolution, DualPoint)> {
    let sol = value_iteration_penalized(cmdp, mu, params)?;
    let point = objective_and_gradient(cmdp, &sol)?;
    Ok((sol, point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{one_state_one_action, toy_two_action};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn single_action_geometric_series() {
        let m = one_state_one_action(1.0, 1.0, 0.5, 3.0);
        let s = value_iteration_penalized(&m, 0.0, InnerLoopParams::default()).unwrap();
        assert!(s.converged);
        assert!(close(s.values[0], 2.0, 1e-9));
        assert!(close(s.cost_values[0], 2.0, 1e-9));

        let s = value_iteration_penalized(&m, 0.5, InnerLoopParams::default()).unwrap();
        assert!(close(s.values[0], 1.0, 1e-9));
        assert!(close(s.cost_values[0], 2.0, 1e-9));
        let p = objective_and_gradient(&m, &s).unwrap();
        assert!(close(p.objective, 2.5, 1e-9));
        assert!(close(p.gradient, 1.0, 1e-9));
    }

    #[test]
    fn toy_two_action_points() {
        let m = toy_two_action(1.0);
        let s = value_iteration_penalized(&m, 0.25, InnerLoopParams::default()).unwrap();
        assert_eq!(s.greedy_policy, vec![1]);
        assert!(close(s.values[0], 3.0, 1e-9));
        assert!(close(s.cost_values[0], 4.0, 1e-9));

        let (s, p) = evaluate_dual(&m, 0.0, InnerLoopParams::default()).unwrap();
        assert_eq!(s.greedy_policy, vec![1]);
        assert!(close(p.objective, 4.0, 1e-9));
        assert!(close(p.gradient, -3.0, 1e-9));

        let (s, p) = evaluate_dual(&m, 1.0, InnerLoopParams::default()).unwrap();
        assert_eq!(s.greedy_policy, vec![0]);
        assert!(close(s.values[0], 2.0, 1e-9));
        assert!(close(s.cost_values[0], 0.0, 1e-12));
        assert!(close(p.objective, 3.0, 1e-9));
        assert!(close(p.gradient, 1.0, 1e-9));
    }

    #[test]
    fn unconverged_solution_is_rejected() {
        let m = toy_two_action(1.0);
        let s = value_iteration_penalized(&m, 0.0, InnerLoopParams::new(1e-12, 3)).unwrap();
        assert!(!s.converged);
        assert_eq!(s.inner_iterations, 3);
        assert!(matches!(
            objective_and_gradient(&m, &s),
            Err(Error::NotConverged { sweeps: 3, .. })
        ));
    }

    #[test]
    fn preconditions() {
        let m = toy_two_action(1.0);
        assert!(matches!(
            value_iteration_penalized(&m, -1.0, InnerLoopParams::default()),
            Err(Error::Precondition(_))
        ));
        assert!(value_iteration_penalized(&m, 0.0, InnerLoopParams::new(0.0, 10)).is_err());
        let bad = m.with_initial_dist(vec![0.5]).unwrap();
        assert!(matches!(
            value_iteration_penalized(&bad, 0.0, InnerLoopParams::default()),
            Err(Error::InvalidCmdp(_))
        ));
    }
}
