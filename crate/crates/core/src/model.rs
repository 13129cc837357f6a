//! Finite constrained MDP data model.
//!
//! A [`Cmdp`] bundles the transition kernel, reward and cost matrices, the
//! initial distribution, the discount factor and the bound `E` on expected
//! discounted cost. Matrices indexed by `(state, action)` are stored row-major
//! with `state * n_actions + action` as the flat index; transition rows use a
//! compressed sparse layout so that dense and sparse rows share one format.
//!
//! A `Cmdp` can hold data that violates the model invariants (so that
//! [`Cmdp::validate`] has something to report). Solvers call
//! [`Cmdp::ensure_valid`] before doing any work.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for transition rows and the initial distribution.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One transition row as supplied by a builder.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionRow {
    /// Probability of every next state, in state order.
    Dense(Vec<f64>),
    /// `(next_state, probability)` pairs. Duplicate next states are summed.
    Sparse(Vec<(usize, f64)>),
}

/// Transition kernel in compressed sparse row form; row `s * n_actions + a`
/// holds the distribution of the next state after taking `a` in `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transitions {
    n_states: usize,
    n_actions: usize,
    row_ptr: Vec<usize>,
    next: Vec<u32>,
    prob: Vec<f64>,
}

impl Transitions {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Number of stored entries over all rows.
    pub fn nnz(&self) -> usize {
        self.prob.len()
    }

    /// Next-state indices and probabilities for `(state, action)`.
    #[inline]
    pub fn row(&self, state: usize, action: usize) -> (&[u32], &[f64]) {
        let r = state * self.n_actions + action;
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.next[lo..hi], &self.prob[lo..hi])
    }

    /// Iterator over `(next_state, probability)` for `(state, action)`.
    pub fn entries(&self, state: usize, action: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (next, prob) = self.row(state, action);
        next.iter().map(|&j| j as usize).zip(prob.iter().copied())
    }

    /// `sum_j P(j | state, action) * values[j]`.
    #[inline]
    pub fn expect(&self, state: usize, action: usize, values: &[f64]) -> f64 {
        let (next, prob) = self.row(state, action);
        next.iter()
            .zip(prob)
            .map(|(&j, &p)| p * values[j as usize])
            .sum()
    }
}

/// Incremental builder for [`Transitions`]. Rows that are never set stay empty.
#[derive(Debug, Clone)]
pub struct TransitionsBuilder {
    n_states: usize,
    n_actions: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl TransitionsBuilder {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            rows: vec![Vec::new(); n_states * n_actions],
        }
    }

    /// Replaces the row for `(state, action)`. Zero entries of dense rows are dropped.
    pub fn set_row(&mut self, state: usize, action: usize, row: TransitionRow) -> Result<()> {
        if state >= self.n_states || action >= self.n_actions {
            return Err(Error::Shape(format!(
                "row ({state}, {action}) outside {}x{} kernel",
                self.n_states, self.n_actions
            )));
        }
        let mut entries: Vec<(u32, f64)> = match row {
            TransitionRow::Dense(p) => {
                if p.len() != self.n_states {
                    return Err(Error::Shape(format!(
                        "dense row ({state}, {action}) has {} entries, expected {}",
                        p.len(),
                        self.n_states
                    )));
                }
                p.into_iter()
                    .enumerate()
                    .filter(|(_, v)| *v != 0.0)
                    .map(|(j, v)| (j as u32, v))
                    .collect()
            }
            TransitionRow::Sparse(pairs) => {
                let mut out = Vec::with_capacity(pairs.len());
                for (j, v) in pairs {
                    if j >= self.n_states {
                        return Err(Error::Shape(format!(
                            "row ({state}, {action}) points to next state {j} >= {}",
                            self.n_states
                        )));
                    }
                    out.push((j as u32, v));
                }
                out
            }
        };
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        self.rows[state * self.n_actions + action] = entries;
        Ok(())
    }

    /// Adds `prob` to the entry `(state, action) -> next`.
    pub fn add(&mut self, state: usize, action: usize, next: usize, prob: f64) -> Result<()> {
        if state >= self.n_states || action >= self.n_actions || next >= self.n_states {
            return Err(Error::Shape(format!(
                "entry ({state}, {action}) -> {next} outside {}x{} kernel",
                self.n_states, self.n_actions
            )));
        }
        let row = &mut self.rows[state * self.n_actions + action];
        match row.binary_search_by_key(&(next as u32), |e| e.0) {
            Ok(k) => row[k].1 += prob,
            Err(k) => row.insert(k, (next as u32, prob)),
        }
        Ok(())
    }

    pub fn build(self) -> Transitions {
        let mut row_ptr = Vec::with_capacity(self.rows.len() + 1);
        let nnz = self.rows.iter().map(Vec::len).sum();
        let mut next = Vec::with_capacity(nnz);
        let mut prob = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in self.rows {
            for (j, p) in row {
                next.push(j);
                prob.push(p);
            }
            row_ptr.push(next.len());
        }
        Transitions {
            n_states: self.n_states,
            n_actions: self.n_actions,
            row_ptr,
            next,
            prob,
        }
    }
}

/// A finite constrained Markov decision process.
#[derive(Debug)]
pub struct Cmdp {
    n_states: usize,
    n_actions: usize,
    transitions: Transitions,
    rewards: Vec<f64>,
    costs: Vec<f64>,
    initial_dist: Vec<f64>,
    discount: f64,
    constraint_bound: f64,
    admissible: Vec<bool>,
    has_mask: bool,
    report: OnceLock<ValidationReport>,
}

impl Clone for Cmdp {
    fn clone(&self) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            transitions: self.transitions.clone(),
            rewards: self.rewards.clone(),
            costs: self.costs.clone(),
            initial_dist: self.initial_dist.clone(),
            discount: self.discount,
            constraint_bound: self.constraint_bound,
            admissible: self.admissible.clone(),
            has_mask: self.has_mask,
            report: OnceLock::new(),
        }
    }
}

impl Cmdp {
    /// Assembles a CMDP from its parts. Only shapes are checked here; the
    /// probabilistic invariants are checked by [`Cmdp::validate`].
    ///
    /// `rewards` and `costs` are flat `n_states * n_actions` matrices.
    pub fn new(
        transitions: Transitions,
        rewards: Vec<f64>,
        costs: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
        constraint_bound: f64,
    ) -> Result<Self> {
        let n_states = transitions.n_states;
        let n_actions = transitions.n_actions;
        if n_states == 0 || n_actions == 0 {
            return Err(Error::Shape(
                "a CMDP needs at least one state and one action".into(),
            ));
        }
        let n_pairs = n_states * n_actions;
        if rewards.len() != n_pairs || costs.len() != n_pairs {
            return Err(Error::Shape(format!(
                "reward/cost matrices have {}/{} entries, expected {n_pairs}",
                rewards.len(),
                costs.len()
            )));
        }
        if initial_dist.len() != n_states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries, expected {n_states}",
                initial_dist.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            costs,
            initial_dist,
            discount,
            constraint_bound,
            admissible: vec![true; n_pairs],
            has_mask: false,
            report: OnceLock::new(),
        })
    }

    /// Restricts the admissible actions: `mask[s]` lists the actions allowed in `s`.
    pub fn with_action_mask(mut self, mask: &[Vec<usize>]) -> Result<Self> {
        if mask.len() != self.n_states {
            return Err(Error::Shape(format!(
                "action mask has {} states, expected {}",
                mask.len(),
                self.n_states
            )));
        }
        let mut admissible = vec![false; self.n_states * self.n_actions];
        for (s, actions) in mask.iter().enumerate() {
            for &a in actions {
                if a >= self.n_actions {
                    return Err(Error::Shape(format!(
                        "action mask names action {a} in state {s}"
                    )));
                }
                admissible[s * self.n_actions + a] = true;
            }
        }
        self.admissible = admissible;
        self.has_mask = true;
        self.report = OnceLock::new();
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    #[inline]
    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    #[inline]
    pub fn cost(&self, state: usize, action: usize) -> f64 {
        self.costs[state * self.n_actions + action]
    }

    /// Flat row-major reward matrix.
    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Flat row-major cost matrix.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn constraint_bound(&self) -> f64 {
        self.constraint_bound
    }

    /// Same model with a different constraint bound.
    pub fn with_constraint_bound(&self, bound: f64) -> Self {
        let mut out = self.clone();
        out.constraint_bound = bound;
        out
    }

    /// Same model with a different initial distribution (unvalidated).
    pub fn with_initial_dist(&self, initial_dist: Vec<f64>) -> Result<Self> {
        if initial_dist.len() != self.n_states {
            return Err(Error::Shape(format!(
                "initial distribution has {} entries, expected {}",
                initial_dist.len(),
                self.n_states
            )));
        }
        let mut out = self.clone();
        out.initial_dist = initial_dist;
        Ok(out)
    }

    #[inline]
    pub fn is_admissible(&self, state: usize, action: usize) -> bool {
        self.admissible[state * self.n_actions + action]
    }

    /// Admissible actions of `state`, in increasing order.
    pub fn admissible_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_actions).filter(move |&a| self.is_admissible(state, a))
    }

    /// `Some(mask)` when an explicit action mask was supplied.
    pub fn action_mask(&self) -> Option<Vec<Vec<usize>>> {
        self.has_mask.then(|| {
            (0..self.n_states)
                .map(|s| self.admissible_actions(s).collect())
                .collect()
        })
    }

    /// Checks every model invariant. The report is computed once and cached.
    pub fn validate(&self) -> &ValidationReport {
        self.report.get_or_init(|| validate_parts(self))
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.ok {
            Ok(())
        } else {
            Err(Error::InvalidCmdp(Box::new(report.clone())))
        }
    }

    /// `R(i,a) - mu * C(i,a)` for every pair, as a flat row-major matrix.
    pub fn penalized_rewards(&self, mu: f64) -> Result<Vec<f64>> {
        check_multiplier(mu)?;
        Ok(self
            .rewards
            .iter()
            .zip(&self.costs)
            .map(|(r, c)| r - mu * c)
            .collect())
    }
}

pub(crate) fn check_multiplier(mu: f64) -> Result<()> {
    if mu.is_nan() || mu < 0.0 {
        return Err(Error::Precondition(format!(
            "multiplier must be >= 0, got {mu}"
        )));
    }
    Ok(())
}

/// Kind of invariant a [`Violation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Transition row does not sum to one. Index `(state, action)`.
    RowSum,
    /// Negative or non-finite transition probability. Index `(state, action, next)`.
    Probability,
    /// Initial distribution does not sum to one. Empty index.
    InitialSum,
    /// Negative or non-finite initial probability. Index `(state)`.
    InitialProbability,
    /// Discount outside the open unit interval. Empty index.
    Discount,
    /// State without admissible actions. Index `(state)`.
    NoAdmissibleAction,
    /// Non-finite reward. Index `(state, action)`.
    Reward,
    /// Non-finite cost. Index `(state, action)`.
    Cost,
    /// Non-finite constraint bound. Empty index.
    ConstraintBound,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::RowSum => "row-sum",
            ViolationKind::Probability => "probability",
            ViolationKind::InitialSum => "initial-sum",
            ViolationKind::InitialProbability => "initial-probability",
            ViolationKind::Discount => "discount",
            ViolationKind::NoAdmissibleAction => "no-admissible-action",
            ViolationKind::Reward => "reward",
            ViolationKind::Cost => "cost",
            ViolationKind::ConstraintBound => "constraint-bound",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: Vec<usize>,
    /// Size of the defect: `|sum - 1|` for sums, the offending value otherwise.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, serde::Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok {
            return f.write_str("ok");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            write!(f, "; {} at {:?} ({})", v.kind, v.index, v.magnitude)?;
        }
        if self.violations.len() > 5 {
            f.write_str("; ...")?;
        }
        Ok(())
    }
}

fn validate_parts(m: &Cmdp) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |kind, index: Vec<usize>, magnitude: f64| {
        violations.push(Violation {
            kind,
            index,
            magnitude,
        })
    };

    if !(m.discount > 0.0 && m.discount < 1.0) {
        push(ViolationKind::Discount, vec![], m.discount);
    }
    if !m.constraint_bound.is_finite() {
        push(ViolationKind::ConstraintBound, vec![], m.constraint_bound);
    }

    let mut total = 0.0;
    for (i, &b) in m.initial_dist.iter().enumerate() {
        if !(b >= 0.0 && b.is_finite()) {
            push(ViolationKind::InitialProbability, vec![i], b);
        }
        total += b;
    }
    if !((total - 1.0).abs() <= PROBABILITY_TOLERANCE) {
        push(ViolationKind::InitialSum, vec![], (total - 1.0).abs());
    }

    for s in 0..m.n_states {
        let mut any = false;
        for a in 0..m.n_actions {
            if !m.is_admissible(s, a) {
                continue;
            }
            any = true;
            let r = m.reward(s, a);
            if !r.is_finite() {
                push(ViolationKind::Reward, vec![s, a], r);
            }
            let c = m.cost(s, a);
            if !c.is_finite() {
                push(ViolationKind::Cost, vec![s, a], c);
            }
            let mut sum = 0.0;
            for (j, p) in m.transitions.entries(s, a) {
                if !(p >= 0.0 && p.is_finite()) {
                    push(ViolationKind::Probability, vec![s, a, j], p);
                }
                sum += p;
            }
            if !((sum - 1.0).abs() <= PROBABILITY_TOLERANCE) {
                push(ViolationKind::RowSum, vec![s, a], (sum - 1.0).abs());
            }
        }
        if !any {
            push(ViolationKind::NoAdmissibleAction, vec![s], 0.0);
        }
    }

    ValidationReport {
        ok: violations.is_empty(),
        violations,
    }
}
