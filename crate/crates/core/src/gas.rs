//! Gradient-aware search over the Lagrange multiplier.
//!
//! The dual objective `O(mu) = sum_i beta(i) V(i,mu) + mu*E` is piecewise
//! linear and convex in `mu`. The search keeps a bracket `{lo, hi}` with a
//! negative gradient at `lo` and a non-negative gradient at `hi`, queries the
//! intersection of the two tangent lines, and replaces whichever end has the
//! same gradient sign as the query. It stops when the query objective is
//! within `eps_prime` of the best objective seen so far.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, BsParams, PdoParams};
use crate::error::{Error, Result};
use crate::model::{check_multiplier, Cmdp};
use crate::penalized::{evaluate_dual, InnerLoopParams, PenalizedSolution};

/// Default upper end of the initial bracket.
pub const DEFAULT_MU_MAX: f64 = 1e5;
/// Default outer tolerance on `|O_min - O(mu)|`.
pub const DEFAULT_EPS_PRIME: f64 = 1e-10;
pub const DEFAULT_MAX_OUTER: usize = 10_000;

/// One evaluated point on the dual curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub mu: f64,
    pub objective: f64,
    pub gradient: f64,
}

impl DualPoint {
    /// Tangent line through this point, evaluated at `mu`.
    pub fn tangent_at(&self, mu: f64) -> f64 {
        self.objective + self.gradient * (mu - self.mu)
    }
}

/// `lo.gradient < 0 <= hi.gradient`, `lo.mu < hi.mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: DualPoint,
    pub hi: DualPoint,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi.mu - self.lo.mu
    }

    pub fn is_sound(&self) -> bool {
        self.lo.mu < self.hi.mu && self.lo.gradient < 0.0 && self.hi.gradient >= 0.0
    }

    /// Lowest value of `max(tangent(lo), tangent(hi))`, a lower bound on the
    /// dual minimum.
    pub fn lower_bound(&self) -> Option<f64> {
        let mu = intersect_tangents(&self.lo, &self.hi).ok()?;
        Some(self.lo.tangent_at(mu).max(self.hi.tangent_at(mu)))
    }
}

/// Relative objective error tolerated when checking that tangents cross
/// inside the bracket.
pub const OBJECTIVE_NOISE_REL: f64 = 1e-8;

/// Estimated error in a converged objective. The inner loop stops once
/// values move by a relative `eps` per sweep, and the discounted backup
/// leaves up to `gamma / (1 - gamma)` times that still to go.
pub fn objective_noise(cmdp: &Cmdp, inner: &InnerLoopParams, objective: f64) -> f64 {
    let g = cmdp.discount();
    inner.eps * g / (1.0 - g) * (1.0 + objective.abs())
}

/// Intersection of the tangent lines through `lo` and `hi`.
///
/// Results slightly outside `[lo.mu, hi.mu]` (by `1e-12 * max(1, |hi.mu|)`
/// plus the shift an `OBJECTIVE_NOISE_REL` error in either objective can
/// cause) are clamped into the bracket; anything further out means the two
/// points cannot lie on one convex curve.
pub fn intersect_tangents(lo: &DualPoint, hi: &DualPoint) -> Result<f64> {
    if !(lo.mu < hi.mu) {
        return Err(Error::Precondition(format!(
            "bracket needs lo.mu < hi.mu (got {} and {})",
            lo.mu, hi.mu
        )));
    }
    let slope_gap = hi.gradient - lo.gradient;
    if slope_gap == 0.0 {
        return Err(Error::ParallelTangents {
            lo_mu: lo.mu,
            hi_mu: hi.mu,
            gradient: lo.gradient,
        });
    }
    let mu = (lo.objective - hi.objective - lo.gradient * lo.mu + hi.gradient * hi.mu) / slope_gap;
    // Objectives carry inner-loop error, which shifts the crossing by up to
    // that error over the slope gap.
    let noise = OBJECTIVE_NOISE_REL * (1.0 + lo.objective.abs().max(hi.objective.abs()));
    let tol = 1e-12 * hi.mu.abs().max(1.0) + noise / slope_gap.abs();
    if !(mu >= lo.mu - tol && mu <= hi.mu + tol) {
        return Err(Error::ConvexityViolation {
            lo: *lo,
            hi: *hi,
            mu,
        });
    }
    Ok(mu.clamp(lo.mu, hi.mu))
}

/// Result of one inner-loop run, shared between the trace and the caller.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub point: DualPoint,
    pub solution: Arc<PenalizedSolution>,
}

/// Runs inner loops on one CMDP, optionally memoizing by multiplier.
///
/// The cache only skips recomputation; a cached evaluation reports the sweep
/// count of the run that produced it, so traces are identical with or without
/// caching.
pub struct DualEvaluator<'a> {
    cmdp: &'a Cmdp,
    inner: InnerLoopParams,
    cache: Option<HashMap<u64, Evaluation>>,
    runs: usize,
}

impl<'a> DualEvaluator<'a> {
    pub fn new(cmdp: &'a Cmdp, inner: InnerLoopParams) -> Self {
        Self {
            cmdp,
            inner,
            cache: None,
            runs: 0,
        }
    }

    pub fn cached(cmdp: &'a Cmdp, inner: InnerLoopParams) -> Self {
        Self {
            cache: Some(HashMap::new()),
            ..Self::new(cmdp, inner)
        }
    }

    pub fn cmdp(&self) -> &'a Cmdp {
        self.cmdp
    }

    pub fn inner_params(&self) -> InnerLoopParams {
        self.inner
    }

    /// Inner loops actually executed (cache hits excluded).
    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn evaluate(&mut self, mu: f64) -> Result<Evaluation> {
        check_multiplier(mu)?;
        let key = (mu + 0.0).to_bits();
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&key)) {
            return Ok(hit.clone());
        }
        let (sol, point) = evaluate_dual(self.cmdp, mu, self.inner)?;
        self.runs += 1;
        let eval = Evaluation {
            point,
            solution: Arc::new(sol),
        };
        if let Some(cache) = self.cache.as_mut() {
            cache.insert(key, eval.clone());
        }
        Ok(eval)
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// 0 for the bootstrap evaluations, then 1, 2, ... per outer iteration.
    pub outer_iter: usize,
    pub mu: f64,
    pub objective: f64,
    pub gradient: f64,
    pub inner_iterations: usize,
    pub cumulative_inner_iterations: usize,
    /// Milliseconds since the solve started; 0 unless wall-clock recording is on.
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    /// Bracket after each outer iteration (bracket searches only).
    pub brackets: Vec<Bracket>,
    /// Multiplier of the last query; differs from `mu_star` when the search
    /// stopped on a query that did not become the upper bracket end.
    pub final_query_mu: Option<f64>,
}

/// Exact header of the trace CSV.
pub const TRACE_CSV_HEADER: &str =
    "outer_iter,mu,objective,gradient,inner_iterations,cumulative_inner_iterations,wall_time_ms";

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl SolveTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.outer_iter,
                fmt_f64(r.mu),
                fmt_f64(r.objective),
                fmt_f64(r.gradient),
                r.inner_iterations,
                r.cumulative_inner_iterations,
                fmt_f64(r.wall_time_ms),
            ));
        }
        out
    }

    pub fn cumulative_inner_iterations(&self) -> usize {
        self.records
            .last()
            .map_or(0, |r| r.cumulative_inner_iterations)
    }
}

/// Appends trace rows, keeping the cumulative sweep count and the clock.
pub(crate) struct TraceRecorder {
    start: Instant,
    record_wall_time: bool,
    cumulative: usize,
    pub(crate) trace: SolveTrace,
}

impl TraceRecorder {
    pub(crate) fn new(record_wall_time: bool) -> Self {
        Self {
            start: Instant::now(),
            record_wall_time,
            cumulative: 0,
            trace: SolveTrace::default(),
        }
    }

    pub(crate) fn push(&mut self, outer_iter: usize, eval: &Evaluation) {
        self.cumulative += eval.solution.inner_iterations;
        let wall_time_ms = if self.record_wall_time {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.trace.records.push(TraceRecord {
            outer_iter,
            mu: eval.point.mu,
            objective: eval.point.objective,
            gradient: eval.point.gradient,
            inner_iterations: eval.solution.inner_iterations,
            cumulative_inner_iterations: self.cumulative,
            wall_time_ms,
        });
    }

    pub(crate) fn take(&mut self) -> Box<SolveTrace> {
        Box::new(std::mem::take(&mut self.trace))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gas,
    Bs,
    Pdo,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gas => "gas",
            Algorithm::Bs => "bs",
            Algorithm::Pdo => "pdo",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gas" => Ok(Algorithm::Gas),
            "bs" => Ok(Algorithm::Bs),
            "pdo" => Ok(Algorithm::Pdo),
            _ => Err(Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// Uniform result shape of every multiplier search.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub algorithm: Algorithm,
    pub mu_star: f64,
    /// Smallest dual objective evaluated during the search.
    pub objective: f64,
    /// Dual gradient at `mu_star`.
    pub gradient: f64,
    /// Penalized values at `mu_star`.
    pub values: Vec<f64>,
    /// Discounted cost of `policy` from each state.
    pub cost_values: Vec<f64>,
    /// Greedy policy at `mu_star`.
    pub policy: Vec<usize>,
    /// Evaluations made by the search loop, bootstrap evaluations excluded.
    pub outer_iterations: usize,
    pub cumulative_inner_iterations: usize,
    /// Tangent lower bound on the dual minimum from the final bracket.
    pub lower_bound: Option<f64>,
    pub trace: SolveTrace,
}

impl SolveResult {
    pub(crate) fn from_evaluation(
        algorithm: Algorithm,
        eval: &Evaluation,
        objective: f64,
        outer_iterations: usize,
        lower_bound: Option<f64>,
        trace: SolveTrace,
    ) -> Self {
        Self {
            algorithm,
            mu_star: eval.point.mu,
            objective,
            gradient: eval.point.gradient,
            values: eval.solution.values.clone(),
            cost_values: eval.solution.cost_values.clone(),
            policy: eval.solution.greedy_policy.clone(),
            outer_iterations,
            cumulative_inner_iterations: trace.cumulative_inner_iterations(),
            lower_bound,
            trace,
        }
    }
}

/// Parameters shared by the bracket searches (GAS and binary search).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    /// Upper end `M` of the initial bracket `[0, M]`.
    pub mu_max: f64,
    pub eps_prime: f64,
    pub inner: InnerLoopParams,
    pub max_outer: usize,
    pub record_wall_time: bool,
}

impl Default for GasParams {
    fn default() -> Self {
        Self {
            mu_max: DEFAULT_MU_MAX,
            eps_prime: DEFAULT_EPS_PRIME,
            inner: InnerLoopParams::default(),
            max_outer: DEFAULT_MAX_OUTER,
            record_wall_time: false,
        }
    }
}

impl GasParams {
    pub fn new(mu_max: f64, eps: f64, eps_prime: f64) -> Self {
        Self {
            mu_max,
            eps_prime,
            inner: InnerLoopParams {
                eps,
                ..InnerLoopParams::default()
            },
            ..Self::default()
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.mu_max > 0.0 && self.mu_max.is_finite()) {
            return Err(Error::Precondition(format!(
                "mu_max must be positive, got {}",
                self.mu_max
            )));
        }
        if !(self.eps_prime > 0.0) {
            return Err(Error::Precondition(format!(
                "eps_prime must be positive, got {}",
                self.eps_prime
            )));
        }
        if !(self.inner.eps > 0.0) {
            return Err(Error::Precondition(format!(
                "eps must be positive, got {}",
                self.inner.eps
            )));
        }
        Ok(())
    }
}

/// Gradient-aware search with a fresh memoizing evaluator.
pub fn gas_solve(cmdp: &Cmdp, params: &GasParams) -> Result<SolveResult> {
    let mut ev = DualEvaluator::cached(cmdp, params.inner);
    gas_solve_with(&mut ev, params)
}

/// Gradient-aware search on a caller-supplied evaluator.
pub fn gas_solve_with(ev: &mut DualEvaluator<'_>, params: &GasParams) -> Result<SolveResult> {
    bracket_search(ev, params, Algorithm::Gas, |b| {
        intersect_tangents(&b.lo, &b.hi)
    })
}

/// Shared driver of the bracket searches; `next_query` picks the multiplier
/// to evaluate from the current bracket.
pub(crate) fn bracket_search(
    ev: &mut DualEvaluator<'_>,
    params: &GasParams,
    algorithm: Algorithm,
    next_query: impl Fn(&Bracket) -> Result<f64>,
) -> Result<SolveResult> {
    ev.cmdp().ensure_valid()?;
    params.check()?;
    let mut rec = TraceRecorder::new(params.record_wall_time);

    let at_zero = ev.evaluate(0.0)?;
    rec.push(0, &at_zero);
    if at_zero.point.gradient >= 0.0 {
        // The unconstrained optimum already satisfies the constraint.
        let objective = at_zero.point.objective;
        let trace = *rec.take();
        return Ok(SolveResult::from_evaluation(
            algorithm,
            &at_zero,
            objective,
            0,
            Some(objective),
            trace,
        ));
    }

    let at_max = ev.evaluate(params.mu_max)?;
    rec.push(0, &at_max);
    if at_max.point.gradient < 0.0 {
        return Err(Error::InfeasibleOrMuMaxTooSmall {
            mu: params.mu_max,
            gradient: at_max.point.gradient,
            trace: rec.take(),
        });
    }

    let mut lo = at_zero;
    let mut hi = at_max;
    let mut best = f64::INFINITY;
    let mut stalled = false;
    for outer in 1..=params.max_outer {
        let bracket = Bracket {
            lo: lo.point,
            hi: hi.point,
        };
        let mu = next_query(&bracket)?;
        let eval = ev.evaluate(mu)?;
        rec.push(outer, &eval);
        rec.trace.final_query_mu = Some(mu);

        let objective = eval.point.objective;
        let repeated = (best - objective).abs() <= params.eps_prime;
        best = best.min(objective);

        // A query with the same gradient as an end lies on that end's segment,
        // so replacing the end keeps the same supporting line.
        let progressed = if eval.point.gradient >= 0.0 {
            let moved = mu < hi.point.mu;
            if moved {
                hi = eval;
            }
            moved
        } else {
            let moved = mu > lo.point.mu;
            if moved {
                lo = eval;
            }
            moved
        };
        let bracket = Bracket {
            lo: lo.point,
            hi: hi.point,
        };

        // Two matching objectives alone can straddle the minimiser, so the
        // tangent lower bound must also be within eps' (plus evaluation noise).
        if repeated {
            let lower_bound = bracket.lower_bound();
            let slack = params.eps_prime + objective_noise(ev.cmdp(), &ev.inner_params(), best);
            if lower_bound.map_or(true, |l| best - l <= slack) {
                let trace = *rec.take();
                return Ok(SolveResult::from_evaluation(
                    algorithm,
                    &hi,
                    best,
                    outer,
                    lower_bound,
                    trace,
                ));
            }
        }
        rec.trace.brackets.push(bracket);
        if !progressed {
            if stalled {
                return Err(Error::Stagnation {
                    reason: format!(
                        "bracket [{}, {}] stopped shrinking",
                        lo.point.mu, hi.point.mu
                    ),
                    trace: rec.take(),
                });
            }
            stalled = true;
        } else {
            stalled = false;
        }
    }
    Err(Error::Stagnation {
        reason: format!(
            "no convergence within {} outer iterations",
            params.max_outer
        ),
        trace: rec.take(),
    })
}

/// Parameters for [`solve_dispatch`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    pub gas: GasParams,
    pub pdo: PdoParams,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            gas: GasParams::default(),
            pdo: PdoParams::default(),
        }
    }
}

/// Routes to the selected multiplier search.
pub fn solve_dispatch(
    cmdp: &Cmdp,
    algorithm: Algorithm,
    params: &SolveParams,
) -> Result<SolveResult> {
    match algorithm {
        Algorithm::Gas => gas_solve(cmdp, &params.gas),
        Algorithm::Bs => baselines::binary_search_solve(cmdp, &BsParams::from(params.gas)),
        Algorithm::Pdo => baselines::pdo_solve(cmdp, &params.pdo, params.gas.inner),
    }
}
