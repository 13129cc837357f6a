//! Reference multiplier searches: bisection on the gradient sign, projected
//! subgradient descent with a decaying step, and a brute-force grid scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gas::{
    bracket_search, Algorithm, DualEvaluator, DualPoint, GasParams, SolveResult, TraceRecorder,
};
use crate::model::Cmdp;
use crate::penalized::{evaluate_dual, InnerLoopParams};

/// Binary search takes the same parameters as the gradient-aware search.
pub type BsParams = GasParams;

/// Multipliers above this are treated as divergence.
pub const DIVERGENCE_MU: f64 = 1e12;
/// Descent stops once a step moves the multiplier by at most this much.
pub const PDO_STEP_TOL: f64 = 1e-12;

/// Bisection of `[0, M]` on the sign of the dual gradient.
pub fn binary_search_solve(cmdp: &Cmdp, params: &BsParams) -> Result<SolveResult> {
    let mut ev = DualEvaluator::cached(cmdp, params.inner);
    binary_search_with(&mut ev, params)
}

pub fn binary_search_with(ev: &mut DualEvaluator<'_>, params: &BsParams) -> Result<SolveResult> {
    bracket_search(ev, params, Algorithm::Bs, |b| Ok(0.5 * (b.lo.mu + b.hi.mu)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdoParams {
    pub mu0: f64,
    pub kappa0: f64,
    pub xi: f64,
    /// Seed for randomized `mu0` sweeps; a single run is deterministic anyway.
    pub seed: u64,
    pub max_outer: usize,
    pub record_wall_time: bool,
}

impl Default for PdoParams {
    fn default() -> Self {
        Self {
            mu0: 0.0,
            kappa0: 1.0,
            xi: 0.01,
            seed: 0,
            max_outer: 100_000,
            record_wall_time: false,
        }
    }
}

impl PdoParams {
    fn check(&self) -> Result<()> {
        if !(self.mu0 >= 0.0 && self.mu0.is_finite()) {
            return Err(Error::Precondition(format!(
                "mu0 must be finite and >= 0, got {}",
                self.mu0
            )));
        }
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            return Err(Error::Precondition(format!(
                "kappa0 must be positive, got {}",
                self.kappa0
            )));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(Error::Precondition(format!(
                "xi must be positive, got {}",
                self.xi
            )));
        }
        if self.max_outer == 0 {
            return Err(Error::Precondition("max_outer must be positive".into()));
        }
        Ok(())
    }
}

/// Projected subgradient descent on the dual.
///
/// `mu_{k+1} = max(0, mu_k - kappa_k * g_k)` and `kappa_{k+1} = kappa_k * exp(-xi*T)`,
/// where `T` counts the sign changes of the gradient seen so far. The step is
/// taken with the current `kappa` before it decays. Stops when a step moves
/// `mu` by at most [`PDO_STEP_TOL`] or after `max_outer` evaluations.
pub fn pdo_solve(cmdp: &Cmdp, params: &PdoParams, inner: InnerLoopParams) -> Result<SolveResult> {
    let mut ev = DualEvaluator::new(cmdp, inner);
    pdo_solve_with(&mut ev, params)
}

pub fn pdo_solve_with(ev: &mut DualEvaluator<'_>, params: &PdoParams) -> Result<SolveResult> {
    ev.cmdp().ensure_valid()?;
    params.check()?;
    let mut rec = TraceRecorder::new(params.record_wall_time);

    let mut mu = params.mu0;
    let mut kappa = params.kappa0;
    let mut flips = 0u32;
    let mut prev_sign: Option<bool> = None;
    let mut best = f64::INFINITY;
    let mut outer = 0;
    loop {
        outer += 1;
        let eval = ev.evaluate(mu)?;
        rec.push(outer, &eval);
        best = best.min(eval.point.objective);

        let g = eval.point.gradient;
        let sign = g >= 0.0;
        if prev_sign.is_some_and(|p| p != sign) {
            flips += 1;
        }
        prev_sign = Some(sign);

        let next = (mu - kappa * g).max(0.0);
        kappa *= (-params.xi * f64::from(flips)).exp();
        if next > DIVERGENCE_MU || !next.is_finite() {
            return Err(Error::Divergence {
                mu: next,
                trace: rec.take(),
            });
        }
        if (next - mu).abs() <= PDO_STEP_TOL || outer >= params.max_outer {
            let trace = *rec.take();
            return Ok(SolveResult::from_evaluation(
                Algorithm::Pdo,
                &eval,
                best,
                outer,
                None,
                trace,
            ));
        }
        mu = next;
    }
}

/// Initial multipliers drawn uniformly from `[0, mu_max]`, one ChaCha stream
/// per draw so that each value depends only on `(seed, index)`.
pub fn random_initial_multipliers(seed: u64, count: usize, mu_max: f64) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng.gen_range(0.0..=mu_max)
        })
        .collect()
}

/// Summary of a primal-dual sweep over random initial multipliers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdoSweepRow {
    pub xi: f64,
    pub n_seeds: usize,
    pub mean_cumulative_inner_iterations: f64,
    pub mean_outer_iterations: f64,
    pub mean_objective: f64,
    /// Runs that ended with an error (divergence, non-convergence).
    pub failures: usize,
}

/// Runs primal-dual descent from `n_seeds` random `mu0` in `[0, mu_max]` and
/// averages over the successful runs. Runs are independent and executed in
/// parallel; aggregation follows the draw order.
pub fn pdo_sweep(
    cmdp: &Cmdp,
    base: &PdoParams,
    inner: InnerLoopParams,
    n_seeds: usize,
    mu_max: f64,
) -> Result<(PdoSweepRow, Vec<Result<SolveResult>>)> {
    let starts = random_initial_multipliers(base.seed, n_seeds, mu_max);
    let runs: Vec<Result<SolveResult>> = starts
        .par_iter()
        .map(|&mu0| pdo_solve(cmdp, &PdoParams { mu0, ..*base }, inner))
        .collect();
    let ok: Vec<&SolveResult> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
    let n_ok = ok.len().max(1) as f64;
    let row = PdoSweepRow {
        xi: base.xi,
        n_seeds,
        mean_cumulative_inner_iterations: ok
            .iter()
            .map(|r| r.cumulative_inner_iterations as f64)
            .sum::<f64>()
            / n_ok,
        mean_outer_iterations: ok.iter().map(|r| r.outer_iterations as f64).sum::<f64>() / n_ok,
        mean_objective: ok.iter().map(|r| r.objective).sum::<f64>() / n_ok,
        failures: runs.len() - ok.len(),
    };
    Ok((row, runs))
}

/// Dual objective sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResult {
    pub points: Vec<DualPoint>,
    pub argmin: usize,
    pub step: f64,
    /// Smallest second difference `O(k-1) - 2 O(k) + O(k+1)`; negative
    /// values beyond round-off mean the sampled curve is not convex.
    pub min_second_difference: f64,
    /// `max |g| * step`: how far the grid minimum can sit above the true one.
    pub resolution_bound: f64,
}

/// Tolerance of the convexity audit on second differences.
pub const CONVEXITY_TOL: f64 = 1e-6;

impl ScanResult {
    pub fn min_point(&self) -> DualPoint {
        self.points[self.argmin]
    }

    pub fn is_convex(&self) -> bool {
        self.min_second_difference >= -CONVEXITY_TOL
    }

    /// Rescales the audit so that large objectives do not trip it on
    /// round-off alone.
    pub fn is_convex_rel(&self) -> bool {
        let scale = self
            .points
            .iter()
            .fold(1.0f64, |m, p| m.max(p.objective.abs()));
        self.min_second_difference >= -CONVEXITY_TOL * scale
    }
}

/// Evaluates `O` on `n_points` evenly spaced multipliers over `[mu_min, mu_max]`.
pub fn grid_scan(
    cmdp: &Cmdp,
    mu_min: f64,
    mu_max: f64,
    n_points: usize,
    inner: InnerLoopParams,
) -> Result<ScanResult> {
    if n_points < 2 {
        return Err(Error::Precondition(format!(
            "scan needs at least 2 points, got {n_points}"
        )));
    }
    if !(mu_min >= 0.0 && mu_max > mu_min && mu_max.is_finite()) {
        return Err(Error::Precondition(format!(
            "scan range [{mu_min}, {mu_max}] is invalid"
        )));
    }
    cmdp.ensure_valid()?;
    let step = (mu_max - mu_min) / (n_points - 1) as f64;
    let points = (0..n_points)
        .into_par_iter()
        .map(|k| {
            let mu = if k + 1 == n_points {
                mu_max
            } else {
                mu_min + step * k as f64
            };
            evaluate_dual(cmdp, mu, inner).map(|(_, p)| p)
        })
        .collect::<Result<Vec<_>>>()?;

    let argmin = points.iter().enumerate().fold(0, |best, (k, p)| {
        if p.objective < points[best].objective {
            k
        } else {
            best
        }
    });
    let min_second_difference = points
        .windows(3)
        .map(|w| w[0].objective - 2.0 * w[1].objective + w[2].objective)
        .fold(f64::INFINITY, f64::min);
    let max_grad = points.iter().fold(0.0f64, |m, p| m.max(p.gradient.abs()));
    Ok(ScanResult {
        points,
        argmin,
        step,
        min_second_difference,
        resolution_bound: max_grad * step,
    })
}

/// Grid scan over `[0, mu_max]`.
pub fn grid_scan_oracle(cmdp: &Cmdp, mu_max: f64, n_points: usize, eps: f64) -> Result<ScanResult> {
    grid_scan(
        cmdp,
        0.0,
        mu_max,
        n_points,
        InnerLoopParams {
            eps,
            ..InnerLoopParams::default()
        },
    )
}

/// Zooming grid scan for instances where a dense uniform grid is too slow.
///
/// After each round the window shrinks to the two grid cells around the
/// current argmin, which contain the minimizer of a convex function. The
/// returned result is the last round; its `resolution_bound` applies to the
/// final step.
pub fn refine_scan_oracle(
    cmdp: &Cmdp,
    mu_max: f64,
    n_points: usize,
    rounds: usize,
    inner: InnerLoopParams,
) -> Result<ScanResult> {
    let (mut lo, mut hi) = (0.0, mu_max);
    let mut scan = grid_scan(cmdp, lo, hi, n_points, inner)?;
    let mut convex = scan.min_second_difference;
    for _ in 1..rounds {
        let m = scan.min_point().mu;
        lo = (m - scan.step).max(0.0);
        hi = (m + scan.step).min(mu_max);
        scan = grid_scan(cmdp, lo, hi, n_points, inner)?;
        convex = convex.min(scan.min_second_difference);
    }
    scan.min_second_difference = convex;
    Ok(scan)
}
