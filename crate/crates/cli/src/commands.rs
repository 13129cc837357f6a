use std::fs;
use std::path::Path;

use gas_cmdp::baselines::{binary_search_with, grid_scan, pdo_sweep, PdoParams};
use gas_cmdp::gas::{fmt_f64, gas_solve_with, SolveParams};
use gas_cmdp::gridworld::{build_gridworld, GridConfig, GridWorld};
use gas_cmdp::io::{load_problem, read_json, save_problem, scan_csv, write_atomic, write_json};
use gas_cmdp::rollout::{
    absorbing_states, default_horizon, episode_rng, rollout as run_rollout, simulate_episode,
    EpisodeJudge, NoJudge, HORIZON_TOL,
};
use gas_cmdp::uav::{build_uav_cmdp, UavConfig, UavModel};
use gas_cmdp::{
    solve_dispatch, Cmdp, DualEvaluator, Error, GasParams, InnerLoopParams, Result, SolveResult,
};
use serde::{Deserialize, Serialize};

use crate::{
    BenchArgs, BuildEnvArgs, EnvKind, ProblemArgs, RolloutArgs, ScanArgs, SolveArgs, SolverArgs,
    Suite,
};

/// A loaded problem, keeping the environment around for rollout predicates.
enum Loaded {
    File(Cmdp),
    Grid(GridWorld),
    Uav(UavModel),
}

impl Loaded {
    fn cmdp(&self) -> &Cmdp {
        match self {
            Loaded::File(m) => m,
            Loaded::Grid(g) => &g.cmdp,
            Loaded::Uav(u) => &u.cmdp,
        }
    }

    fn judge(&self) -> &dyn EpisodeJudge {
        match self {
            Loaded::File(_) => &NoJudge,
            Loaded::Grid(g) => g,
            Loaded::Uav(u) => u,
        }
    }
}

fn load(args: &ProblemArgs) -> Result<Loaded> {
    let loaded = match (&args.problem, args.env) {
        (Some(path), _) => Loaded::File(load_problem(path)?),
        (None, Some(EnvKind::Gridworld)) => {
            let cfg: GridConfig = match &args.env_config {
                Some(p) => read_json(p)?,
                None => GridConfig::default(),
            };
            Loaded::Grid(build_gridworld(&cfg)?)
        }
        (None, Some(EnvKind::Uav)) => {
            let cfg: UavConfig = match &args.env_config {
                Some(p) => read_json(p)?,
                None => UavConfig::default(),
            };
            Loaded::Uav(build_uav_cmdp(&cfg)?)
        }
        (None, None) => return Err(Error::Config("give --problem or --env".into())),
    };
    Ok(match (args.bound, loaded) {
        (None, l) => l,
        (Some(b), Loaded::File(m)) => Loaded::File(m.with_constraint_bound(b)),
        (Some(b), Loaded::Grid(g)) => Loaded::Grid(g.with_bound(b)),
        (Some(b), Loaded::Uav(mut u)) => {
            u.cmdp = u.cmdp.with_constraint_bound(b);
            Loaded::Uav(u)
        }
    })
}

fn out_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn inner_params(s: &SolverArgs) -> InnerLoopParams {
    InnerLoopParams::new(s.eps, s.max_sweeps)
}

fn gas_params(s: &SolverArgs) -> GasParams {
    GasParams {
        mu_max: s.mu_max,
        eps_prime: s.eps_prime,
        inner: inner_params(s),
        max_outer: s.max_outer,
        record_wall_time: s.record_time,
    }
}

fn pdo_params(s: &SolverArgs, seed: u64) -> PdoParams {
    PdoParams {
        mu0: s.mu0,
        kappa0: s.kappa0,
        xi: s.xi,
        seed,
        max_outer: s.pdo_max_outer,
        record_wall_time: s.record_time,
    }
}

fn wall_time(r: &SolveResult) -> f64 {
    r.trace.records.last().map_or(0.0, |t| t.wall_time_ms)
}

/// Contents of `result.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultSummary {
    pub algorithm: String,
    pub mu_star: f64,
    pub objective: f64,
    pub gradient: f64,
    pub lower_bound: Option<f64>,
    pub outer_iterations: usize,
    pub cumulative_inner_iterations: usize,
    pub wall_time_ms: f64,
    pub n_states: usize,
    pub n_actions: usize,
    pub constraint_bound: f64,
    pub policy: Vec<usize>,
}

impl ResultSummary {
    fn new(cmdp: &Cmdp, r: &SolveResult) -> Self {
        Self {
            algorithm: r.algorithm.to_string(),
            mu_star: r.mu_star,
            objective: r.objective,
            gradient: r.gradient,
            lower_bound: r.lower_bound,
            outer_iterations: r.outer_iterations,
            cumulative_inner_iterations: r.cumulative_inner_iterations,
            wall_time_ms: wall_time(r),
            n_states: cmdp.n_states(),
            n_actions: cmdp.n_actions(),
            constraint_bound: cmdp.constraint_bound(),
            policy: r.policy.clone(),
        }
    }
}

fn solve_loaded(cmdp: &Cmdp, algo: crate::AlgoArg, s: &SolverArgs) -> Result<SolveResult> {
    let params = SolveParams {
        gas: gas_params(s),
        pdo: pdo_params(s, 0),
    };
    solve_dispatch(cmdp, algo.into(), &params)
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let loaded = load(&a.problem)?;
    let cmdp = loaded.cmdp();
    out_dir(&a.out)?;
    let result = solve_loaded(cmdp, a.algo, &a.solver);
    // The trace of a failed solve is still worth keeping.
    let trace = match &result {
        Ok(r) => Some(&r.trace),
        Err(e) => e.trace(),
    };
    if let Some(t) = trace {
        write_atomic(a.out.join("trace.csv"), t.to_csv().as_bytes())?;
    }
    let r = result?;
    write_json(a.out.join("result.json"), &ResultSummary::new(cmdp, &r))?;
    println!(
        "{}: mu* = {}, O = {}, gradient = {}, outer = {}, inner = {}",
        r.algorithm,
        r.mu_star,
        r.objective,
        r.gradient,
        r.outer_iterations,
        r.cumulative_inner_iterations
    );
    Ok(())
}

#[derive(Serialize)]
struct ScanSummary {
    mu_min: f64,
    mu_max: f64,
    points: usize,
    argmin_mu: f64,
    min_objective: f64,
    min_second_difference: f64,
    resolution_bound: f64,
    convex: bool,
}

pub fn scan(a: &ScanArgs) -> Result<()> {
    let loaded = load(&a.problem)?;
    out_dir(&a.out)?;
    let inner = InnerLoopParams {
        eps: a.eps,
        ..InnerLoopParams::default()
    };
    let s = grid_scan(loaded.cmdp(), a.mu_min, a.mu_max, a.points, inner)?;
    write_atomic(a.out.join("scan.csv"), scan_csv(&s).as_bytes())?;
    let best = s.min_point();
    let summary = ScanSummary {
        mu_min: a.mu_min,
        mu_max: a.mu_max,
        points: a.points,
        argmin_mu: best.mu,
        min_objective: best.objective,
        min_second_difference: s.min_second_difference,
        resolution_bound: s.resolution_bound,
        convex: s.is_convex_rel(),
    };
    write_json(a.out.join("scan.json"), &summary)?;
    println!(
        "min O = {} at mu = {}; convexity audit: {} (min second difference {})",
        best.objective,
        best.mu,
        if summary.convex { "pass" } else { "FAIL" },
        s.min_second_difference
    );
    Ok(())
}

#[derive(Serialize)]
struct RunSummary {
    outer_iterations: usize,
    cumulative_inner_iterations: usize,
    mu_star: f64,
    objective: f64,
    wall_time_ms: f64,
}

impl From<&SolveResult> for RunSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            outer_iterations: r.outer_iterations,
            cumulative_inner_iterations: r.cumulative_inner_iterations,
            mu_star: r.mu_star,
            objective: r.objective,
            wall_time_ms: wall_time(r),
        }
    }
}

#[derive(Serialize)]
struct CompareRow {
    eps_prime: f64,
    gas: RunSummary,
    bs: RunSummary,
}

const BS_COMPARE_HEADER: &str = "eps_prime,gas_outer_iterations,bs_outer_iterations,gas_cumulative_inner_iterations,bs_cumulative_inner_iterations,gas_mu_star,bs_mu_star,gas_objective,bs_objective";
const PDO_SWEEP_HEADER: &str =
    "xi,n_seeds,mean_cumulative_inner_iterations,mean_outer_iterations,mean_objective,failures";

pub fn bench(a: &BenchArgs) -> Result<()> {
    let loaded = load(&a.problem)?;
    let cmdp = loaded.cmdp();
    out_dir(&a.out)?;
    match a.suite {
        Suite::BsCompare => {
            let base = gas_params(&a.solver);
            // The query sequence does not depend on eps', so one cache per
            // algorithm serves the whole sweep.
            let sweep = |gas: bool| -> Result<Vec<SolveResult>> {
                let mut ev = DualEvaluator::cached(cmdp, base.inner);
                a.eps_primes
                    .iter()
                    .map(|&eps_prime| {
                        let p = GasParams { eps_prime, ..base };
                        if gas {
                            gas_solve_with(&mut ev, &p)
                        } else {
                            binary_search_with(&mut ev, &p)
                        }
                    })
                    .collect()
            };
            let (gas, bs) = rayon::join(|| sweep(true), || sweep(false));
            let (gas, bs) = (gas?, bs?);
            let mut csv = format!("{BS_COMPARE_HEADER}\n");
            let mut rows = Vec::new();
            for ((&eps_prime, g), b) in a.eps_primes.iter().zip(&gas).zip(&bs) {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(eps_prime),
                    g.outer_iterations,
                    b.outer_iterations,
                    g.cumulative_inner_iterations,
                    b.cumulative_inner_iterations,
                    fmt_f64(g.mu_star),
                    fmt_f64(b.mu_star),
                    fmt_f64(g.objective),
                    fmt_f64(b.objective)
                ));
                rows.push(CompareRow {
                    eps_prime,
                    gas: g.into(),
                    bs: b.into(),
                });
            }
            write_atomic(a.out.join("bs_compare.csv"), csv.as_bytes())?;
            write_json(a.out.join("bench.json"), &rows)?;
        }
        Suite::PdoSweep => {
            let mut csv = format!("{PDO_SWEEP_HEADER}\n");
            let mut rows = Vec::new();
            for &xi in &a.xis {
                let params = PdoParams {
                    xi,
                    ..pdo_params(&a.solver, a.seed)
                };
                let (row, _) = pdo_sweep(
                    cmdp,
                    &params,
                    inner_params(&a.solver),
                    a.seeds,
                    a.solver.mu_max,
                )?;
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    fmt_f64(row.xi),
                    row.n_seeds,
                    fmt_f64(row.mean_cumulative_inner_iterations),
                    fmt_f64(row.mean_outer_iterations),
                    fmt_f64(row.mean_objective),
                    row.failures
                ));
                rows.push(row);
            }
            write_atomic(a.out.join("pdo_sweep.csv"), csv.as_bytes())?;
            write_json(a.out.join("bench.json"), &rows)?;
        }
    }
    Ok(())
}

pub fn rollout(a: &RolloutArgs) -> Result<()> {
    let loaded = load(&a.problem)?;
    let cmdp = loaded.cmdp();
    out_dir(&a.out)?;
    let policy = match &a.policy_from_solve {
        Some(path) => {
            let summary: ResultSummary = read_json(path)?;
            if summary.policy.len() != cmdp.n_states() {
                return Err(Error::Shape(format!(
                    "policy in {} has {} entries, problem has {} states",
                    path.display(),
                    summary.policy.len(),
                    cmdp.n_states()
                )));
            }
            summary.policy
        }
        None => solve_loaded(cmdp, a.algo, &a.solver)?.policy,
    };
    let horizon = a
        .horizon
        .unwrap_or_else(|| default_horizon(cmdp.discount(), HORIZON_TOL));
    let stats = run_rollout(cmdp, loaded.judge(), &policy, a.episodes, horizon, a.seed)?;
    write_json(a.out.join("rollout.json"), &stats)?;

    if let Loaded::Grid(g) = &loaded {
        // Episode 0 of the rollout, shown as one realization of the policy.
        let mut rng = episode_rng(a.seed, 0);
        let ep = simulate_episode(cmdp, &policy, &absorbing_states(cmdp), horizon, &mut rng);
        let mut csv = String::from("step,state,row,col\n");
        for (k, &s) in ep.states.iter().enumerate() {
            match g.cell_of(s) {
                Some([r, c]) => csv.push_str(&format!("{k},{s},{r},{c}\n")),
                None => csv.push_str(&format!("{k},{s},,\n")),
            }
        }
        write_atomic(a.out.join("path.csv"), csv.as_bytes())?;
        write_atomic(a.out.join("path.txt"), g.render(&ep.states).as_bytes())?;
    }
    println!(
        "success rate {} over {} episodes; mean discounted reward {}, cost {} (stderr {})",
        stats.success_rate,
        stats.n_episodes,
        stats.mean_disc_reward,
        stats.mean_disc_cost,
        stats.stderr_disc_cost
    );
    Ok(())
}

pub fn build_env(a: &BuildEnvArgs) -> Result<()> {
    let problem = ProblemArgs {
        problem: None,
        env: Some(a.env),
        env_config: a.config.clone(),
        bound: None,
    };
    let loaded = load(&problem)?;
    save_problem(&a.out, loaded.cmdp())?;
    println!(
        "wrote {} ({} states, {} actions)",
        a.out.display(),
        loaded.cmdp().n_states(),
        loaded.cmdp().n_actions()
    );
    Ok(())
}

pub fn default_config(env: EnvKind) -> Result<()> {
    let text = match env {
        EnvKind::Gridworld => gas_cmdp::io::to_json_pretty(&GridConfig::default())?,
        EnvKind::Uav => gas_cmdp::io::to_json_pretty(&UavConfig::default())?,
    };
    println!("{text}");
    Ok(())
}
