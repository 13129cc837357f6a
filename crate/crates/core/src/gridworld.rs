//! Robot navigation on a rectangular grid with obstacles.
//!
//! Cells are written `[row, col]`, 1-based, with row 1 at the bottom. The
//! state of cell `[r, c]` is `(r-1)*width + (c-1)`; one extra absorbing
//! terminal state follows the grid cells. Four actions move up, down, left
//! and right. The chosen direction is taken with probability `1 - delta`,
//! otherwise a uniformly random direction (possibly the chosen one). Moving
//! off the grid leaves the robot in place.
//!
//! Every step from a non-goal cell pays `step_reward`; arriving at the goal
//! pays `goal_reward` on top. From the goal every action leads to the
//! terminal state. Entering an obstacle costs `obstacle_cost`; obstacles do
//! not stop the robot.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Cmdp, TransitionRow, TransitionsBuilder};

/// `[row, col]`, 1-based, row 1 at the bottom.
pub type Cell = [usize; 2];

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;
pub const ACTION_NAMES: [&str; 4] = ["up", "down", "left", "right"];

const DIRS: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, -1), (0, 1)];

/// Retries of the generator before giving up on a connected layout.
pub const MAX_LAYOUT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObstacleSpec {
    Cells(Vec<Cell>),
    Generated { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub obstacles: ObstacleSpec,
    pub delta: f64,
    pub gamma: f64,
    /// Defaults to `2 / (1 - gamma)`.
    #[serde(default)]
    pub goal_reward: Option<f64>,
    /// Defaults to the goal reward.
    #[serde(default)]
    pub obstacle_cost: Option<f64>,
    #[serde(default = "default_step_reward")]
    pub step_reward: f64,
    pub constraint_bound: f64,
}

fn default_step_reward() -> f64 {
    -1.0
}

impl Default for GridConfig {
    /// 20x20 grid, 30 generated obstacles, `delta = 0.05`, `gamma = 0.99`, `E = 5`.
    fn default() -> Self {
        Self {
            width: 20,
            height: 20,
            start: [2, 18],
            goal: [19, 18],
            obstacles: ObstacleSpec::Generated { count: 30, seed: 1 },
            delta: 0.05,
            gamma: 0.99,
            goal_reward: None,
            obstacle_cost: None,
            step_reward: -1.0,
            constraint_bound: 5.0,
        }
    }
}

impl GridConfig {
    pub fn goal_reward(&self) -> f64 {
        self.goal_reward.unwrap_or(2.0 / (1.0 - self.gamma))
    }

    pub fn obstacle_cost(&self) -> f64 {
        self.obstacle_cost.unwrap_or_else(|| self.goal_reward())
    }

    pub fn with_bound(&self, bound: f64) -> Self {
        Self {
            constraint_bound: bound,
            ..self.clone()
        }
    }

    fn in_bounds(&self, c: Cell) -> bool {
        (1..=self.height).contains(&c[0]) && (1..=self.width).contains(&c[1])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.width == 0 || self.height == 0 {
            return bad("grid must have positive width and height".into());
        }
        if !self.in_bounds(self.start) || !self.in_bounds(self.goal) {
            return bad(format!(
                "start {:?} or goal {:?} outside the grid",
                self.start, self.goal
            ));
        }
        if self.start == self.goal {
            return bad("start and goal coincide".into());
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return bad(format!("delta must be in [0, 1], got {}", self.delta));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must be in (0, 1), got {}", self.gamma));
        }
        for (name, v) in [
            ("goal_reward", self.goal_reward()),
            ("obstacle_cost", self.obstacle_cost()),
            ("step_reward", self.step_reward),
            ("constraint_bound", self.constraint_bound),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if let ObstacleSpec::Cells(cells) = &self.obstacles {
            for &c in cells {
                if !self.in_bounds(c) {
                    return bad(format!("obstacle {c:?} outside the grid"));
                }
                if c == self.start || c == self.goal {
                    return bad(format!("obstacle {c:?} on start or goal"));
                }
            }
        }
        Ok(())
    }

    /// Obstacle cells, generating them if the config asks for it.
    pub fn obstacle_cells(&self) -> Result<Vec<Cell>> {
        match &self.obstacles {
            ObstacleSpec::Cells(c) => Ok(c.clone()),
            &ObstacleSpec::Generated { count, seed } => {
                generate_obstacles(self.width, self.height, count, seed, self.start, self.goal)
            }
        }
    }
}

/// Built grid world: the CMDP plus the layout needed to interpret states.
#[derive(Debug, Clone)]
pub struct GridWorld {
    pub config: GridConfig,
    pub obstacles: Vec<Cell>,
    pub cmdp: Cmdp,
    obstacle_mask: Vec<bool>,
}

impl GridWorld {
    pub fn n_cells(&self) -> usize {
        self.config.width * self.config.height
    }

    pub fn terminal_state(&self) -> usize {
        self.n_cells()
    }

    pub fn state_of(&self, c: Cell) -> usize {
        (c[0] - 1) * self.config.width + (c[1] - 1)
    }

    /// `None` for the terminal state.
    pub fn cell_of(&self, s: usize) -> Option<Cell> {
        (s < self.n_cells()).then(|| [s / self.config.width + 1, s % self.config.width + 1])
    }

    pub fn start_state(&self) -> usize {
        self.state_of(self.config.start)
    }

    pub fn goal_state(&self) -> usize {
        self.state_of(self.config.goal)
    }

    pub fn is_obstacle(&self, s: usize) -> bool {
        self.obstacle_mask.get(s).copied().unwrap_or(false)
    }

    /// Same layout with a different constraint bound.
    pub fn with_bound(&self, bound: f64) -> Self {
        Self {
            config: self.config.with_bound(bound),
            cmdp: self.cmdp.with_constraint_bound(bound),
            ..self.clone()
        }
    }

    /// Layout as text, top row first: `S` start, `G` goal, `#` obstacle.
    pub fn render(&self, path: &[usize]) -> String {
        let mut out = String::new();
        for r in (1..=self.config.height).rev() {
            for c in 1..=self.config.width {
                let s = self.state_of([r, c]);
                let ch = if s == self.start_state() {
                    'S'
                } else if s == self.goal_state() {
                    'G'
                } else if self.is_obstacle(s) {
                    '#'
                } else if path.contains(&s) {
                    '*'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn step(width: usize, height: usize, cell: Cell, dir: usize) -> Cell {
    let (dr, dc) = DIRS[dir];
    let r = cell[0] as isize + dr;
    let c = cell[1] as isize + dc;
    if r < 1 || c < 1 || r > height as isize || c > width as isize {
        cell
    } else {
        [r as usize, c as usize]
    }
}

/// Builds the grid-world CMDP from a validated config.
pub fn build_gridworld(config: &GridConfig) -> Result<GridWorld> {
    config.validate()?;
    let obstacles = config.obstacle_cells()?;
    let (w, h) = (config.width, config.height);
    let n_cells = w * h;
    let n = n_cells + 1;
    let terminal = n_cells;
    let idx = |c: Cell| (c[0] - 1) * w + (c[1] - 1);
    let mut obstacle_mask = vec![false; n];
    for &c in &obstacles {
        obstacle_mask[idx(c)] = true;
    }
    let goal = idx(config.goal);
    let m_hat = config.goal_reward();
    let hit_cost = config.obstacle_cost();

    let mut tb = TransitionsBuilder::new(n, 4);
    let mut rewards = vec![0.0; n * 4];
    let mut costs = vec![0.0; n * 4];
    for s in 0..n_cells {
        let cell = [s / w + 1, s % w + 1];
        for a in 0..4 {
            if s == goal {
                tb.set_row(s, a, TransitionRow::Sparse(vec![(terminal, 1.0)]))?;
                continue;
            }
            let mut row = Vec::with_capacity(4);
            for d in 0..4 {
                let p = if d == a { 1.0 - config.delta } else { 0.0 } + config.delta / 4.0;
                if p > 0.0 {
                    row.push((idx(step(w, h, cell, d)), p));
                }
            }
            let p_goal: f64 = row
                .iter()
                .filter(|&&(j, _)| j == goal)
                .map(|&(_, p)| p)
                .sum();
            let p_hit: f64 = row
                .iter()
                .filter(|&&(j, _)| obstacle_mask[j])
                .map(|&(_, p)| p)
                .sum();
            rewards[s * 4 + a] = config.step_reward + m_hat * p_goal;
            costs[s * 4 + a] = hit_cost * p_hit;
            tb.set_row(s, a, TransitionRow::Sparse(row))?;
        }
    }
    for a in 0..4 {
        tb.set_row(terminal, a, TransitionRow::Sparse(vec![(terminal, 1.0)]))?;
    }
    let mut beta = vec![0.0; n];
    beta[idx(config.start)] = 1.0;
    let cmdp = Cmdp::new(
        tb.build(),
        rewards,
        costs,
        beta,
        config.gamma,
        config.constraint_bound,
    )?;
    Ok(GridWorld {
        config: config.clone(),
        obstacles,
        cmdp,
        obstacle_mask,
    })
}

/// Whether `goal` can be reached from `start` through obstacle-free cells.
pub fn obstacle_free_path_exists(
    width: usize,
    height: usize,
    obstacles: &[Cell],
    start: Cell,
    goal: Cell,
) -> bool {
    let idx = |c: Cell| (c[0] - 1) * width + (c[1] - 1);
    let mut blocked = vec![false; width * height];
    for &c in obstacles {
        blocked[idx(c)] = true;
    }
    if blocked[idx(start)] || blocked[idx(goal)] {
        return false;
    }
    let mut seen = vec![false; width * height];
    let mut queue = VecDeque::from([start]);
    seen[idx(start)] = true;
    while let Some(c) = queue.pop_front() {
        if c == goal {
            return true;
        }
        for d in 0..4 {
            let nc = step(width, height, c, d);
            let k = idx(nc);
            if !seen[k] && !blocked[k] {
                seen[k] = true;
                queue.push_back(nc);
            }
        }
    }
    false
}

/// Distance from `p` to the segment `a`-`b`, in cell units.
fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx - p[0], a[1] + t * dy - p[1]);
    (qx * qx + qy * qy).sqrt()
}

/// Seeded random obstacle layout.
///
/// Cells are drawn without replacement with weight `exp(-d / 2)`, `d` being
/// the distance to the straight segment from start to goal, so the direct
/// route is cluttered while detours stay open. Start, goal and their eight
/// neighbours are never used. Layouts without an obstacle-free route are
/// redrawn, up to [`MAX_LAYOUT_ATTEMPTS`] times.
pub fn generate_obstacles(
    width: usize,
    height: usize,
    count: usize,
    seed: u64,
    start: Cell,
    goal: Cell,
) -> Result<Vec<Cell>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let near = |c: Cell, o: Cell| c[0].abs_diff(o[0]) <= 1 && c[1].abs_diff(o[1]) <= 1;
    let candidates: Vec<Cell> = (1..=height)
        .flat_map(|r| (1..=width).map(move |c| [r, c]))
        .filter(|&c| !near(c, start) && !near(c, goal))
        .collect();
    if count + 2 > width * height || count > candidates.len() {
        return Err(Error::Config(format!(
            "cannot place {count} obstacles on a {width}x{height} grid"
        )));
    }
    let as_f = |c: Cell| [c[0] as f64, c[1] as f64];
    let weights: Vec<f64> = candidates
        .iter()
        .map(|&c| (-segment_distance(as_f(c), as_f(start), as_f(goal)) / 2.0).exp())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_LAYOUT_ATTEMPTS {
        let mut w = weights.clone();
        let mut total: f64 = w.iter().sum();
        let mut chosen = Vec::with_capacity(count);
        for _ in 0..count {
            let mut u = rng.gen::<f64>() * total;
            let mut k = 0;
            // Last positive weight absorbs round-off.
            let mut last = 0;
            while k < w.len() {
                if w[k] > 0.0 {
                    last = k;
                    if u < w[k] {
                        break;
                    }
                    u -= w[k];
                }
                k += 1;
            }
            let pick = if k < w.len() { k } else { last };
            chosen.push(candidates[pick]);
            total -= w[pick];
            w[pick] = 0.0;
        }
        if obstacle_free_path_exists(width, height, &chosen, start, goal) {
            chosen.sort_unstable();
            return Ok(chosen);
        }
    }
    Err(Error::Config(format!(
        "no connected layout with {count} obstacles after {MAX_LAYOUT_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_config(delta: f64) -> GridConfig {
        GridConfig {
            width: 5,
            height: 4,
            start: [1, 1],
            goal: [4, 5],
            obstacles: ObstacleSpec::Cells(vec![]),
            delta,
            ..GridConfig::default()
        }
    }

    #[test]
    fn default_layout_sizes() {
        let g = build_gridworld(&GridConfig::default()).unwrap();
        assert_eq!(g.cmdp.n_states(), 401);
        assert_eq!(g.cmdp.n_actions(), 4);
        assert_eq!(g.obstacles.len(), 30);
        assert!(g.cmdp.validate().ok);
        assert_eq!(g.cmdp.initial_dist()[g.start_state()], 1.0);
        assert!((g.config.goal_reward() - 200.0).abs() < 1e-9);
        for s in 0..g.cmdp.n_states() {
            for a in 0..4 {
                assert!(g.cmdp.transitions().row(s, a).0.len() <= 5);
            }
        }
    }

    #[test]
    fn deterministic_move_up() {
        let g = build_gridworld(&open_config(0.0)).unwrap();
        let s = g.state_of([2, 3]);
        let (next, prob) = g.cmdp.transitions().row(s, UP);
        assert_eq!(next, &[g.state_of([3, 3]) as u32]);
        assert_eq!(prob, &[1.0]);
    }

    #[test]
    fn slip_probabilities() {
        let g = build_gridworld(&open_config(0.05)).unwrap();
        let s = g.state_of([2, 3]);
        let row: Vec<(usize, f64)> = g.cmdp.transitions().entries(s, RIGHT).collect();
        let to = |c| row.iter().find(|&&(j, _)| j == g.state_of(c)).unwrap().1;
        assert!((to([2, 4]) - 0.9625).abs() < 1e-15);
        assert!((to([3, 3]) - 0.0125).abs() < 1e-15);
        // Corner: left and down bounce back into the cell.
        let s = g.state_of([1, 1]);
        let row: Vec<(usize, f64)> = g.cmdp.transitions().entries(s, UP).collect();
        let stay = row.iter().find(|&&(j, _)| j == s).unwrap().1;
        assert!((stay - 0.025).abs() < 1e-15);
    }

    #[test]
    fn rewards_and_costs() {
        let mut cfg = open_config(0.05);
        cfg.obstacles = ObstacleSpec::Cells(vec![[2, 2]]);
        let g = build_gridworld(&cfg).unwrap();
        let s = g.state_of([2, 1]);
        assert!((g.cmdp.cost(s, RIGHT) - 200.0 * 0.9625).abs() < 1e-9);
        assert!((g.cmdp.reward(s, RIGHT) + 1.0).abs() < 1e-12);
        let s = g.state_of([3, 5]);
        assert!((g.cmdp.reward(s, UP) - (-1.0 + 200.0 * 0.9625)).abs() < 1e-9);
        let goal = g.goal_state();
        assert_eq!(g.cmdp.reward(goal, UP), 0.0);
        assert_eq!(
            g.cmdp.transitions().row(goal, LEFT).0,
            &[g.terminal_state() as u32]
        );
    }

    #[test]
    fn generator_properties() {
        assert!(generate_obstacles(20, 20, 0, 3, [2, 18], [19, 18])
            .unwrap()
            .is_empty());
        let a = generate_obstacles(20, 20, 30, 1, [2, 18], [19, 18]).unwrap();
        assert_eq!(
            a,
            generate_obstacles(20, 20, 30, 1, [2, 18], [19, 18]).unwrap()
        );
        assert_eq!(a.len(), 30);
        assert!(obstacle_free_path_exists(20, 20, &a, [2, 18], [19, 18]));
        assert!(!a.contains(&[2, 18]) && !a.contains(&[19, 18]));
        assert!(generate_obstacles(3, 3, 8, 1, [1, 1], [3, 3]).is_err());
    }

    #[test]
    fn bfs_detects_walls() {
        let wall: Vec<Cell> = (1..=5).map(|c| [2, c]).collect();
        assert!(!obstacle_free_path_exists(5, 4, &wall, [1, 1], [4, 5]));
        assert!(obstacle_free_path_exists(5, 4, &wall[..4], [1, 1], [4, 5]));
    }

    #[test]
    fn invalid_configs() {
        let mut c = open_config(0.05);
        c.goal = c.start;
        assert!(build_gridworld(&c).is_err());
        let mut c = open_config(1.5);
        assert!(build_gridworld(&c).is_err());
        c.delta = 0.1;
        c.obstacles = ObstacleSpec::Cells(vec![[1, 1]]);
        assert!(build_gridworld(&c).is_err());
    }

    #[test]
    fn config_json_forms() {
        let c: GridConfig = serde_json::from_str(
            r#"{"width":3,"height":3,"start":[1,1],"goal":[3,3],"obstacles":{"count":1,"seed":4},
                "delta":0.0,"gamma":0.9,"constraint_bound":1.0}"#,
        )
        .unwrap();
        assert_eq!(c.obstacles, ObstacleSpec::Generated { count: 1, seed: 4 });
        assert_eq!(c.step_reward, -1.0);
        let c: GridConfig = serde_json::from_str(
            r#"{"width":3,"height":3,"start":[1,1],"goal":[3,3],"obstacles":[[2,2]],
                "delta":0.0,"gamma":0.9,"constraint_bound":1.0}"#,
        )
        .unwrap();
        assert_eq!(c.obstacles, ObstacleSpec::Cells(vec![[2, 2]]));
    }
}
