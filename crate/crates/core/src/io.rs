//! JSON problem and configuration files, CSV tables, atomic writes.
//!
//! A problem file holds one CMDP:
//!
//! ```json
//! {
//!   "n_states": 1, "n_actions": 2, "gamma": 0.5, "constraint_bound": 1.0,
//!   "initial_dist": [1.0],
//!   "rewards": [[1.0, 2.0]], "costs": [[0.0, 2.0]],
//!   "transitions": [
//!     {"state": 0, "action": 0, "next_state": 0, "prob": 1.0},
//!     {"state": 0, "action": 1, "next_state": 0, "prob": 1.0}
//!   ]
//! }
//! ```
//!
//! `rewards` and `costs` are indexed `[state][action]`. Transitions list the
//! nonzero entries only, each `(state, action, next_state)` at most once, and
//! `action_mask` (admissible actions per state) may be omitted. Floats are
//! written in shortest round-trip form, so loading a saved problem
//! reproduces every number bit for bit. Loading rejects any problem that
//! fails validation.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::ScanResult;
use crate::error::{Error, Result};
use crate::gas::fmt_f64;
use crate::model::{Cmdp, TransitionRow, TransitionsBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionRecord {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub constraint_bound: f64,
    pub initial_dist: Vec<f64>,
    pub rewards: Vec<Vec<f64>>,
    pub costs: Vec<Vec<f64>>,
    pub transitions: Vec<TransitionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_mask: Option<Vec<Vec<usize>>>,
}

fn to_matrix(flat: &[f64], na: usize) -> Vec<Vec<f64>> {
    flat.chunks(na).map(|c| c.to_vec()).collect()
}

fn from_matrix(name: &str, m: Vec<Vec<f64>>, n: usize, na: usize) -> Result<Vec<f64>> {
    if m.len() != n || m.iter().any(|r| r.len() != na) {
        return Err(Error::Shape(format!("{name} must be a {n}x{na} matrix")));
    }
    Ok(m.into_iter().flatten().collect())
}

impl ProblemFile {
    pub fn from_cmdp(cmdp: &Cmdp) -> Self {
        let (n, na) = (cmdp.n_states(), cmdp.n_actions());
        let mut transitions = Vec::with_capacity(cmdp.transitions().nnz());
        for state in 0..n {
            for action in 0..na {
                for (next_state, prob) in cmdp.transitions().entries(state, action) {
                    transitions.push(TransitionRecord {
                        state,
                        action,
                        next_state,
                        prob,
                    });
                }
            }
        }
        Self {
            n_states: n,
            n_actions: na,
            gamma: cmdp.discount(),
            constraint_bound: cmdp.constraint_bound(),
            initial_dist: cmdp.initial_dist().to_vec(),
            rewards: to_matrix(cmdp.rewards(), na),
            costs: to_matrix(cmdp.costs(), na),
            transitions,
            action_mask: cmdp.action_mask(),
        }
    }

    pub fn into_cmdp(self) -> Result<Cmdp> {
        let (n, na) = (self.n_states, self.n_actions);
        let rewards = from_matrix("rewards", self.rewards, n, na)?;
        let costs = from_matrix("costs", self.costs, n, na)?;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n * na];
        for t in &self.transitions {
            if t.state >= n || t.action >= na || t.next_state >= n {
                return Err(Error::Shape(format!(
                    "transition ({}, {}) -> {} outside {n}x{na}",
                    t.state, t.action, t.next_state
                )));
            }
            rows[t.state * na + t.action].push((t.next_state, t.prob));
        }
        let mut tb = TransitionsBuilder::new(n, na);
        for (k, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            if let Some(w) = row.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Shape(format!(
                    "transition ({}, {}) -> {} listed twice",
                    k / na,
                    k % na,
                    w[0].0
                )));
            }
            tb.set_row(k / na, k % na, TransitionRow::Sparse(row))?;
        }
        let cmdp = Cmdp::new(
            tb.build(),
            rewards,
            costs,
            self.initial_dist,
            self.gamma,
            self.constraint_bound,
        )?;
        let cmdp = match self.action_mask {
            Some(mask) => cmdp.with_action_mask(&mask)?,
            None => cmdp,
        };
        cmdp.ensure_valid()?;
        Ok(cmdp)
    }
}

/// Parses JSON text; `origin` names the source in error messages.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, &path.display().to_string())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(format!("cannot serialize: {e}")))
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut text = to_json_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn save_problem(path: impl AsRef<Path>, cmdp: &Cmdp) -> Result<()> {
    let text = serde_json::to_string(&ProblemFile::from_cmdp(cmdp))
        .map_err(|e| Error::Config(format!("cannot serialize problem: {e}")))?;
    write_atomic(path, text.as_bytes())
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<Cmdp> {
    read_json::<ProblemFile>(path)?.into_cmdp()
}

pub const SCAN_CSV_HEADER: &str = "mu,objective,gradient";

pub fn scan_csv(scan: &ScanResult) -> String {
    let mut out = String::from(SCAN_CSV_HEADER);
    out.push('\n');
    for p in &scan.points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.mu),
            fmt_f64(p.objective),
            fmt_f64(p.gradient)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_cmdp, toy_two_action};

    #[test]
    fn problem_round_trip_is_bit_exact() {
        let m = random_cmdp(11, 4, 3, 0.9);
        let text = serde_json::to_string(&ProblemFile::from_cmdp(&m)).unwrap();
        let back = parse_json::<ProblemFile>(&text, "mem")
            .unwrap()
            .into_cmdp()
            .unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(m.rewards()), bits(back.rewards()));
        assert_eq!(bits(m.costs()), bits(back.costs()));
        assert_eq!(bits(m.initial_dist()), bits(back.initial_dist()));
        assert_eq!(m.transitions(), back.transitions());
        assert_eq!(m.discount().to_bits(), back.discount().to_bits());
        assert_eq!(
            m.constraint_bound().to_bits(),
            back.constraint_bound().to_bits()
        );
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"{
          "n_states": 1, "n_actions": 2, "gamma": 0.5, "constraint_bound": 1.0,
          "initial_dist": [1.0],
          "rewards": [[1.0, 2.0]], "costs": [[0.0, 2.0]],
          "transitions": [
            {"state": 0, "action": 0, "next_state": 0, "prob": 1.0},
            {"state": 0, "action": 1, "next_state": 0, "prob": 1.0}
          ]
        }"#;
        let m = parse_json::<ProblemFile>(text, "doc")
            .unwrap()
            .into_cmdp()
            .unwrap();
        assert_eq!(
            ProblemFile::from_cmdp(&m),
            ProblemFile::from_cmdp(&toy_two_action(1.0))
        );
    }

    #[test]
    fn mask_survives_round_trip() {
        let m = toy_two_action(1.0).with_action_mask(&[vec![1]]).unwrap();
        let f = ProblemFile::from_cmdp(&m);
        assert_eq!(f.action_mask, Some(vec![vec![1]]));
        let back = f.into_cmdp().unwrap();
        assert!(!back.is_admissible(0, 0));
    }

    #[test]
    fn bad_files() {
        assert!(matches!(
            parse_json::<ProblemFile>("{", "x"),
            Err(Error::Parse { .. })
        ));
        let mut f = ProblemFile::from_cmdp(&toy_two_action(1.0));
        f.transitions.pop();
        assert!(matches!(f.clone().into_cmdp(), Err(Error::InvalidCmdp(_))));
        f.transitions.push(f.transitions[0]);
        assert!(matches!(f.clone().into_cmdp(), Err(Error::Shape(_))));
        f.transitions.pop();
        f.rewards[0].pop();
        assert!(matches!(f.into_cmdp(), Err(Error::Shape(_))));
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("gas-cmdp-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
