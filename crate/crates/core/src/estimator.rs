//! Estimation of the per-arm similarity bound from completed tasks.

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// Relative slack when comparing a pair width against the threshold. A pair
/// of tasks with exactly `l/K` pulls each has width equal to the threshold
/// in exact arithmetic.
const THRESHOLD_SLACK: f64 = 1e-12;

/// End-of-task sample mean and pull count of one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskArmSummary {
    pub mean: f64,
    pub count: u64,
}

/// Completed-task summaries, `tasks[i][k]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpsilonHistory {
    arms: usize,
    tasks: Vec<Vec<TaskArmSummary>>,
}

impl EpsilonHistory {
    pub fn new(arms: usize) -> Self {
        Self {
            arms,
            tasks: Vec::new(),
        }
    }

    pub fn push_task(&mut self, summary: Vec<TaskArmSummary>) -> Result<()> {
        if summary.len() != self.arms {
            return config_err(format!(
                "task summary has {} arms, expected {}",
                summary.len(),
                self.arms
            ));
        }
        if let Some(s) = summary.iter().find(|s| !(0.0..=1.0).contains(&s.mean)) {
            return config_err(format!("task mean {} outside [0, 1]", s.mean));
        }
        self.tasks.push(summary);
        Ok(())
    }

    pub fn tasks(&self) -> &[Vec<TaskArmSummary>] {
        &self.tasks
    }

    pub fn arms(&self) -> usize {
        self.arms
    }
}

/// Similarity estimate of one arm and the transfer cap it implies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub epsilon: f64,
    pub cap: f64,
}

/// Hoeffding width of the difference of two task means:
/// `sqrt((N_i + N_next) / (2 N_i N_next) * ln(2/delta))`.
pub fn c_width(count: u64, next_count: u64, delta: f64) -> Result<f64> {
    if count == 0 || next_count == 0 {
        return Err(Error::UndefinedWidth);
    }
    check_delta(delta)?;
    let (a, b) = (count as f64, next_count as f64);
    Ok(((a + b) / (2.0 * a * b) * (2.0 / delta).ln()).sqrt())
}

/// Width threshold `sqrt(K/l * ln(2/delta))`.
pub fn c_zero(arms: usize, uniform_steps: u64, delta: f64) -> Result<f64> {
    if arms == 0 || uniform_steps < arms as u64 {
        return config_err(format!(
            "uniform phase l = {uniform_steps} must be at least K = {arms}"
        ));
    }
    check_delta(delta)?;
    Ok((arms as f64 / uniform_steps as f64 * (2.0 / delta).ln()).sqrt())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return config_err(format!("delta = {delta} must lie in (0, 1)"));
    }
    Ok(())
}

/// Estimate of the similarity bound of `arm` at the start of task `task`
/// (one-based). Uses every consecutive pair among the completed tasks whose
/// width does not exceed `c0`, taking the largest `|d| + c`. Falls back to 1
/// when `task <= 2` or no pair qualifies.
pub fn estimate_epsilon(
    history: &EpsilonHistory,
    arm: usize,
    task: usize,
    delta: f64,
    c0: f64,
) -> Result<f64> {
    if task <= 2 {
        return Ok(1.0);
    }
    let required = task - 1;
    if history.tasks.len() < required {
        return Err(Error::IncompleteHistory {
            available: history.tasks.len(),
            required,
        });
    }
    if arm >= history.arms {
        return Err(Error::Index {
            what: "arm",
            index: arm,
            limit: history.arms,
        });
    }
    let mut best: Option<f64> = None;
    for pair in history.tasks[..required].windows(2) {
        let (cur, next) = (pair[0][arm], pair[1][arm]);
        if cur.count == 0 || next.count == 0 {
            continue;
        }
        let c = c_width(cur.count, next.count, delta)?;
        if c > c0 * (1.0 + THRESHOLD_SLACK) {
            continue;
        }
        let d = next.mean - cur.mean;
        let value = (d - c).abs().max((d + c).abs());
        best = Some(best.map_or(value, |b: f64| b.max(value)));
    }
    Ok(best.unwrap_or(1.0))
}

/// Transfer cap `(eta - 4 e^2) / (4 e^2)` clamped at zero.
pub fn estimated_cap(epsilon: f64, eta: f64) -> f64 {
    let four = 4.0 * epsilon * epsilon;
    ((eta - four) / four).max(0.0)
}

/// Estimates for every arm at the start of `task` (one-based).
pub fn estimate_all(
    history: &EpsilonHistory,
    task: usize,
    delta: f64,
    c0: f64,
    eta: f64,
) -> Result<Vec<EpsilonEstimate>> {
    (0..history.arms)
        .map(|k| {
            let epsilon = estimate_epsilon(history, k, task, delta, c0)?;
            Ok(EpsilonEstimate {
                epsilon,
                cap: estimated_cap(epsilon, eta),
            })
        })
        .collect()
}
