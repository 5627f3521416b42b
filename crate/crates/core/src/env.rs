//! Adjacently-similar task sequences and their reward distributions.
//!
//! Task and arm indices are zero-based throughout the library.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::streams::{open_stream, PURPOSE_MEANS};

/// How the next task's mean is drawn around the current mean `mu`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftShape {
    /// Uniform on `[mu - eps, mu + eps]` intersected with [0, 1].
    #[default]
    Clipped,
    /// Uniform on `[mu - w, mu + w]` with `w = min(eps, mu, 1 - mu)`. The
    /// expected step is zero, but means near 0 or 1 barely move.
    Symmetric,
}

/// Shape and randomness of a task sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Number of arms `K`.
    pub arms: usize,
    /// Length of every task; its length is the task count `J`.
    pub task_lengths: Vec<u64>,
    /// Per-arm similarity bound between consecutive tasks.
    pub eps: Vec<f64>,
    /// Width `d` of the uniform reward distributions.
    pub reward_width: f64,
    pub master_seed: u64,
    #[serde(default)]
    pub drift: DriftShape,
}

impl EnvConfig {
    /// A config with equal task lengths and the same `eps` for every arm.
    pub fn uniform(
        arms: usize,
        tasks: usize,
        task_length: u64,
        eps: f64,
        reward_width: f64,
        master_seed: u64,
    ) -> Self {
        Self {
            arms,
            task_lengths: vec![task_length; tasks],
            eps: vec![eps; arms],
            reward_width,
            master_seed,
            drift: DriftShape::default(),
        }
    }

    pub fn with_drift(mut self, drift: DriftShape) -> Self {
        self.drift = drift;
        self
    }

    pub fn tasks(&self) -> usize {
        self.task_lengths.len()
    }

    /// Total number of steps over all tasks.
    pub fn total_steps(&self) -> u64 {
        self.task_lengths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms < 2 {
            return config_err(format!("arm count K = {} must be at least 2", self.arms));
        }
        if self.task_lengths.is_empty() {
            return config_err("task count J must be at least 1");
        }
        if let Some((j, n)) = self
            .task_lengths
            .iter()
            .enumerate()
            .find(|(_, &n)| n < self.arms as u64)
        {
            return config_err(format!(
                "task {j} has length {n}, below the arm count K = {}",
                self.arms
            ));
        }
        if self.eps.len() != self.arms {
            return config_err(format!(
                "eps has {} entries, expected one per arm ({})",
                self.eps.len(),
                self.arms
            ));
        }
        if let Some((k, e)) = self
            .eps
            .iter()
            .enumerate()
            .find(|(_, &e)| !(0.0..1.0).contains(&e))
        {
            return config_err(format!("eps[{k}] = {e} must lie in [0, 1)"));
        }
        if !(self.reward_width > 0.0 && self.reward_width <= 1.0) {
            return config_err(format!(
                "reward width d = {} must lie in (0, 1]",
                self.reward_width
            ));
        }
        Ok(())
    }
}

/// Ground-truth mean rewards of every arm in every task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSequence {
    config: EnvConfig,
    /// `means[j][k]` is the mean of arm `k` in task `j`.
    means: Vec<Vec<f64>>,
}

/// Half-width of a uniform distribution centred on `mean` with nominal
/// half-width `half`, shrunk so the support stays inside [0, 1].
pub fn clipped_half_width(mean: f64, half: f64) -> f64 {
    half.min(mean).min(1.0 - mean).max(0.0)
}

fn uniform_clipped<R: Rng + ?Sized>(rng: &mut R, mean: f64, half: f64) -> f64 {
    let lo = (mean - half).max(0.0);
    let hi = (mean + half).min(1.0);
    (lo + (hi - lo) * rng.random::<f64>()).clamp(lo, hi)
}

fn uniform_around<R: Rng + ?Sized>(rng: &mut R, mean: f64, half: f64) -> f64 {
    let w = clipped_half_width(mean, half);
    if w == 0.0 {
        return mean;
    }
    let u: f64 = rng.random();
    (mean - w + 2.0 * w * u).clamp(0.0, 1.0)
}

/// Draws a task sequence for realization 0 of `cfg`.
pub fn generate_task_sequence(cfg: &EnvConfig) -> Result<TaskSequence> {
    generate_realization(cfg, 0)
}

/// Draws the task sequence of one realization. Each realization uses its
/// own stream, so sequences are independent of generation order.
pub fn generate_realization(cfg: &EnvConfig, realization: u64) -> Result<TaskSequence> {
    cfg.validate()?;
    let mut rng = open_stream(cfg.master_seed, &[realization, PURPOSE_MEANS]);
    let mut means = Vec::with_capacity(cfg.tasks());
    let first: Vec<f64> = (0..cfg.arms).map(|_| rng.random::<f64>()).collect();
    means.push(first);
    for _ in 1..cfg.tasks() {
        let prev = means.last().expect("first task pushed");
        let next: Vec<f64> = prev
            .iter()
            .zip(&cfg.eps)
            .map(|(&mu, &eps)| match cfg.drift {
                DriftShape::Clipped => uniform_clipped(&mut rng, mu, eps),
                DriftShape::Symmetric => uniform_around(&mut rng, mu, eps),
            })
            .collect();
        means.push(next);
    }
    Ok(TaskSequence {
        config: cfg.clone(),
        means,
    })
}

impl TaskSequence {
    /// Builds a sequence from an explicit mean table (`means[j][k]`).
    pub fn from_means(config: EnvConfig, means: Vec<Vec<f64>>) -> Result<Self> {
        config.validate()?;
        if means.len() != config.tasks() {
            return config_err(format!(
                "mean table has {} tasks, config has {}",
                means.len(),
                config.tasks()
            ));
        }
        for (j, row) in means.iter().enumerate() {
            if row.len() != config.arms {
                return config_err(format!(
                    "task {j} has {} means, expected {}",
                    row.len(),
                    config.arms
                ));
            }
            if let Some(m) = row.iter().find(|m| !(0.0..=1.0).contains(*m)) {
                return config_err(format!("task {j} mean {m} outside [0, 1]"));
            }
        }
        Ok(Self { config, means })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn arms(&self) -> usize {
        self.config.arms
    }

    pub fn tasks(&self) -> usize {
        self.means.len()
    }

    pub fn task_length(&self, task: usize) -> Result<u64> {
        self.check_task(task)?;
        Ok(self.config.task_lengths[task])
    }

    /// All means, indexed `[task][arm]`.
    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn mean(&self, task: usize, arm: usize) -> Result<f64> {
        self.check_task(task)?;
        self.check_arm(arm)?;
        Ok(self.means[task][arm])
    }

    /// Largest mean in `task`.
    pub fn optimal_mean(&self, task: usize) -> Result<f64> {
        self.check_task(task)?;
        Ok(self.means[task]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Lowest-indexed arm achieving the optimal mean of `task`.
    pub fn optimal_arm(&self, task: usize) -> Result<usize> {
        let best = self.optimal_mean(task)?;
        Ok(self.means[task]
            .iter()
            .position(|&m| m == best)
            .expect("maximum is attained"))
    }

    /// Sub-optimality gap of `arm` in `task`.
    pub fn gap(&self, task: usize, arm: usize) -> Result<f64> {
        let best = self.optimal_mean(task)?;
        Ok(best - self.mean(task, arm)?)
    }

    /// Gap table indexed `[arm][task]`.
    pub fn gap_table(&self) -> Vec<Vec<f64>> {
        (0..self.arms())
            .map(|k| {
                self.means
                    .iter()
                    .map(|row| {
                        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        best - row[k]
                    })
                    .collect()
            })
            .collect()
    }

    /// Half-width of the reward distribution of `arm` in `task`.
    pub fn reward_half_width(&self, task: usize, arm: usize) -> Result<f64> {
        Ok(clipped_half_width(
            self.mean(task, arm)?,
            self.config.reward_width / 2.0,
        ))
    }

    fn check_task(&self, task: usize) -> Result<()> {
        if task >= self.tasks() {
            return Err(Error::Index {
                what: "task",
                index: task,
                limit: self.tasks(),
            });
        }
        Ok(())
    }

    fn check_arm(&self, arm: usize) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::Index {
                what: "arm",
                index: arm,
                limit: self.arms(),
            });
        }
        Ok(())
    }
}

/// Samples one reward of `arm` in `task`: uniform with mean equal to the
/// arm's mean and half-width `min(d/2, mu, 1 - mu)`.
pub fn sample_reward<R: Rng + ?Sized>(
    seq: &TaskSequence,
    task: usize,
    arm: usize,
    rng: &mut R,
) -> Result<f64> {
    let mu = seq.mean(task, arm)?;
    Ok(uniform_around(rng, mu, seq.config.reward_width / 2.0))
}
