//! Arm-selection policies: NT-UCB, Tr-UCB, Tr-UCB2 and Naive-Transfer.
//!
//! All index computations take `elapsed`, the number of steps already
//! completed in the current task. A decision at step `t` therefore passes
//! `elapsed = t - 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::estimator::{c_zero, estimate_all, EpsilonEstimate, EpsilonHistory, TaskArmSummary};

/// Running pull count and reward sum of one arm within a task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub reward_sum: f64,
}

impl ArmStats {
    pub fn new(pulls: u64, reward_sum: f64) -> Self {
        Self { pulls, reward_sum }
    }

    pub fn record(&mut self, reward: f64) {
        self.pulls += 1;
        self.reward_sum += reward;
    }

    /// Sample mean, or `None` before the first pull.
    pub fn mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.reward_sum / self.pulls as f64)
    }
}

/// Maximum number of samples transferred for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferCap {
    Finite(f64),
    /// Every sample from the preceding task is transferred (`eps = 0`).
    All,
}

impl TransferCap {
    /// Integer sample cap applied to the running count.
    pub fn sample_limit(&self) -> u64 {
        match *self {
            TransferCap::Finite(b) => b.floor() as u64,
            TransferCap::All => u64::MAX,
        }
    }

    /// Value placed inside the logarithm of the auxiliary width, given the
    /// realized transfer count.
    pub fn effective(&self, transferred: u64) -> f64 {
        match *self {
            TransferCap::Finite(b) => b,
            TransferCap::All => transferred as f64,
        }
    }
}

/// Transfer cap `(eta - 4 eps^2) / (4 eps^2)`, clamped at zero.
pub fn compute_cap(eps: f64, eta: f64) -> Result<TransferCap> {
    if !(eta > 8.0) {
        return config_err(format!("eta = {eta} must exceed 8"));
    }
    if !(eps >= 0.0) {
        return config_err(format!("eps = {eps} must be nonnegative"));
    }
    if eps == 0.0 {
        return Ok(TransferCap::All);
    }
    let four_eps_sq = 4.0 * eps * eps;
    Ok(TransferCap::Finite(
        ((eta - four_eps_sq) / four_eps_sq).max(0.0),
    ))
}

/// Samples carried into a task for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferEntry {
    pub count: u64,
    pub reward_sum: f64,
    pub cap: TransferCap,
}

impl TransferEntry {
    pub fn empty(cap: TransferCap) -> Self {
        Self {
            count: 0,
            reward_sum: 0.0,
            cap,
        }
    }
}

/// Per-arm transferred samples for one task boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPayload {
    pub entries: Vec<TransferEntry>,
}

/// Takes the first `floor(B)` rewards of each arm, in pull order, from the
/// preceding task.
pub fn build_transfer_payload(prev_rewards: &[Vec<f64>], caps: &[TransferCap]) -> TransferPayload {
    let entries = prev_rewards
        .iter()
        .zip(caps)
        .map(|(rewards, &cap)| {
            let count = (rewards.len() as u64).min(cap.sample_limit());
            TransferEntry {
                count,
                reward_sum: rewards[..count as usize].iter().sum(),
                cap,
            }
        })
        .collect();
    TransferPayload { entries }
}

/// Upper confidence value `sum/count + sqrt(scale * log_term / (2 count))`.
pub fn confidence_index(sum: f64, count: f64, log_term: f64, scale: f64) -> f64 {
    sum / count + (scale * log_term / (2.0 * count)).sqrt()
}

/// `S/N + sqrt(alpha ln(elapsed) / (2N))`.
pub fn ucb1_index(stats: &ArmStats, elapsed: u64, alpha: f64) -> Result<f64> {
    if stats.pulls == 0 {
        return Err(Error::UndefinedIndex { arm: usize::MAX });
    }
    let log_t = (elapsed.max(1) as f64).ln();
    Ok(confidence_index(
        stats.reward_sum,
        stats.pulls as f64,
        log_t,
        alpha,
    ))
}

/// `(S+R)/(N+M) + sqrt(eta ln(B + elapsed) / (2(N+M)))` with the sentinel cap
/// replaced by the realized transfer count.
pub fn aux_index(stats: &ArmStats, entry: &TransferEntry, elapsed: u64, eta: f64) -> Result<f64> {
    let total = stats.pulls + entry.count;
    if total == 0 {
        return Err(Error::UndefinedIndex { arm: usize::MAX });
    }
    let log_arg = (entry.cap.effective(entry.count) + elapsed as f64).max(1.0);
    Ok(confidence_index(
        stats.reward_sum + entry.reward_sum,
        total as f64,
        log_arg.ln(),
        eta,
    ))
}

/// First index attaining the maximum.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, v) in values.enumerate() {
        if v > best_val {
            best = k;
            best_val = v;
        }
    }
    best
}

fn tag_arm(res: Result<f64>, arm: usize) -> Result<f64> {
    res.map_err(|e| match e {
        Error::UndefinedIndex { .. } => Error::UndefinedIndex { arm },
        other => other,
    })
}

/// NT-UCB decision: largest UCB1 index, ties to the lowest arm.
pub fn select_arm_nt(stats: &[ArmStats], elapsed: u64, alpha: f64) -> Result<usize> {
    let idx = stats
        .iter()
        .enumerate()
        .map(|(k, s)| tag_arm(ucb1_index(s, elapsed, alpha), k))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax(idx.into_iter()))
}

/// Tr-UCB decision: largest `min(ucb1, aux)`. Without a payload (first
/// task) this is the NT-UCB decision.
pub fn select_arm_tr(
    stats: &[ArmStats],
    payload: Option<&TransferPayload>,
    elapsed: u64,
    alpha: f64,
    eta: f64,
) -> Result<usize> {
    let Some(payload) = payload else {
        return select_arm_nt(stats, elapsed, alpha);
    };
    let idx = stats
        .iter()
        .zip(&payload.entries)
        .enumerate()
        .map(|(k, (s, e))| {
            let u1 = tag_arm(ucb1_index(s, elapsed, alpha), k)?;
            let u2 = tag_arm(aux_index(s, e, elapsed, eta), k)?;
            Ok(u1.min(u2))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(argmax(idx.into_iter()))
}

/// Starting statistics of a Naive-Transfer task: the preceding task's final
/// statistics, or zeros when nothing precedes. Since those final statistics
/// already include what was carried into the preceding task, Naive-Transfer
/// keeps pooling samples across the whole sequence.
pub fn naive_transfer_carryover(prev_final: Option<&[ArmStats]>, arms: usize) -> Vec<ArmStats> {
    match prev_final {
        Some(prev) => prev.to_vec(),
        None => vec![ArmStats::default(); arms],
    }
}

/// Bias of the auxiliary estimate relative to half its width, evaluated for
/// `pulls` current-task samples at `elapsed` steps. Returns `(bias, half_width)`.
pub fn bias_and_half_width(
    entry: &TransferEntry,
    eps: f64,
    pulls: u64,
    elapsed: u64,
    eta: f64,
) -> (f64, f64) {
    let total = (pulls + entry.count) as f64;
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let bias = entry.count as f64 * eps / total;
    let log_arg = (entry.cap.effective(entry.count) + elapsed as f64).max(1.0);
    let half = 0.5 * (eta * log_arg.ln() / (2.0 * total)).sqrt();
    (bias, half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NtUcb,
    TrUcb,
    TrUcb2,
    Naive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::NtUcb,
        Algorithm::TrUcb,
        Algorithm::TrUcb2,
        Algorithm::Naive,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            Algorithm::NtUcb => "nt_ucb",
            Algorithm::TrUcb => "tr_ucb",
            Algorithm::TrUcb2 => "tr_ucb2",
            Algorithm::Naive => "naive",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::NtUcb => "NT-UCB",
            Algorithm::TrUcb => "Tr-UCB",
            Algorithm::TrUcb2 => "Tr-UCB2",
            Algorithm::Naive => "Naive-Transfer",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "nt_ucb" => Ok(Algorithm::NtUcb),
            "tr_ucb" => Ok(Algorithm::TrUcb),
            "tr_ucb2" => Ok(Algorithm::TrUcb2),
            "naive" | "naive_transfer" => Ok(Algorithm::Naive),
            other => config_err(format!("unknown algorithm '{other}'")),
        }
    }
}

/// Parameters of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub eta: f64,
    /// Known similarity bounds for Tr-UCB; `None` uses the environment's.
    pub eps: Option<Vec<f64>>,
    /// Length `l` of the uniform phase (Tr-UCB2).
    pub uniform_steps: u64,
    /// Number `L` of tasks with a uniform phase (Tr-UCB2).
    pub phase_one_tasks: usize,
    /// Confidence level of the similarity estimate (Tr-UCB2).
    pub delta: f64,
}

impl PolicyConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            alpha: 8.1,
            eta: 8.1,
            eps: None,
            uniform_steps: 2000,
            phase_one_tasks: 20,
            delta: 0.1,
        }
    }

    pub fn validate(&self, arms: usize) -> Result<()> {
        if !(self.alpha > 2.0) {
            return config_err(format!("alpha = {} must exceed 2", self.alpha));
        }
        match self.algorithm {
            Algorithm::NtUcb | Algorithm::Naive => {}
            Algorithm::TrUcb => {
                if !(self.eta > 8.0) {
                    return config_err(format!("eta = {} must exceed 8", self.eta));
                }
                if let Some(eps) = &self.eps {
                    if eps.len() != arms {
                        return config_err(format!(
                            "known eps has {} entries, expected {arms}",
                            eps.len()
                        ));
                    }
                    if let Some(e) = eps.iter().find(|e| !(**e >= 0.0)) {
                        return config_err(format!("known eps {e} must be nonnegative"));
                    }
                }
            }
            Algorithm::TrUcb2 => {
                if !(self.eta > 8.0) {
                    return config_err(format!("eta = {} must exceed 8", self.eta));
                }
                if self.uniform_steps == 0 || !self.uniform_steps.is_multiple_of(arms as u64) {
                    return config_err(format!(
                        "uniform phase length l = {} must be a positive multiple of K = {arms}",
                        self.uniform_steps
                    ));
                }
                if self.phase_one_tasks < 2 {
                    return config_err(format!(
                        "phase-one task count L = {} must be at least 2",
                        self.phase_one_tasks
                    ));
                }
                if !(self.delta > 0.0 && self.delta < 1.0) {
                    return config_err(format!("delta = {} must lie in (0, 1)", self.delta));
                }
            }
        }
        Ok(())
    }
}

/// Record of the samples handed to one arm at a task boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferRecord {
    pub task: usize,
    pub arm: usize,
    /// Pulls of the arm in the preceding task.
    pub available: u64,
    pub entry: TransferEntry,
    /// Similarity bound the cap was derived from (known or estimated).
    pub eps: f64,
}

/// Sequential state of one policy over a task sequence.
#[derive(Debug, Clone)]
pub struct Policy {
    config: PolicyConfig,
    arms: usize,
    known_caps: Vec<TransferCap>,
    known_eps: Vec<f64>,
    c0: f64,
    task: Option<usize>,
    task_length: u64,
    elapsed: u64,
    stats: Vec<ArmStats>,
    carry: Vec<ArmStats>,
    carry_steps: u64,
    payload: Option<TransferPayload>,
    rewards: Vec<Vec<f64>>,
    prev_rewards: Vec<Vec<f64>>,
    prev_length: u64,
    history: EpsilonHistory,
    estimates: Vec<Vec<EpsilonEstimate>>,
    transfers: Vec<TransferRecord>,
    pending: Option<usize>,
}

impl Policy {
    /// Creates a policy for `arms` arms. `env_eps` supplies the similarity
    /// bounds Tr-UCB uses when the config has none of its own.
    pub fn new(config: PolicyConfig, arms: usize, env_eps: &[f64]) -> Result<Self> {
        config.validate(arms)?;
        let known_eps = config.eps.clone().unwrap_or_else(|| env_eps.to_vec());
        let known_caps = if config.algorithm == Algorithm::TrUcb {
            if known_eps.len() != arms {
                return config_err(format!(
                    "known eps has {} entries, expected {arms}",
                    known_eps.len()
                ));
            }
            known_eps
                .iter()
                .map(|&e| compute_cap(e, config.eta))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let c0 = if config.algorithm == Algorithm::TrUcb2 {
            c_zero(arms, config.uniform_steps, config.delta)?
        } else {
            0.0
        };
        Ok(Self {
            config,
            arms,
            known_caps,
            known_eps,
            c0,
            task: None,
            task_length: 0,
            elapsed: 0,
            stats: vec![ArmStats::default(); arms],
            carry: vec![ArmStats::default(); arms],
            carry_steps: 0,
            payload: None,
            rewards: vec![Vec::new(); arms],
            prev_rewards: vec![Vec::new(); arms],
            prev_length: 0,
            history: EpsilonHistory::new(arms),
            estimates: Vec::new(),
            transfers: Vec::new(),
            pending: None,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    /// Current-task statistics.
    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    /// Steps completed in the current task.
    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    pub fn payload(&self) -> Option<&TransferPayload> {
        self.payload.as_ref()
    }

    /// Transfers performed so far, one record per arm per boundary.
    pub fn transfers(&self) -> &[TransferRecord] {
        &self.transfers
    }

    /// Similarity estimates made by Tr-UCB2, one vector per task.
    pub fn epsilon_estimates(&self) -> &[Vec<EpsilonEstimate>] {
        &self.estimates
    }

    fn uses_sample_trace(&self) -> bool {
        matches!(self.config.algorithm, Algorithm::TrUcb | Algorithm::TrUcb2)
    }

    /// Closes the current task (if any) and prepares task statistics, the
    /// transfer payload or carryover for the next task of `length` steps.
    pub fn begin_task(&mut self, length: u64) -> Result<()> {
        if length < self.arms as u64 {
            return config_err(format!(
                "task length {length} below arm count {}",
                self.arms
            ));
        }
        if self.config.algorithm == Algorithm::TrUcb2 && length < self.config.uniform_steps {
            let next = self.task.map_or(0, |t| t + 1);
            if next < self.config.phase_one_tasks {
                return config_err(format!(
                    "task length {length} shorter than the uniform phase l = {}",
                    self.config.uniform_steps
                ));
            }
        }
        if let Some(prev) = self.task {
            if self.config.algorithm == Algorithm::TrUcb2 {
                let summary = self
                    .stats
                    .iter()
                    .map(|s| TaskArmSummary {
                        mean: s.mean().unwrap_or(0.0),
                        count: s.pulls,
                    })
                    .collect();
                self.history.push_task(summary)?;
            }
            if self.config.algorithm == Algorithm::Naive {
                let finals = self.pooled_stats();
                self.carry = naive_transfer_carryover(Some(&finals), self.arms);
            }
            self.carry_steps = self.elapsed;
            self.prev_length = self.elapsed;
            if self.uses_sample_trace() {
                self.prev_rewards = std::mem::take(&mut self.rewards);
                self.rewards = vec![Vec::new(); self.arms];
            }
            self.task = Some(prev + 1);
        } else {
            self.task = Some(0);
        }
        let task = self.task.expect("task set above");
        self.stats = vec![ArmStats::default(); self.arms];
        self.elapsed = 0;
        self.task_length = length;
        self.pending = None;

        match self.config.algorithm {
            Algorithm::NtUcb | Algorithm::Naive => {}
            Algorithm::TrUcb => {
                if task > 0 {
                    let caps = self.known_caps.clone();
                    let eps = self.known_eps.clone();
                    self.install_payload(task, &caps, &eps);
                }
            }
            Algorithm::TrUcb2 => {
                let est = estimate_all(
                    &self.history,
                    task + 1,
                    self.config.delta,
                    self.c0,
                    self.config.eta,
                )?;
                if task > 0 {
                    let caps: Vec<_> = est.iter().map(|e| TransferCap::Finite(e.cap)).collect();
                    let eps: Vec<_> = est.iter().map(|e| e.epsilon).collect();
                    self.install_payload(task, &caps, &eps);
                }
                self.estimates.push(est);
            }
        }
        Ok(())
    }

    fn install_payload(&mut self, task: usize, caps: &[TransferCap], eps: &[f64]) {
        let payload = build_transfer_payload(&self.prev_rewards, caps);
        for (arm, entry) in payload.entries.iter().enumerate() {
            self.transfers.push(TransferRecord {
                task,
                arm,
                available: self.prev_rewards[arm].len() as u64,
                entry: *entry,
                eps: eps[arm],
            });
        }
        self.payload = Some(payload);
    }

    /// Length of the forced schedule at the start of the current task.
    fn forced_steps(&self) -> u64 {
        let task = self.task.unwrap_or(0);
        if self.config.algorithm == Algorithm::TrUcb2 && task < self.config.phase_one_tasks {
            self.config.uniform_steps
        } else {
            self.arms as u64
        }
    }

    /// Chooses the arm for the next step of the current task.
    pub fn choose(&mut self) -> Result<usize> {
        let task = self
            .task
            .ok_or_else(|| Error::Config("no task started".into()))?;
        if self.elapsed >= self.task_length {
            return Err(Error::SequenceExhausted {
                task,
                length: self.task_length,
            });
        }
        let arm = if self.elapsed < self.forced_steps() {
            (self.elapsed % self.arms as u64) as usize
        } else {
            let cfg = &self.config;
            match cfg.algorithm {
                Algorithm::NtUcb => select_arm_nt(&self.stats, self.elapsed, cfg.alpha)?,
                Algorithm::TrUcb | Algorithm::TrUcb2 => select_arm_tr(
                    &self.stats,
                    self.payload.as_ref().filter(|_| task > 0),
                    self.elapsed,
                    cfg.alpha,
                    cfg.eta,
                )?,
                Algorithm::Naive => {
                    let pooled = self.pooled_stats();
                    let steps = if task > 0 {
                        self.elapsed + self.carry_steps
                    } else {
                        self.elapsed
                    };
                    select_arm_nt(&pooled, steps, cfg.alpha)?
                }
            }
        };
        self.pending = Some(arm);
        Ok(arm)
    }

    /// Records the reward of the most recently chosen arm.
    pub fn observe(&mut self, reward: f64) {
        let arm = self
            .pending
            .take()
            .expect("observe called without a pending choice");
        self.stats[arm].record(reward);
        if self.uses_sample_trace() {
            self.rewards[arm].push(reward);
        }
        self.elapsed += 1;
    }

    /// Records `last_reward` for the previous choice (if any) and chooses
    /// the next arm.
    pub fn step(&mut self, last_reward: Option<f64>) -> Result<usize> {
        if let Some(r) = last_reward {
            if self.pending.is_some() {
                self.observe(r);
            }
        }
        self.choose()
    }

    /// Current-task statistics plus the naive carryover.
    pub fn pooled_stats(&self) -> Vec<ArmStats> {
        self.stats
            .iter()
            .zip(&self.carry)
            .map(|(s, c)| ArmStats::new(s.pulls + c.pulls, s.reward_sum + c.reward_sum))
            .collect()
    }

    /// Statistics that the naive carryover brought into the current task.
    pub fn carryover(&self) -> &[ArmStats] {
        &self.carry
    }

    pub fn epsilon_history(&self) -> &EpsilonHistory {
        &self.history
    }

    pub fn previous_task_length(&self) -> u64 {
        self.prev_length
    }
}
