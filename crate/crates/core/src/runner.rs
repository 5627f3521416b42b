//! Episode simulation and multi-realization experiments.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{nt_ucb_bound, tr_ucb2_bound, tr_ucb_bound, GapSummary};
use crate::env::{generate_realization, sample_reward, EnvConfig, TaskSequence};
use crate::error::{config_err, Result};
use crate::estimator::EpsilonEstimate;
use crate::policies::{compute_cap, Algorithm, Policy, PolicyConfig, TransferRecord};
use crate::streams::{open_stream, PURPOSE_REWARDS, PURPOSE_UNPAIRED};

/// Supplies the reward of each pull.
pub trait RewardSource {
    fn draw(&mut self, seq: &TaskSequence, task: usize, arm: usize) -> f64;
}

/// Counter-based rewards: the `n`-th pull of arm `k` in task `j` gets the
/// `n`-th draw of a stream keyed by `(realization, j, k)`, so every policy
/// run on the same realization sees the same reward for the same pull.
#[derive(Debug, Clone)]
pub struct PairedRewards {
    master_seed: u64,
    realization: u64,
    task: Option<usize>,
    streams: Vec<ChaCha8Rng>,
}

impl PairedRewards {
    pub fn new(master_seed: u64, realization: u64) -> Self {
        Self {
            master_seed,
            realization,
            task: None,
            streams: Vec::new(),
        }
    }
}

impl RewardSource for PairedRewards {
    fn draw(&mut self, seq: &TaskSequence, task: usize, arm: usize) -> f64 {
        if self.task != Some(task) {
            self.streams = (0..seq.arms())
                .map(|k| {
                    open_stream(
                        self.master_seed,
                        &[self.realization, PURPOSE_REWARDS, task as u64, k as u64],
                    )
                })
                .collect();
            self.task = Some(task);
        }
        sample_reward(seq, task, arm, &mut self.streams[arm]).expect("runner indices are in range")
    }
}

/// One sequential stream per run; different policies see different draws.
#[derive(Debug, Clone)]
pub struct StreamRewards<R> {
    rng: R,
}

impl<R: Rng> StreamRewards<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> RewardSource for StreamRewards<R> {
    fn draw(&mut self, seq: &TaskSequence, task: usize, arm: usize) -> f64 {
        sample_reward(seq, task, arm, &mut self.rng).expect("runner indices are in range")
    }
}

/// Fixed per-arm reward scripts, consumed in pull order across tasks.
/// Pulls beyond a script's end repeat its last value.
#[derive(Debug, Clone)]
pub struct ScriptedRewards {
    scripts: Vec<Vec<f64>>,
    next: Vec<usize>,
}

impl ScriptedRewards {
    pub fn new(scripts: Vec<Vec<f64>>) -> Self {
        let next = vec![0; scripts.len()];
        Self { scripts, next }
    }
}

impl RewardSource for ScriptedRewards {
    fn draw(&mut self, _seq: &TaskSequence, _task: usize, arm: usize) -> f64 {
        let script = &self.scripts[arm];
        let i = self.next[arm].min(script.len() - 1);
        self.next[arm] += 1;
        script[i]
    }
}

/// Receives every simulated step.
pub trait StepObserver {
    /// `step` is the one-based global step; `regret` the cumulative
    /// pseudo-regret after it.
    fn on_step(&mut self, step: u64, task: usize, arm: usize, regret: f64);

    fn on_task_end(&mut self, _task: usize, _step: u64, _regret: f64) {}
}

/// Full record of one episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunTrace {
    /// Arm chosen at each global step.
    pub arms: Vec<usize>,
    /// Global step count at the end of each task.
    pub task_ends: Vec<u64>,
    /// Cumulative pseudo-regret after each step.
    pub regret: Vec<f64>,
    pub transfers: Vec<TransferRecord>,
    pub epsilon_estimates: Vec<Vec<EpsilonEstimate>>,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.regret.last().copied().unwrap_or(0.0)
    }
}

impl StepObserver for RunTrace {
    fn on_step(&mut self, _step: u64, _task: usize, arm: usize, regret: f64) {
        self.arms.push(arm);
        self.regret.push(regret);
    }

    fn on_task_end(&mut self, _task: usize, step: u64, _regret: f64) {
        self.task_ends.push(step);
    }
}

/// Records cumulative regret at fixed global steps.
#[derive(Debug, Clone)]
pub struct CurveRecorder {
    points: Vec<u64>,
    values: Vec<f64>,
}

impl CurveRecorder {
    /// `points` must be sorted; a point of 0 is recorded as 0 regret.
    pub fn new(points: Vec<u64>) -> Self {
        let mut values = Vec::with_capacity(points.len());
        if points.first() == Some(&0) {
            values.push(0.0);
        }
        Self { points, values }
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl StepObserver for CurveRecorder {
    fn on_step(&mut self, step: u64, _task: usize, _arm: usize, regret: f64) {
        if self.points.get(self.values.len()) == Some(&step) {
            self.values.push(regret);
        }
    }
}

/// Global steps at which curves are sampled: 0, every multiple of
/// `stride`, and the end of every task.
pub fn record_points(task_lengths: &[u64], stride: u64) -> Vec<u64> {
    let total: u64 = task_lengths.iter().sum();
    let mut points = vec![0];
    if let Some(count) = total.checked_div(stride) {
        points.extend((1..=count).map(|i| i * stride));
    }
    points.extend(task_lengths.iter().scan(0, |acc, &n| {
        *acc += n;
        Some(*acc)
    }));
    points.sort_unstable();
    points.dedup();
    points
}

/// Runs one policy over every task of `seq`, reporting each step to
/// `observer`. Returns the final policy state.
pub fn simulate<S: RewardSource, O: StepObserver>(
    seq: &TaskSequence,
    config: &PolicyConfig,
    rewards: &mut S,
    observer: &mut O,
) -> Result<Policy> {
    let mut policy = Policy::new(config.clone(), seq.arms(), &seq.config().eps)?;
    let gaps: Vec<Vec<f64>> = seq
        .means()
        .iter()
        .map(|row| {
            let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            row.iter().map(|m| best - m).collect()
        })
        .collect();
    let mut step = 0u64;
    let mut regret = 0.0;
    for (task, task_gaps) in gaps.iter().enumerate() {
        let length = seq.task_length(task)?;
        policy.begin_task(length)?;
        for _ in 0..length {
            let arm = policy.choose()?;
            let reward = rewards.draw(seq, task, arm);
            policy.observe(reward);
            step += 1;
            regret += task_gaps[arm];
            observer.on_step(step, task, arm, regret);
        }
        observer.on_task_end(task, step, regret);
    }
    Ok(policy)
}

/// Simulates one episode with the given reward source and returns its trace.
pub fn run_episode_with<S: RewardSource>(
    seq: &TaskSequence,
    config: &PolicyConfig,
    rewards: &mut S,
) -> Result<RunTrace> {
    let mut trace = RunTrace::default();
    let policy = simulate(seq, config, rewards, &mut trace)?;
    trace.transfers = policy.transfers().to_vec();
    trace.epsilon_estimates = policy.epsilon_estimates().to_vec();
    Ok(trace)
}

/// Simulates one episode with paired rewards for `realization`.
pub fn run_episode(
    seq: &TaskSequence,
    config: &PolicyConfig,
    realization: u64,
) -> Result<RunTrace> {
    let mut rewards = PairedRewards::new(seq.config().master_seed, realization);
    run_episode_with(seq, config, &mut rewards)
}

/// Analytic regret bound matching `config` on `seq`, if one exists.
pub fn analytic_bound(seq: &TaskSequence, config: &PolicyConfig) -> Result<Option<f64>> {
    let gaps = GapSummary::from_sequence(seq);
    let lengths = &seq.config().task_lengths;
    match config.algorithm {
        Algorithm::NtUcb => nt_ucb_bound(&gaps, lengths, config.alpha).map(Some),
        Algorithm::TrUcb => {
            let eps = config.eps.as_deref().unwrap_or(&seq.config().eps);
            let caps = eps
                .iter()
                .map(|&e| compute_cap(e, config.eta))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(
                tr_ucb_bound(&gaps, lengths, config.alpha, config.eta, &caps)?.total,
            ))
        }
        Algorithm::TrUcb2 => tr_ucb2_bound(
            &gaps,
            lengths,
            config.alpha,
            config.eta,
            config.uniform_steps,
            config.phase_one_tasks,
            config.delta,
            seq.arms(),
        )
        .map(Some),
        Algorithm::Naive => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOptions {
    pub realizations: u64,
    pub record_stride: u64,
    /// Share reward draws across policies within a realization.
    pub paired: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            realizations: 20,
            record_stride: 1000,
            paired: true,
        }
    }
}

/// Averaged outcome of one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgorithmResult {
    pub config: PolicyConfig,
    /// Curves per realization, sampled at the experiment's record points.
    pub curves: Vec<Vec<f64>>,
    pub mean_curve: Vec<f64>,
    pub finals: Vec<f64>,
    pub final_mean: f64,
    /// Sample standard deviation of the final regrets (0 for one realization).
    pub final_std: f64,
    /// Analytic bound per realization, when the algorithm has one.
    pub bounds: Option<Vec<f64>>,
    pub bound_mean: Option<f64>,
}

impl AlgorithmResult {
    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub env: EnvConfig,
    pub options: ExperimentOptions,
    pub steps: Vec<u64>,
    pub algorithms: Vec<AlgorithmResult>,
}

impl ExperimentResult {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmResult> {
        self.algorithms.iter().find(|a| a.algorithm() == algorithm)
    }
}

struct RealizationOutput {
    curves: Vec<Vec<f64>>,
    bounds: Vec<Option<f64>>,
}

fn run_realization(
    env: &EnvConfig,
    policies: &[PolicyConfig],
    options: &ExperimentOptions,
    points: &[u64],
    realization: u64,
) -> Result<RealizationOutput> {
    let seq = generate_realization(env, realization)?;
    let mut curves = Vec::with_capacity(policies.len());
    let mut bounds = Vec::with_capacity(policies.len());
    for (i, config) in policies.iter().enumerate() {
        let mut recorder = CurveRecorder::new(points.to_vec());
        if options.paired {
            let mut rewards = PairedRewards::new(env.master_seed, realization);
            simulate(&seq, config, &mut rewards, &mut recorder)?;
        } else {
            let rng = open_stream(env.master_seed, &[realization, PURPOSE_UNPAIRED, i as u64]);
            simulate(&seq, config, &mut StreamRewards::new(rng), &mut recorder)?;
        }
        curves.push(recorder.into_values());
        bounds.push(analytic_bound(&seq, config)?);
    }
    Ok(RealizationOutput { curves, bounds })
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every policy on `options.realizations` independent realizations of
/// `env`. Realization `r` regenerates its task sequence and rewards from
/// `(master_seed, r)`; realizations run in parallel and are aggregated in
/// index order, so results do not depend on scheduling.
pub fn run_experiment(
    env: &EnvConfig,
    policies: &[PolicyConfig],
    options: &ExperimentOptions,
) -> Result<ExperimentResult> {
    env.validate()?;
    if options.realizations == 0 {
        return config_err("realization count must be at least 1");
    }
    for p in policies {
        p.validate(env.arms)?;
    }
    let points = record_points(&env.task_lengths, options.record_stride);
    let outputs = (0..options.realizations)
        .into_par_iter()
        .map(|r| run_realization(env, policies, options, &points, r))
        .collect::<Result<Vec<_>>>()?;

    let algorithms = policies
        .iter()
        .enumerate()
        .map(|(i, config)| {
            let curves: Vec<Vec<f64>> = outputs.iter().map(|o| o.curves[i].clone()).collect();
            let mean_curve = (0..points.len())
                .map(|s| curves.iter().map(|c| c[s]).sum::<f64>() / curves.len() as f64)
                .collect();
            let finals: Vec<f64> = curves
                .iter()
                .map(|c| *c.last().expect("curves are nonempty"))
                .collect();
            let (final_mean, final_std) = mean_std(&finals);
            let bounds: Option<Vec<f64>> = outputs.iter().map(|o| o.bounds[i]).collect();
            let bound_mean = bounds.as_ref().map(|b| mean_std(b).0);
            AlgorithmResult {
                config: config.clone(),
                curves,
                mean_curve,
                finals,
                final_mean,
                final_std,
                bounds,
                bound_mean,
            }
        })
        .collect();

    Ok(ExperimentResult {
        env: env.clone(),
        options: options.clone(),
        steps: points,
        algorithms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_points_cover_boundaries() {
        assert_eq!(record_points(&[5, 7], 4), vec![0, 4, 5, 8, 12]);
        assert_eq!(record_points(&[3], 0), vec![0, 3]);
    }

    #[test]
    fn mean_and_std() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn scripted_rewards_repeat_last() {
        let cfg = EnvConfig::uniform(2, 1, 4, 0.1, 0.1, 0);
        let seq = TaskSequence::from_means(cfg, vec![vec![0.5, 0.5]]).unwrap();
        let mut s = ScriptedRewards::new(vec![vec![0.1, 0.2], vec![0.9]]);
        let got: Vec<f64> = (0..3).map(|_| s.draw(&seq, 0, 0)).collect();
        assert_eq!(got, vec![0.1, 0.2, 0.2]);
        assert_eq!(s.draw(&seq, 0, 1), 0.9);
    }

    #[test]
    fn paired_rewards_depend_only_on_pull_index() {
        let cfg = EnvConfig::uniform(2, 2, 10, 0.1, 0.1, 4);
        let seq = generate_realization(&cfg, 0).unwrap();
        let mut a = PairedRewards::new(4, 0);
        let mut b = PairedRewards::new(4, 0);
        let a0 = a.draw(&seq, 0, 0);
        let _ = b.draw(&seq, 0, 1);
        let _ = b.draw(&seq, 0, 1);
        assert_eq!(a0, b.draw(&seq, 0, 0));
        assert_ne!(a.draw(&seq, 1, 0), a0);
    }
}
