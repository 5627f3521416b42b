//! Small-instance traces checked against independent simulations.

use seqbandit::runner::{run_episode_with, simulate, RunTrace, ScriptedRewards};
use seqbandit::{
    generate_realization, run_experiment, Algorithm, EnvConfig, ExperimentOptions, PolicyConfig,
    TaskSequence,
};

const SCRIPT_A: [f64; 20] = [
    0.9, 0.1, 0.2, 0.3, 0.2, 0.1, 0.25, 0.3, 0.2, 0.1, 0.2, 0.3, 0.1, 0.2, 0.3, 0.2, 0.1, 0.2, 0.3,
    0.2,
];
const SCRIPT_B: [f64; 20] = [
    0.5, 0.6, 0.55, 0.45, 0.5, 0.6, 0.5, 0.55, 0.5, 0.6, 0.45, 0.5, 0.55, 0.6, 0.5, 0.5, 0.55, 0.5,
    0.6, 0.5,
];

fn two_arm_sequence(tasks: usize, length: u64, means: &[[f64; 2]]) -> TaskSequence {
    let cfg = EnvConfig::uniform(2, tasks, length, 0.6, 0.1, 0);
    TaskSequence::from_means(cfg, means.iter().map(|m| m.to_vec()).collect()).unwrap()
}

fn scripted() -> ScriptedRewards {
    ScriptedRewards::new(vec![SCRIPT_A.to_vec(), SCRIPT_B.to_vec()])
}

/// Cumulative regret recomputed from the arm trace alone.
fn post_hoc_regret(seq: &TaskSequence, trace: &RunTrace) -> f64 {
    let mut total = 0.0;
    let mut start = 0usize;
    for (j, &end) in trace.task_ends.iter().enumerate() {
        let row = &seq.means()[j];
        let best = row.iter().cloned().fold(f64::MIN, f64::max);
        let n = (end as usize - start) as f64;
        let collected: f64 = trace.arms[start..end as usize]
            .iter()
            .map(|&a| row[a])
            .sum();
        total += n * best - collected;
        start = end as usize;
    }
    total
}

#[test]
fn nt_ucb_matches_hand_simulation() {
    let seq = two_arm_sequence(1, 10, &[[0.3, 0.55]]);
    let trace =
        run_episode_with(&seq, &PolicyConfig::new(Algorithm::NtUcb), &mut scripted()).unwrap();
    assert_eq!(trace.arms, vec![0, 1, 0, 1, 1, 0, 1, 0, 1, 0]);
    // Five pulls of the worse arm, each costing 0.25.
    assert!((trace.final_regret() - 1.25).abs() < 1e-12);
    assert!((post_hoc_regret(&seq, &trace) - trace.final_regret()).abs() < 1e-9);
}

#[test]
fn tr_ucb_matches_hand_simulation() {
    // eps = 0.6 gives B = (8.1 - 1.44) / 1.44 = 4.625, so at most 4 samples move.
    let seq = two_arm_sequence(2, 10, &[[0.3, 0.55], [0.25, 0.5]]);
    let mut cfg = PolicyConfig::new(Algorithm::TrUcb);
    cfg.eps = Some(vec![0.6, 0.6]);
    let trace = run_episode_with(&seq, &cfg, &mut scripted()).unwrap();
    assert_eq!(
        trace.arms,
        vec![0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1]
    );
    assert_eq!(trace.task_ends, vec![10, 20]);
    let counts: Vec<u64> = trace.transfers.iter().map(|t| t.entry.count).collect();
    assert_eq!(counts, vec![4, 4]);
    // First four rewards of each arm in task 1.
    assert!((trace.transfers[0].entry.reward_sum - (0.9 + 0.1 + 0.2 + 0.3)).abs() < 1e-12);
    assert!((trace.transfers[1].entry.reward_sum - (0.5 + 0.6 + 0.55 + 0.45)).abs() < 1e-12);
    assert!((post_hoc_regret(&seq, &trace) - trace.final_regret()).abs() < 1e-9);

    let nt = run_episode_with(&seq, &PolicyConfig::new(Algorithm::NtUcb), &mut scripted()).unwrap();
    assert_eq!(
        nt.arms,
        vec![0, 1, 0, 1, 1, 0, 1, 0, 1, 0, 0, 1, 1, 0, 1, 1, 0, 1, 0, 1]
    );
}

#[test]
fn equal_means_give_zero_regret() {
    let cfg = EnvConfig::uniform(3, 3, 50, 0.1, 0.1, 0);
    let seq = TaskSequence::from_means(cfg, vec![vec![0.4; 3]; 3]).unwrap();
    for algo in Algorithm::ALL {
        let mut pc = PolicyConfig::new(algo);
        pc.uniform_steps = 6;
        pc.phase_one_tasks = 2;
        let trace = seqbandit::run_episode(&seq, &pc, 0).unwrap();
        assert_eq!(trace.final_regret(), 0.0, "{algo}");
    }
}

#[test]
fn post_hoc_regret_matches_incremental_accounting() {
    for r in 0..5 {
        let cfg = EnvConfig::uniform(5, 6, 400, 0.1, 0.1, 31);
        let seq = generate_realization(&cfg, r).unwrap();
        for algo in Algorithm::ALL {
            let mut pc = PolicyConfig::new(algo);
            pc.uniform_steps = 100;
            pc.phase_one_tasks = 2;
            let trace = seqbandit::run_episode(&seq, &pc, r).unwrap();
            assert_eq!(trace.arms.len(), 2400);
            let diff = (post_hoc_regret(&seq, &trace) - trace.final_regret()).abs();
            assert!(diff < 1e-9, "{algo}: {diff}");
        }
    }
}

#[test]
fn naive_pooled_mean_matches_concatenated_rewards() {
    struct Capture(Vec<Vec<f64>>);
    impl seqbandit::runner::RewardSource for Capture {
        fn draw(&mut self, _: &TaskSequence, _: usize, arm: usize) -> f64 {
            let r = 0.1 + 0.05 * (self.0[arm].len() % 7) as f64 + 0.1 * arm as f64;
            self.0[arm].push(r);
            r
        }
    }
    struct Nothing;
    impl seqbandit::runner::StepObserver for Nothing {
        fn on_step(&mut self, _: u64, _: usize, _: usize, _: f64) {}
    }
    let cfg = EnvConfig::uniform(3, 3, 40, 0.1, 0.1, 0);
    let seq = generate_realization(&cfg, 0).unwrap();
    let mut rewards = Capture(vec![Vec::new(); 3]);
    let policy = simulate(
        &seq,
        &PolicyConfig::new(Algorithm::Naive),
        &mut rewards,
        &mut Nothing,
    )
    .unwrap();
    for (k, s) in policy.pooled_stats().iter().enumerate() {
        let raw = &rewards.0[k];
        assert_eq!(s.pulls as usize, raw.len());
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        assert!((s.mean().unwrap() - mean).abs() < 1e-12);
    }
}

#[test]
fn single_realization_mean_is_the_trace() {
    let env = EnvConfig::uniform(3, 4, 300, 0.1, 0.1, 8);
    let pc = PolicyConfig::new(Algorithm::TrUcb);
    let opts = ExperimentOptions {
        realizations: 1,
        record_stride: 1,
        paired: true,
    };
    let res = run_experiment(&env, std::slice::from_ref(&pc), &opts).unwrap();
    let seq = generate_realization(&env, 0).unwrap();
    let trace = seqbandit::run_episode(&seq, &pc, 0).unwrap();
    let algo = &res.algorithms[0];
    assert_eq!(algo.mean_curve[0], 0.0);
    assert_eq!(&algo.mean_curve[1..], &trace.regret[..]);
    assert_eq!(algo.final_std, 0.0);
}

#[test]
fn final_mean_is_arithmetic_mean_of_finals() {
    let env = EnvConfig::uniform(4, 5, 500, 0.2, 0.1, 3);
    let pcs: Vec<PolicyConfig> = [Algorithm::NtUcb, Algorithm::Naive]
        .into_iter()
        .map(PolicyConfig::new)
        .collect();
    let opts = ExperimentOptions {
        realizations: 6,
        record_stride: 100,
        paired: true,
    };
    let res = run_experiment(&env, &pcs, &opts).unwrap();
    for a in &res.algorithms {
        let mut manual = 0.0;
        for r in 0..6 {
            let seq = generate_realization(&env, r).unwrap();
            manual += seqbandit::run_episode(&seq, &a.config, r)
                .unwrap()
                .final_regret();
        }
        assert!((a.final_mean - manual / 6.0).abs() < 1e-9);
        assert_eq!(a.finals.len(), 6);
    }
}
