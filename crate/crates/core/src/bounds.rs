//! Closed-form regret upper bounds for NT-UCB, Tr-UCB and Tr-UCB2, and the
//! pairwise benefit-of-transfer comparison.
//!
//! Gap tables are indexed `[arm][task]`. Terms involving `1/gap^2` are only
//! defined for positive gaps; they are reported as `None` otherwise and
//! contribute nothing to indicator-gated sums.

use serde::Serialize;

use crate::env::TaskSequence;
use crate::error::{config_err, Result};
use crate::policies::TransferCap;

/// Per-arm gaps over all tasks with their extremes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub gaps: Vec<Vec<f64>>,
    /// Largest gap of each arm over all tasks.
    pub max: Vec<f64>,
    /// Smallest positive gap of each arm, if any task has one.
    pub min_positive: Vec<Option<f64>>,
}

impl GapSummary {
    pub fn from_table(gaps: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = gaps.first() else {
            return config_err("gap table has no arms");
        };
        let tasks = first.len();
        if tasks == 0 {
            return config_err("gap table has no tasks");
        }
        for (k, row) in gaps.iter().enumerate() {
            if row.len() != tasks {
                return config_err(format!(
                    "gap row {k} has {} tasks, expected {tasks}",
                    row.len()
                ));
            }
            if let Some(g) = row.iter().find(|g| !(**g >= 0.0)) {
                return config_err(format!("gap {g} of arm {k} is negative"));
            }
        }
        let max = gaps
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect();
        let min_positive = gaps
            .iter()
            .map(|row| {
                row.iter()
                    .copied()
                    .filter(|&g| g > 0.0)
                    .fold(None, |acc: Option<f64>, g| {
                        Some(acc.map_or(g, |a| a.min(g)))
                    })
            })
            .collect();
        Ok(Self {
            gaps,
            max,
            min_positive,
        })
    }

    pub fn from_sequence(seq: &TaskSequence) -> Self {
        Self::from_table(seq.gap_table()).expect("generated gaps are well formed")
    }

    pub fn arms(&self) -> usize {
        self.gaps.len()
    }

    pub fn tasks(&self) -> usize {
        self.gaps[0].len()
    }
}

fn check_lengths(gaps: &GapSummary, task_lengths: &[u64]) -> Result<()> {
    if task_lengths.len() != gaps.tasks() {
        return config_err(format!(
            "{} task lengths for {} tasks",
            task_lengths.len(),
            gaps.tasks()
        ));
    }
    if task_lengths.contains(&0) {
        return config_err("task lengths must be positive");
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 2.0) {
        return config_err(format!("alpha = {alpha} must exceed 2"));
    }
    Ok(())
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 8.0) {
        return config_err(format!("eta = {eta} must exceed 8"));
    }
    Ok(())
}

/// Sum over arms of the indicator-gated `2 alpha ln(n_j) / gap` plus
/// `alpha/(alpha-2)` times the total gap.
pub fn nt_ucb_bound(gaps: &GapSummary, task_lengths: &[u64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_lengths(gaps, task_lengths)?;
    let factor = alpha / (alpha - 2.0);
    Ok(gaps
        .gaps
        .iter()
        .map(|row| {
            let log_terms: f64 = row
                .iter()
                .zip(task_lengths)
                .filter(|(&g, _)| g > 0.0)
                .map(|(&g, &n)| 2.0 * alpha * (n as f64).ln() / g)
                .sum();
            log_terms + factor * row.iter().sum::<f64>()
        })
        .sum())
}

/// `2 alpha ln(n) / gap^2`, or `None` for a zero gap.
pub fn u_single(gap: f64, length: u64, alpha: f64) -> Option<f64> {
    (gap > 0.0).then(|| 2.0 * alpha * (length as f64).ln() / (gap * gap))
}

/// `2 eta ln(B + n) / gap^2`, or `None` for a zero gap.
pub fn u_transfer(gap: f64, length: u64, cap: f64, eta: f64) -> Option<f64> {
    (gap > 0.0).then(|| 2.0 * eta * (cap + length as f64).ln() / (gap * gap))
}

/// Cap value used inside the bound for `task`. The transfer-all sentinel
/// becomes the preceding task's length (zero for the first task).
fn bound_cap(cap: TransferCap, task: usize, task_lengths: &[u64]) -> f64 {
    match cap {
        TransferCap::Finite(b) => b,
        TransferCap::All => {
            if task == 0 {
                0.0
            } else {
                task_lengths[task - 1] as f64
            }
        }
    }
}

/// `U`, `V` and `min(U, V)` for one pair of consecutive tasks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairTerms {
    pub pair: usize,
    /// Zero-based indices of the two tasks.
    pub tasks: [usize; 2],
    pub u: f64,
    pub v: f64,
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmTerms {
    pub arm: usize,
    pub gap_max: f64,
    pub pairs: Vec<PairTerms>,
    pub w: f64,
    pub constant: f64,
    /// `gap_max * (sum of pair minima + w + constant)`.
    pub total: f64,
}

/// Tr-UCB bound with its per-arm breakdown and `u` tables (`[arm][task]`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrUcbBound {
    pub total: f64,
    pub arms: Vec<ArmTerms>,
    pub u1: Vec<Vec<Option<f64>>>,
    pub u2: Vec<Vec<Option<f64>>>,
}

/// Indicator-gated `u` values, `[arm][task]`.
type UTable = Vec<Vec<Option<f64>>>;

fn u_tables(
    gaps: &GapSummary,
    task_lengths: &[u64],
    alpha: f64,
    eta: f64,
    caps: &[TransferCap],
) -> (UTable, UTable) {
    let u1 = gaps
        .gaps
        .iter()
        .map(|row| {
            row.iter()
                .zip(task_lengths)
                .map(|(&g, &n)| u_single(g, n, alpha))
                .collect()
        })
        .collect();
    let u2 = gaps
        .gaps
        .iter()
        .zip(caps)
        .map(|(row, &cap)| {
            row.iter()
                .enumerate()
                .map(|(j, &g)| u_transfer(g, task_lengths[j], bound_cap(cap, j, task_lengths), eta))
                .collect()
        })
        .collect();
    (u1, u2)
}

/// Pair terms for consecutive tasks `(2l, 2l+1)` while both exist.
fn pair_terms(
    u1: &[Option<f64>],
    u2: &[Option<f64>],
    cap: TransferCap,
    task_lengths: &[u64],
) -> Vec<PairTerms> {
    (0..u1.len() / 2)
        .map(|l| {
            let (a, b) = (2 * l, 2 * l + 1);
            let u = u1[a].unwrap_or(0.0) + u1[b].unwrap_or(0.0);
            let sum2 = u2[a].unwrap_or(0.0) + u2[b].unwrap_or(0.0);
            let largest = u2[a].unwrap_or(0.0).max(u2[b].unwrap_or(0.0));
            let v = sum2 - largest.min(bound_cap(cap, b, task_lengths));
            PairTerms {
                pair: l,
                tasks: [a, b],
                u,
                v,
                min: u.min(v),
            }
        })
        .collect()
}

/// Tr-UCB regret bound for the given per-arm caps.
pub fn tr_ucb_bound(
    gaps: &GapSummary,
    task_lengths: &[u64],
    alpha: f64,
    eta: f64,
    caps: &[TransferCap],
) -> Result<TrUcbBound> {
    check_alpha(alpha)?;
    check_eta(eta)?;
    check_lengths(gaps, task_lengths)?;
    if caps.len() != gaps.arms() {
        return config_err(format!("{} caps for {} arms", caps.len(), gaps.arms()));
    }
    let tasks = gaps.tasks();
    let constant = tasks as f64 * (alpha / (alpha - 2.0) + 8.0 / (eta - 8.0));
    let (u1, u2) = u_tables(gaps, task_lengths, alpha, eta, caps);
    let arms: Vec<ArmTerms> = (0..gaps.arms())
        .map(|k| {
            let pairs = pair_terms(&u1[k], &u2[k], caps[k], task_lengths);
            let last = tasks - 1;
            let w = if tasks % 2 == 1 {
                match (u1[k][last], u2[k][last]) {
                    (Some(a), Some(b)) => a.min(b),
                    _ => 0.0,
                }
            } else {
                0.0
            };
            let gap_max = gaps.max[k];
            let inner: f64 = pairs.iter().map(|p| p.min).sum::<f64>() + w + constant;
            ArmTerms {
                arm: k,
                gap_max,
                pairs,
                w,
                constant,
                total: gap_max * inner,
            }
        })
        .collect();
    Ok(TrUcbBound {
        total: arms.iter().map(|a| a.total).sum(),
        arms,
        u1,
        u2,
    })
}

/// Tr-UCB2 regret bound. `delta = 0` is accepted and removes the
/// confidence-failure term.
#[allow(clippy::too_many_arguments)]
pub fn tr_ucb2_bound(
    gaps: &GapSummary,
    task_lengths: &[u64],
    alpha: f64,
    eta: f64,
    uniform_steps: u64,
    phase_one_tasks: usize,
    delta: f64,
    arms: usize,
) -> Result<f64> {
    check_alpha(alpha)?;
    check_eta(eta)?;
    check_lengths(gaps, task_lengths)?;
    if !(0.0..1.0).contains(&delta) {
        return config_err(format!("delta = {delta} must lie in [0, 1)"));
    }
    if arms == 0 {
        return config_err("arm count must be positive");
    }
    let tasks = gaps.tasks() as f64;
    let total_steps: u64 = task_lengths.iter().sum();
    let uniform = uniform_steps as f64 * phase_one_tasks as f64 / arms as f64;
    let constant = tasks * (alpha / (alpha - 2.0) + 8.0 / (eta - 8.0));
    let failure = total_steps as f64 * tasks * delta;
    Ok(gaps
        .gaps
        .iter()
        .zip(&gaps.max)
        .map(|(row, &gap_max)| {
            let u_sum: f64 = row
                .iter()
                .zip(task_lengths)
                .filter_map(|(&g, &n)| u_single(g, n, alpha))
                .sum();
            gap_max * (uniform + u_sum + constant + failure)
        })
        .sum())
}

/// Benefit-of-transfer terms of one arm and task pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenefitTerm {
    pub arm: usize,
    pub pair: usize,
    pub a: f64,
    pub e: f64,
    pub f: f64,
    /// `min(a, e) < f`.
    pub beneficial: bool,
}

/// Compares `min(A, E)` with `F` for every arm and pair of tasks.
pub fn transfer_benefit_report(
    gaps: &GapSummary,
    task_lengths: &[u64],
    alpha: f64,
    eta: f64,
    caps: &[TransferCap],
) -> Result<Vec<BenefitTerm>> {
    let bound = tr_ucb_bound(gaps, task_lengths, alpha, eta, caps)?;
    let mut out = Vec::new();
    for arm in &bound.arms {
        let k = arm.arm;
        for p in &arm.pairs {
            let f: f64 = p
                .tasks
                .iter()
                .filter_map(|&j| bound.u1[k][j].map(|u| u * gaps.gaps[k][j]))
                .sum();
            let a = arm.gap_max * p.u;
            let e = arm.gap_max * p.v;
            out.push(BenefitTerm {
                arm: k,
                pair: p.pair,
                a,
                e,
                f,
                beneficial: a.min(e) < f,
            });
        }
    }
    Ok(out)
}
