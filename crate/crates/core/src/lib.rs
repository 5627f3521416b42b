//! Sequential multi-task stochastic bandits with sample transfer between
//! adjacent tasks.
//!
//! A [`env::TaskSequence`] holds the ground-truth arm means of `J` tasks
//! whose means drift by at most `eps_k` between consecutive tasks. Policies
//! in [`policies`] play the tasks one after the other: NT-UCB resets at
//! every boundary, Tr-UCB carries a capped number of samples from the
//! preceding task, Tr-UCB2 estimates the drift bound on the fly
//! ([`estimator`]) and Naive-Transfer pools every sample seen in earlier
//! tasks. [`bounds`] evaluates the analytic regret bounds and [`runner`]
//! drives averaged experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod env;
pub mod error;
pub mod estimator;
pub mod policies;
pub mod runner;
mod streams;

pub use env::{
    generate_realization, generate_task_sequence, sample_reward, DriftShape, EnvConfig,
    TaskSequence,
};
pub use error::{Error, Result};
pub use policies::{Algorithm, ArmStats, Policy, PolicyConfig, TransferCap, TransferPayload};
pub use runner::{run_episode, run_experiment, ExperimentOptions, ExperimentResult, RunTrace};
