//! TOML run configuration.
//!
//! ```toml
//! [env]
//! arms = 5
//! tasks = 40
//! task_length = 2000
//! epsilon = [0.05, 0.1]
//! reward_width = 0.1
//! seed = 2024
//!
//! [experiment]
//! realizations = 20
//! record_stride = 1000
//! algorithms = ["nt_ucb", "tr_ucb", "tr_ucb2", "naive"]
//!
//! [tr_ucb2]
//! uniform_steps = 400
//! phase_one_tasks = 2
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use seqbandit::{Algorithm, DriftShape, EnvConfig, PolicyConfig};

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "SEQBANDIT_OUT";
const DEFAULT_OUT_DIR: &str = "seqbandit-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub nt_ucb: AlgorithmSection,
    #[serde(default)]
    pub tr_ucb: AlgorithmSection,
    #[serde(default)]
    pub tr_ucb2: AlgorithmSection,
    #[serde(default)]
    pub naive: AlgorithmSection,
    pub bounds: Option<BoundsSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub arms: usize,
    pub tasks: usize,
    pub task_length: u64,
    /// Overrides `tasks` and `task_length` when present.
    pub task_lengths: Option<Vec<u64>>,
    /// One experiment per value; every arm shares it.
    pub epsilon: Vec<f64>,
    pub reward_width: f64,
    pub seed: u64,
    pub drift: DriftShape,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            arms: 5,
            tasks: 40,
            task_length: 2000,
            task_lengths: None,
            epsilon: vec![0.05, 0.1, 0.2, 0.3, 0.4],
            reward_width: 0.1,
            seed: 2024,
            drift: DriftShape::Clipped,
        }
    }
}

impl EnvSection {
    pub fn lengths(&self) -> Vec<u64> {
        self.task_lengths
            .clone()
            .unwrap_or_else(|| vec![self.task_length; self.tasks])
    }

    pub fn env_config(&self, eps: f64) -> EnvConfig {
        EnvConfig {
            arms: self.arms,
            task_lengths: self.lengths(),
            eps: vec![eps; self.arms],
            reward_width: self.reward_width,
            master_seed: self.seed,
            drift: self.drift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub realizations: u64,
    pub record_stride: u64,
    pub paired: bool,
    pub algorithms: Vec<Algorithm>,
    pub output_dir: Option<PathBuf>,
    pub plot: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            realizations: 20,
            record_stride: 1000,
            paired: true,
            algorithms: Algorithm::ALL.to_vec(),
            output_dir: None,
            plot: true,
        }
    }
}

/// Per-algorithm parameters. Unset fields take the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSection {
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    /// Known per-arm similarity bounds (Tr-UCB only).
    pub eps: Option<Vec<f64>>,
    pub uniform_steps: Option<u64>,
    pub phase_one_tasks: Option<usize>,
    pub delta: Option<f64>,
}

/// Explicit gap table for `bounds`, indexed `[arm][task]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub gaps: Option<Vec<Vec<f64>>>,
    pub task_lengths: Option<Vec<u64>>,
    /// Similarity bound used for the Tr-UCB cap with a gap table.
    pub epsilon: Option<f64>,
    /// Realization whose generated sequence supplies the gaps otherwise.
    #[serde(default)]
    pub realization: u64,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn section(&self, algorithm: Algorithm) -> &AlgorithmSection {
        match algorithm {
            Algorithm::NtUcb => &self.nt_ucb,
            Algorithm::TrUcb => &self.tr_ucb,
            Algorithm::TrUcb2 => &self.tr_ucb2,
            Algorithm::Naive => &self.naive,
        }
    }

    pub fn policy(&self, algorithm: Algorithm) -> PolicyConfig {
        let s = self.section(algorithm);
        let mut p = PolicyConfig::new(algorithm);
        if let Some(v) = s.alpha {
            p.alpha = v;
        }
        if let Some(v) = s.eta {
            p.eta = v;
        }
        p.eps = s.eps.clone();
        if let Some(v) = s.uniform_steps {
            p.uniform_steps = v;
        }
        if let Some(v) = s.phase_one_tasks {
            p.phase_one_tasks = v;
        }
        if let Some(v) = s.delta {
            p.delta = v;
        }
        p
    }

    pub fn policies(&self) -> Vec<PolicyConfig> {
        self.experiment
            .algorithms
            .iter()
            .map(|&a| self.policy(a))
            .collect()
    }

    /// Output directory: the config value, else `$SEQBANDIT_OUT`, else a
    /// fixed default.
    pub fn output_dir(&self) -> PathBuf {
        self.experiment
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_VAR).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.env.epsilon.is_empty() {
            return Err(CliError::Config(
                "env.epsilon must list at least one value".into(),
            ));
        }
        if self.experiment.algorithms.is_empty() {
            return Err(CliError::Config("experiment.algorithms is empty".into()));
        }
        for &eps in &self.env.epsilon {
            self.env.env_config(eps).validate()?;
        }
        for p in self.policies() {
            p.validate(self.env.arms)?;
        }
        Ok(())
    }
}

/// Parses a comma-separated list such as `0.05,0.1`.
pub fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| CliError::Config(format!("bad list entry '{s}': {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfigFile::parse("").unwrap();
        assert_eq!(cfg.env.arms, 5);
        assert_eq!(cfg.experiment.algorithms.len(), 4);
        assert_eq!(cfg.policy(Algorithm::TrUcb2).uniform_steps, 2000);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfigFile::parse("[env]\narms = 3\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn sections_override_policy_defaults() {
        let cfg = RunConfigFile::parse(
            "[tr_ucb2]\nuniform_steps = 400\nphase_one_tasks = 2\n[tr_ucb]\neta = 9.0\n",
        )
        .unwrap();
        let p = cfg.policy(Algorithm::TrUcb2);
        assert_eq!((p.uniform_steps, p.phase_one_tasks), (400, 2));
        assert_eq!(cfg.policy(Algorithm::TrUcb).eta, 9.0);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<f64>("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert!(parse_list::<f64>("0.1,x").is_err());
        let algos: Vec<Algorithm> = parse_list("nt_ucb,tr_ucb").unwrap();
        assert_eq!(algos, vec![Algorithm::NtUcb, Algorithm::TrUcb]);
    }
}
