//! Command-line driver: `run` experiments, evaluate `bounds`, `dump-env`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use seqbandit::bounds::{
    nt_ucb_bound, tr_ucb2_bound, tr_ucb_bound, transfer_benefit_report, BenefitTerm, GapSummary,
    TrUcbBound,
};
use seqbandit::policies::compute_cap;
use seqbandit::{
    generate_realization, run_experiment, Algorithm, ExperimentOptions, ExperimentResult,
    PolicyConfig, TransferCap,
};

use config::{parse_list, EnvSection, ExperimentSection, RunConfigFile};
use output::EpsilonSummary;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Runtime(seqbandit::Error),
}

impl From<seqbandit::Error> for CliError {
    fn from(e: seqbandit::Error) -> Self {
        match e {
            seqbandit::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Runtime(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seqbandit",
    version,
    about = "Sequential multi-task bandit experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured algorithm over each epsilon and write curves.csv,
    /// summary.json and regret.svg.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Print the regret-bound report as JSON.
    Bounds {
        config: PathBuf,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the task-mean matrix (arms by tasks) as CSV.
    DumpEnv {
        config: PathBuf,
        /// Epsilon to generate with; required when the config lists several.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 0)]
        realization: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Clone, clap::Args)]
pub struct RunOverrides {
    /// Comma-separated epsilon values.
    #[arg(long)]
    pub eps: Option<String>,
    /// Number of realizations.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated algorithm keys (nt_ucb, tr_ucb, tr_ucb2, naive).
    #[arg(long)]
    pub algos: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_plot: bool,
}

impl RunOverrides {
    pub fn apply(&self, cfg: &mut RunConfigFile) -> Result<(), CliError> {
        if let Some(eps) = &self.eps {
            cfg.env.epsilon = parse_list(eps)?;
        }
        if let Some(n) = self.seeds {
            cfg.experiment.realizations = n;
        }
        if let Some(s) = self.seed {
            cfg.env.seed = s;
        }
        if let Some(a) = &self.algos {
            cfg.experiment.algorithms = parse_list::<Algorithm>(a)?;
        }
        if let Some(out) = &self.out {
            cfg.experiment.output_dir = Some(out.clone());
        }
        if self.no_plot {
            cfg.experiment.plot = false;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    env: &'a EnvSection,
    experiment: &'a ExperimentSection,
    policies: Vec<PolicyConfig>,
    record_steps: &'a [u64],
    results: Vec<EpsilonSummary>,
}

/// Runs the configured experiments and writes the output files. Returns the
/// output directory.
pub fn cmd_run(path: &Path, overrides: &RunOverrides) -> Result<PathBuf, CliError> {
    let mut cfg = RunConfigFile::load(path)?;
    overrides.apply(&mut cfg)?;
    cfg.experiment.output_dir = Some(cfg.output_dir());
    cfg.validate()?;
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let options = ExperimentOptions {
        realizations: cfg.experiment.realizations,
        record_stride: cfg.experiment.record_stride,
        paired: cfg.experiment.paired,
    };
    let policies = cfg.policies();
    let mut runs: Vec<(f64, ExperimentResult)> = Vec::new();
    for &eps in &cfg.env.epsilon {
        let result = run_experiment(&cfg.env.env_config(eps), &policies, &options)?;
        runs.push((eps, result));
    }

    let curves_path = dir.join("curves.csv");
    let mut w = csv::Writer::from_path(&curves_path)?;
    w.write_record(output::CURVE_HEADER)?;
    for (eps, result) in &runs {
        output::write_curves(&mut w, *eps, result)?;
    }
    w.flush().map_err(io_err(&curves_path))?;

    let summary = RunSummary {
        env: &cfg.env,
        experiment: &cfg.experiment,
        policies,
        record_steps: &runs[0].1.steps,
        results: runs
            .iter()
            .map(|(e, r)| EpsilonSummary::new(*e, r))
            .collect(),
    };
    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(&summary_path, text + "\n").map_err(io_err(&summary_path))?;

    if cfg.experiment.plot {
        let svg_path = dir.join("regret.svg");
        fs::write(&svg_path, output::regret_svg(&runs)).map_err(io_err(&svg_path))?;
    }
    Ok(dir)
}

#[derive(Debug, Serialize)]
pub struct BoundReport {
    /// Generating epsilon, or the epsilon assumed for a gap table.
    pub epsilon: f64,
    /// Realization the gaps came from; `None` for an explicit table.
    pub realization: Option<u64>,
    pub task_lengths: Vec<u64>,
    pub gaps: GapSummary,
    pub caps: Vec<TransferCap>,
    pub nt_ucb: f64,
    pub tr_ucb: TrUcbBound,
    pub tr_ucb2: f64,
    pub benefit: Vec<BenefitTerm>,
}

#[derive(Debug, Serialize)]
pub struct BoundReportFile {
    pub reports: Vec<BoundReport>,
}

fn bound_report(
    cfg: &RunConfigFile,
    gaps: GapSummary,
    lengths: Vec<u64>,
    eps: f64,
    realization: Option<u64>,
) -> Result<BoundReport, CliError> {
    let nt = cfg.policy(Algorithm::NtUcb);
    let tr = cfg.policy(Algorithm::TrUcb);
    let tr2 = cfg.policy(Algorithm::TrUcb2);
    let arms = gaps.arms();
    let arm_eps = tr.eps.clone().unwrap_or_else(|| vec![eps; arms]);
    if arm_eps.len() != arms {
        return Err(CliError::Config(format!(
            "tr_ucb.eps has {} entries for {arms} arms",
            arm_eps.len()
        )));
    }
    let caps = arm_eps
        .iter()
        .map(|&e| compute_cap(e, tr.eta))
        .collect::<seqbandit::Result<Vec<_>>>()?;
    Ok(BoundReport {
        epsilon: eps,
        realization,
        nt_ucb: nt_ucb_bound(&gaps, &lengths, nt.alpha)?,
        tr_ucb: tr_ucb_bound(&gaps, &lengths, tr.alpha, tr.eta, &caps)?,
        tr_ucb2: tr_ucb2_bound(
            &gaps,
            &lengths,
            tr2.alpha,
            tr2.eta,
            tr2.uniform_steps,
            tr2.phase_one_tasks,
            tr2.delta,
            arms,
        )?,
        benefit: transfer_benefit_report(&gaps, &lengths, tr.alpha, tr.eta, &caps)?,
        task_lengths: lengths,
        gaps,
        caps,
    })
}

/// Bound reports for an explicit `[bounds]` gap table, or for one generated
/// realization per configured epsilon.
pub fn bounds_report(cfg: &RunConfigFile) -> Result<BoundReportFile, CliError> {
    let section = cfg.bounds.clone();
    let reports = match section.as_ref().and_then(|b| b.gaps.clone()) {
        Some(table) => {
            let b = section.as_ref().expect("gaps imply a bounds section");
            let gaps = GapSummary::from_table(table)?;
            let lengths = b.task_lengths.clone().unwrap_or_else(|| cfg.env.lengths());
            let eps = b
                .epsilon
                .or_else(|| cfg.env.epsilon.first().copied())
                .ok_or_else(|| CliError::Config("bounds.epsilon is required".into()))?;
            vec![bound_report(cfg, gaps, lengths, eps, None)?]
        }
        None => {
            let r = section.map_or(0, |b| b.realization);
            cfg.env
                .epsilon
                .iter()
                .map(|&eps| {
                    let seq = generate_realization(&cfg.env.env_config(eps), r)?;
                    bound_report(
                        cfg,
                        GapSummary::from_sequence(&seq),
                        cfg.env.lengths(),
                        eps,
                        Some(r),
                    )
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(BoundReportFile { reports })
}

pub fn cmd_bounds(path: &Path, out: Option<&Path>) -> Result<BoundReportFile, CliError> {
    let cfg = RunConfigFile::load(path)?;
    let report = bounds_report(&cfg)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(p) => fs::write(p, &text).map_err(io_err(p))?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(io_err(Path::new("<stdout>")))?,
    }
    Ok(report)
}

pub fn cmd_dump_env(
    path: &Path,
    eps: Option<f64>,
    realization: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = RunConfigFile::load(path)?;
    let eps = match (eps, cfg.env.epsilon.as_slice()) {
        (Some(e), _) => e,
        (None, [e]) => *e,
        (None, _) => {
            return Err(CliError::Config(
                "config lists several epsilon values; pick one with --eps".into(),
            ))
        }
    };
    let seq = generate_realization(&cfg.env.env_config(eps), realization)?;
    match out {
        Some(p) => {
            let mut w = csv::Writer::from_path(p)?;
            output::write_means(&mut w, &seq)?;
            w.flush().map_err(io_err(p))?;
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout());
            output::write_means(&mut w, &seq)?;
            w.flush().map_err(io_err(Path::new("<stdout>")))?;
        }
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, overrides } => {
            let dir = cmd_run(&config, &overrides)?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Bounds { config, out } => {
            cmd_bounds(&config, out.as_deref())?;
        }
        Command::DumpEnv {
            config,
            eps,
            realization,
            out,
        } => cmd_dump_env(&config, eps, realization, out.as_deref())?,
    }
    Ok(())
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
