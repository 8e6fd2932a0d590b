//! Orchestration of one configured experiment into an artifact directory.
//!
//! All artifacts are computed in memory, checked against the runtime
//! assertions and only then written, so a failing run leaves nothing behind.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::config::{parse_config, ConfigError, Experiment, RunConfig};
use super::csv::Table;
use crate::dynamics::{ac_evolve, ch_evolve, ch_evolve_modified, energy_table, pm_evolve, trajectory_table, SolverSettings, Trajectory};
use crate::error::Error;
use crate::fracop::assemble_with;
use crate::grid::{bump, Domain1D};
use crate::limits::{
    limit_s_to_ac_with, limit_sigma_to_fd_with, limit_sigma_to_pm_with, operator_identity_limit_with, operator_limit_table,
    report_table,
};
use crate::potential::PotentialParams;
use crate::spectral::{first_eigenpair, lambda1_sweep_with, sweep_table};
use crate::stationary::{self, stationary_sigma_sweep_with};

/// Per-step energy slack allowed below zero, in units of `newton_tol`.
pub const SLACK_FACTOR: f64 = 10.0;
/// Slack on the lower eigenvalue bound.
pub const SANDWICH_LOWER_TOL: f64 = 1e-9;
/// Discretisation allowance on the upper eigenvalue bound.
pub const SANDWICH_UPPER_TOL: f64 = 0.05;
/// The sandwich is asserted only for `r ≤` this and `M ≥` [`SANDWICH_MIN_M`].
pub const SANDWICH_MAX_R: f64 = 0.2;
pub const SANDWICH_MIN_M: usize = 256;
/// Relative tolerance on the stationary energy identity.
pub const IDENTITY_TOL: f64 = 1e-6;

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("solver failure: {0}")]
    Solver(#[from] Error),
    #[error("assertion failed: {0}")]
    Assertion(String),
}

impl RunError {
    /// 1 for unusable input, 2 for solver failures, 3 for failed assertions.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io { .. } => 1,
            Self::Solver(_) => 2,
            Self::Assertion(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

/// Invocation settings that live outside the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: u64,
    /// Overrides `output_dir` from the config.
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

/// Named CSV artifacts of one experiment, in write order.
pub type Artifacts = Vec<(&'static str, Table)>;

/// Reads, parses and runs a config file.
pub fn run_file(path: &Path, options: &RunOptions) -> Result<RunSummary, RunError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let text = String::from_utf8_lossy(&bytes);
    let config = parse_config(&text)?;
    run(&config, &bytes, options)
}

/// Runs `config` and writes its artifacts plus `manifest.txt`. `input` is
/// the raw config text, hashed into the manifest.
pub fn run(config: &RunConfig, input: &[u8], options: &RunOptions) -> Result<RunSummary, RunError> {
    let mut effective = config.clone();
    if let Some(out) = &options.output {
        effective.output_dir = out.clone();
    }
    let artifacts = compute(&mut effective, options.seed)?;
    let manifest = manifest(&effective, input, options.seed);
    write_all(&effective.output_dir, &manifest, &artifacts)
}

/// The manifest text: tool version, input hash and seed followed by every
/// effective parameter in config syntax.
pub fn manifest(config: &RunConfig, input: &[u8], seed: u64) -> String {
    let mut lines = vec![
        format!("tool = fracfield {}", env!("CARGO_PKG_VERSION")),
        format!("input_sha256 = {}", hex::encode(Sha256::digest(input))),
        format!("seed = {seed}"),
        format!("threads = {}", rayon::current_num_threads()),
    ];
    lines.extend(config.to_lines());
    lines.join("\n") + "\n"
}

fn write_all(dir: &Path, manifest: &str, artifacts: &Artifacts) -> Result<RunSummary, RunError> {
    let created = !dir.exists();
    let mut written = Vec::new();
    let result = (|| {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, table) in artifacts {
            let path = dir.join(name);
            written.push(path.clone());
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            table.write(io::BufWriter::new(file)).map_err(io_err(&path))?;
        }
        let path = dir.join(MANIFEST);
        written.push(path.clone());
        fs::write(&path, manifest).map_err(io_err(&path))
    })();
    match result {
        Ok(()) => Ok(RunSummary {
            output_dir: dir.to_path_buf(),
            files: artifacts.iter().map(|(n, _)| n.to_string()).chain([MANIFEST.to_string()]).collect(),
        }),
        Err(e) => {
            for path in &written {
                let _ = fs::remove_file(path);
            }
            if created {
                let _ = fs::remove_dir_all(dir);
            }
            Err(e)
        }
    }
}

fn settings(config: &RunConfig) -> Result<SolverSettings, RunError> {
    let tau = config.tau.expect("validated");
    let t = config.t_final.expect("validated");
    Ok(SolverSettings::new(tau, t)?.with_newton_tol(config.tolerances.newton_tol)?)
}

fn params(config: &RunConfig) -> Result<PotentialParams, RunError> {
    Ok(PotentialParams::with(config.p.expect("validated"), config.lambda, config.delta, 1.0)?)
}

fn check_slack(traj: &Trajectory, newton_tol: f64) -> Result<(), RunError> {
    let floor = -SLACK_FACTOR * newton_tol;
    match traj.trace.rows.iter().find(|r| r.step_slack < floor) {
        Some(row) => Err(RunError::Assertion(format!(
            "energy inequality violated at t = {}: step slack {:e} < {:e}",
            row.t, row.step_slack, floor
        ))),
        None => Ok(()),
    }
}

fn evolution(traj: &Trajectory) -> Artifacts {
    vec![("trajectory.csv", trajectory_table(traj)), ("energy.csv", energy_table(&traj.trace))]
}

/// Runs the experiment; may fill derived values (such as a computed
/// `lambda1`) into `config` so the manifest records them.
fn compute(config: &mut RunConfig, seed: u64) -> Result<Artifacts, RunError> {
    let domain = Domain1D::new(config.a, config.b, config.m)?;
    let options = config.tolerances.operator_options();
    let u0 = bump(domain, config.amplitude);
    let newton_tol = config.tolerances.newton_tol;
    let artifacts = match config.experiment {
        Experiment::EvolveCh | Experiment::EvolveChModified => {
            let op_s = assemble_with(domain, config.s.expect("validated"), options)?;
            let op_sigma = assemble_with(domain, config.sigma.expect("validated"), options)?;
            let params = params(config)?;
            let settings = settings(config)?;
            let traj = if config.experiment == Experiment::EvolveCh {
                ch_evolve(&op_s, &op_sigma, &params, &u0, &settings)?
            } else {
                let l1 = match config.lambda1 {
                    Some(l1) => l1,
                    None => first_eigenpair(&op_sigma)?.lambda1,
                };
                config.lambda1 = Some(l1);
                ch_evolve_modified(&op_s, &op_sigma, &params, l1, &u0, &settings)?
            };
            check_slack(&traj, newton_tol)?;
            evolution(&traj)
        }
        Experiment::EvolveAc => {
            let op_sigma = assemble_with(domain, config.sigma.expect("validated"), options)?;
            let traj = ac_evolve(&op_sigma, &params(config)?, &u0, &settings(config)?)?;
            check_slack(&traj, newton_tol)?;
            evolution(&traj)
        }
        Experiment::EvolvePm => {
            let op_s = assemble_with(domain, config.s.expect("validated"), options)?;
            let traj = pm_evolve(&op_s, &params(config)?, &u0, &settings(config)?)?;
            check_slack(&traj, newton_tol)?;
            evolution(&traj)
        }
        Experiment::EigenSweep => {
            let rs = config.sequence.clone().expect("validated");
            let refinements = config.refinements.clone().unwrap_or_else(|| vec![config.m]);
            config.refinements = Some(refinements.clone());
            let rows = lambda1_sweep_with(&domain, &rs, &refinements, &options)?;
            for row in rows.iter().filter(|r| r.r <= SANDWICH_MAX_R && r.m >= SANDWICH_MIN_M) {
                if !(row.lower - SANDWICH_LOWER_TOL <= row.lambda1 && row.lambda1 <= row.upper + SANDWICH_UPPER_TOL) {
                    return Err(RunError::Assertion(format!(
                        "eigenvalue sandwich violated at r = {}, M = {}: {} not in [{}, {}]",
                        row.r, row.m, row.lambda1, row.lower, row.upper
                    )));
                }
            }
            vec![("eigen_sweep.csv", sweep_table(&rows))]
        }
        Experiment::LimitSigma => {
            let s = config.s.expect("validated");
            let p = config.p.expect("validated");
            let seq = config.sequence.as_deref().expect("validated");
            let settings = settings(config)?;
            let report = if p > 2.0 {
                limit_sigma_to_pm_with(&domain, s, p, &u0, seq, &settings, &options)?
            } else {
                limit_sigma_to_fd_with(&domain, s, p, &u0, seq, &settings, &options)?
            };
            vec![("report.csv", report_table(&report))]
        }
        Experiment::LimitS => {
            let sigma = config.sigma.expect("validated");
            let p = config.p.expect("validated");
            let seq = config.sequence.as_deref().expect("validated");
            let report = limit_s_to_ac_with(&domain, sigma, p, &u0, seq, &settings(config)?, &options)?;
            vec![("report.csv", report_table(&report))]
        }
        Experiment::Stationary => {
            let sigmas = match (&config.sequence, config.sigma) {
                (Some(seq), _) => seq.clone(),
                (None, Some(sigma)) => vec![sigma],
                (None, None) => unreachable!("validated"),
            };
            let params = params(config)?;
            let rows = stationary_sigma_sweep_with(&domain, &params, &sigmas, seed, &options, config.tolerances.stat_tol)?;
            if let Some(row) = rows.iter().find(|r| !(r.identity_defect <= IDENTITY_TOL)) {
                return Err(RunError::Assertion(format!(
                    "stationary energy identity off by {:e} (relative) at sigma = {}",
                    row.identity_defect, row.sigma
                )));
            }
            vec![("stationary.csv", stationary::sweep_table(&rows))]
        }
        Experiment::OperatorLimit => {
            let rs = config.sequence.as_deref().expect("validated");
            let rows = operator_identity_limit_with(&domain, &u0, rs, &options)?;
            vec![("operator_limit.csv", operator_limit_table(&rows))]
        }
    };
    Ok(artifacts)
}
