//! Bandit policies and the single-run driver.

mod baselines;
mod session;
mod valee;
mod vase;

pub use baselines::{default_m, run_baseline_explore_exploit, ExploreExploitOutcome, ExploreExploitReport};
pub use session::{Halt, Session};
pub use valee::{alpha, default_tau, kappa, run_valee, ValeeConfig, ValeeOutcome, ValeeReport, ValeeRound};
pub use vase::{run_vase, VaseConfig, VaseOutcome, VasePhaseReport, VaseReport};

use crate::environments::{sigma_q_sq, EnvHandle, LowerBoundInstance};
use crate::error::Result;
use crate::norms::dual_exponent;
use crate::rng::RngStream;
use crate::types::{ActionSet, Algorithm, Diagnostics, ExperimentConfig, RunTrace, TraceMeta};

/// Algorithm-specific record of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmReport {
    Vase(VaseReport),
    Valee(ValeeReport),
    ExploreExploit(ExploreExploitReport),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: RunTrace,
    pub report: AlgorithmReport,
    pub diagnostics: Diagnostics,
    pub lower_bound: Option<LowerBoundInstance>,
}

/// Stream feeding rewards of run `run_index`.
pub fn env_stream(seed: u64, run_index: u64) -> RngStream {
    RngStream::new(seed, 2 * run_index)
}

/// Stream drawing the lower-bound signs of run `run_index`.
pub fn instance_stream(seed: u64, run_index: u64) -> RngStream {
    RngStream::new(seed, 2 * run_index + 1)
}

/// Builds the environment of `config` for run `run_index`.
pub fn build_env(config: &ExperimentConfig, run_index: u64) -> Result<(EnvHandle, Option<LowerBoundInstance>)> {
    config.validate()?;
    let mut xi = instance_stream(config.seed, run_index);
    let built = config
        .environment
        .build(config.horizon, env_stream(config.seed, run_index), &mut xi)?;
    Ok((built.env, built.lower_bound))
}

/// Runs the policy of `config` on a prepared environment.
pub fn run_on(config: &ExperimentConfig, env: &mut EnvHandle, meta: TraceMeta) -> Result<(RunTrace, AlgorithmReport)> {
    let (t, delta) = (config.horizon, config.delta);
    match config.algorithm {
        Algorithm::Vase | Algorithm::BaselineSe => {
            let mut cfg = if config.algorithm == Algorithm::Vase {
                VaseConfig::default()
            } else {
                VaseConfig::successive_elimination()
            };
            cfg.gamma = config.gamma;
            let out = run_vase(env, t, delta, &cfg, meta)?;
            Ok((out.trace, AlgorithmReport::Vase(out.report)))
        }
        Algorithm::Valee => {
            let known = if config.known_covariance {
                let p = match env.action_set() {
                    ActionSet::LpBall { p, .. } => *p,
                    ActionSet::Finite { .. } => 2.0,
                };
                Some(sigma_q_sq(env.model().covariance(), dual_exponent(p)?)?)
            } else {
                None
            };
            let cfg = ValeeConfig {
                known_sigma_q_sq: known,
                tau: config.tau,
                ..ValeeConfig::default()
            };
            let out = run_valee(env, t, delta, &cfg, meta)?;
            Ok((out.trace, AlgorithmReport::Valee(out.report)))
        }
        Algorithm::BaselineEe => {
            let n = match env.action_set() {
                ActionSet::Finite { actions, .. } => actions.len(),
                ActionSet::LpBall { dim, .. } => *dim,
            };
            let m = config.baseline_m.unwrap_or_else(|| default_m(t, n));
            let out = run_baseline_explore_exploit(env, t, m, meta)?;
            Ok((out.trace, AlgorithmReport::ExploreExploit(out.report)))
        }
    }
}

/// Validates `config`, builds its environment and runs its policy.
pub fn run_experiment(config: &ExperimentConfig, run_index: u64) -> Result<RunOutput> {
    let (mut env, lower_bound) = build_env(config, run_index)?;
    let diagnostics = env.diagnostics()?;
    let meta = TraceMeta {
        algorithm: config.algorithm.name().into(),
        seed: config.seed,
        run_index,
        config_hash: alloc::string::String::new(),
    };
    let (trace, report) = run_on(config, &mut env, meta)?;
    Ok(RunOutput {
        trace,
        report,
        diagnostics,
        lower_bound,
    })
}
