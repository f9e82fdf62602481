//! Variance-aware successive elimination over a finite action set, and its
//! variance-blind ablation.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DVector;

use super::session::{finish, Session, Step};
use crate::design::{frank_wolfe_design, DesignConfig};
use crate::environments::EnvHandle;
use crate::error::{Error, Result};
use crate::estimation::{estimate_action_variance, SrConfig, WlsAccumulator};
use crate::linalg::span_basis;
use crate::norms::dot;
use crate::types::{ActionSet, Phase, RunTrace, TraceMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct VaseConfig {
    pub design: DesignConfig,
    pub sr: SrConfig,
    /// Fixed variance-estimate confidence for every phase.
    pub gamma: Option<f64>,
    /// `false` gives successive elimination: `σ̂ ≡ 1`, no variance probes,
    /// unweighted least squares.
    pub variance_aware: bool,
    /// Multiplier `c` in `T_ℓ(a) = ⌈c·d/ε_ℓ² · ln(1/δ_ℓ) · σ̂²(a) · π(a)⌉`.
    pub allocation_constant: f64,
}

impl Default for VaseConfig {
    fn default() -> Self {
        Self {
            design: DesignConfig::default(),
            sr: SrConfig::default(),
            gamma: None,
            variance_aware: true,
            allocation_constant: 49.0,
        }
    }
}

impl VaseConfig {
    pub fn successive_elimination() -> Self {
        Self {
            variance_aware: false,
            ..Self::default()
        }
    }
}

/// What happened in one elimination phase. Indices are global action indices.
#[derive(Debug, Clone, PartialEq)]
pub struct VasePhaseReport {
    pub ell: u32,
    pub active: Vec<usize>,
    /// Dimension of the span of the active set.
    pub rank: usize,
    pub eps: f64,
    pub delta_ell: f64,
    pub gamma: f64,
    pub design: Vec<(usize, f64)>,
    pub design_g: f64,
    pub sigma_hat_sq: Vec<(usize, f64)>,
    pub allocation: Vec<(usize, u64)>,
    pub variance_steps: u64,
    pub explore_steps: u64,
    /// `None` when the horizon cut the phase short.
    pub theta_hat: Option<Vec<f64>>,
    pub survivors: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaseReport {
    pub phases: Vec<VasePhaseReport>,
    /// Arm played until the horizon once it was the only survivor.
    pub committed: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaseOutcome {
    pub trace: RunTrace,
    pub report: VaseReport,
}

/// Coordinates of the active actions in an orthonormal basis of their span;
/// the identity when they span the whole space.
fn project(actions: &[Vec<f64>], active: &[usize], dim: usize) -> Result<(usize, Vec<Vec<f64>>)> {
    let basis = span_basis(active.iter().map(|&i| actions[i].as_slice()), dim);
    let r = basis.ncols();
    if r == 0 {
        return Err(Error::Degenerate("active actions are all zero"));
    }
    if r == dim {
        return Ok((r, active.iter().map(|&i| actions[i].clone()).collect()));
    }
    let bt = basis.transpose();
    let proj = active
        .iter()
        .map(|&i| {
            (&bt * DVector::from_column_slice(&actions[i]))
                .iter()
                .copied()
                .collect()
        })
        .collect();
    Ok((r, proj))
}

pub fn run_vase(
    env: &mut EnvHandle,
    horizon: u64,
    delta: f64,
    cfg: &VaseConfig,
    meta: TraceMeta,
) -> Result<VaseOutcome> {
    if horizon < 1 {
        return Err(Error::Domain {
            what: "horizon",
            value: 0.0,
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
        });
    }
    let actions: Vec<Vec<f64>> = match env.action_set() {
        ActionSet::Finite { actions, .. } => actions.clone(),
        ActionSet::LpBall { .. } => return Err(Error::Infeasible("elimination needs a finite action set".into())),
    };
    let dim = env.dim();
    let k = actions.len() as f64;
    let mut session = Session::new(env, horizon, meta);
    let mut report = VaseReport {
        phases: Vec::new(),
        committed: None,
    };
    let body = run_phases(&mut session, &actions, dim, k, delta, cfg, &mut report);
    finish(body)?;
    Ok(VaseOutcome {
        trace: session.into_trace(),
        report,
    })
}

fn run_phases(
    session: &mut Session<'_>,
    actions: &[Vec<f64>],
    dim: usize,
    k: f64,
    delta: f64,
    cfg: &VaseConfig,
    report: &mut VaseReport,
) -> Step<()> {
    let mut active: Vec<usize> = (0..actions.len()).collect();
    let d = dim as f64;
    let mut ell: u32 = 0;
    loop {
        if active.is_empty() {
            return Err(Error::Internal("elimination emptied the active set").into());
        }
        if active.len() == 1 {
            report.committed = Some(active[0]);
            loop {
                session.pull_index(active[0], Phase::Commit)?;
            }
        }
        ell += 1;
        let l = ell as f64;
        let eps = libm::ldexp(1.0, -(ell as i32));
        let delta_ell = delta / (k * l * (l + 1.0));
        let gamma = cfg.gamma.unwrap_or(2.0 * delta / (l * (l + 1.0) * d * (d + 1.0)));

        let (rank, proj) = project(actions, &active, dim)?;
        let design = frank_wolfe_design(&proj, 2.0 * rank as f64, &cfg.design)?;
        let support: Vec<(usize, f64)> = design.design.support().to_vec();

        report.phases.push(VasePhaseReport {
            ell,
            active: active.clone(),
            rank,
            eps,
            delta_ell,
            gamma,
            design: support.iter().map(|&(i, w)| (active[i], w)).collect(),
            design_g: design.g,
            sigma_hat_sq: Vec::new(),
            allocation: Vec::new(),
            variance_steps: 0,
            explore_steps: 0,
            theta_hat: None,
            survivors: None,
        });
        let phase_idx = report.phases.len() - 1;

        let mut sigma_hat = vec![1.0; support.len()];
        if cfg.variance_aware {
            for (slot, &(i, _)) in support.iter().enumerate() {
                let arm = active[i];
                let start = session.elapsed();
                let est = estimate_action_variance(
                    || session.pull_index(arm, Phase::Variance(ell)),
                    eps,
                    gamma,
                    0.5,
                    &cfg.sr,
                );
                let rep = &mut report.phases[phase_idx];
                rep.variance_steps += session.elapsed() - start;
                let est = est?;
                sigma_hat[slot] = est.value;
                rep.sigma_hat_sq.push((arm, est.value));
            }
        }

        let scale = cfg.allocation_constant * rank as f64 / (eps * eps) * libm::log(1.0 / delta_ell);
        let alloc: Vec<u64> = support
            .iter()
            .zip(&sigma_hat)
            .map(|(&(_, w), &s)| libm::ceil(scale * s * w) as u64)
            .collect();
        report.phases[phase_idx].allocation = support.iter().zip(&alloc).map(|(&(i, _), &n)| (active[i], n)).collect();

        let mut wls = WlsAccumulator::new(rank);
        for ((&(i, _), &n), &s) in support.iter().zip(&alloc).zip(&sigma_hat) {
            let arm = active[i];
            for _ in 0..n {
                let r = session.pull_index(arm, Phase::Explore(ell));
                if r.is_ok() {
                    report.phases[phase_idx].explore_steps += 1;
                }
                wls.add(&proj[i], 1.0 / s, r?)?;
            }
        }
        let theta_proj = wls.solve()?;
        let values: Vec<f64> = proj.iter().map(|a| dot(a, &theta_proj)).collect();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let survivors: Vec<usize> = active
            .iter()
            .zip(&values)
            .filter(|&(_, &v)| best - v <= 2.0 * eps)
            .map(|(&a, _)| a)
            .collect();

        let theta_full = if rank == dim {
            theta_proj
        } else {
            let basis = span_basis(active.iter().map(|&i| actions[i].as_slice()), dim);
            let t: DVector<f64> = &basis * DVector::from_vec(theta_proj);
            t.iter().copied().collect()
        };
        let rep = &mut report.phases[phase_idx];
        rep.theta_hat = Some(theta_full);
        rep.survivors = Some(survivors.clone());
        active = survivors;
    }
}
