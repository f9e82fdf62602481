//! Variance-aware explore-then-exploit on an ℓp ball: doubling norm
//! estimation with median-of-means coordinates, then play the plug-in optimum.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::session::{finish, Session, Step};
use crate::environments::{best_action_lp, EnvHandle};
use crate::error::{Error, Result};
use crate::estimation::{estimate_action_variance, median_of_means, SrConfig};
use crate::norms::{dual_exponent, lp_norm};
use crate::types::{ActionSet, Phase, RunTrace, TraceMeta};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValeeConfig {
    pub sr: SrConfig,
    /// Known `σ_q²`; skips variance estimation.
    pub known_sigma_q_sq: Option<f64>,
    /// Variance-probe threshold; defaults to [`default_tau`].
    pub tau: Option<f64>,
}

/// `τ = d^{1/3 − 2/(3q)} · ln^{1/3}(d/δ) / (T q)^{1/3}`.
pub fn default_tau(d: usize, q: f64, horizon: u64, delta: f64) -> f64 {
    let d = d as f64;
    libm::pow(d, 1.0 / 3.0 - 2.0 / (3.0 * q)) * libm::cbrt(libm::log(d / delta)) / libm::cbrt(horizon as f64 * q)
}

/// `κ = ⌈8 ln(d · ln T / δ)⌉`, with `ln T` floored at 1 so tiny horizons stay defined.
pub fn kappa(d: usize, horizon: u64, delta: f64) -> u32 {
    let log_t = libm::log(horizon as f64).max(1.0);
    (libm::ceil(8.0 * libm::log(d as f64 * log_t / delta)) as u32).max(1)
}

/// `α = (dκ / (T q σ̂_q²))^{1/4}`.
pub fn alpha(d: usize, kappa: u32, horizon: u64, q: f64, sigma_q_sq: f64) -> f64 {
    libm::pow(d as f64 * kappa as f64 / (horizon as f64 * q * sigma_q_sq), 0.25)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValeeRound {
    pub j: u32,
    pub n_hat: f64,
    pub eps_hat: f64,
    /// Pulls of each basis vector per block.
    pub t_exp: u64,
    /// `None` when the horizon cut the round short.
    pub theta_hat: Option<Vec<f64>>,
    pub norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValeeReport {
    pub q: f64,
    pub kappa: u32,
    pub alpha: f64,
    pub tau: Option<f64>,
    pub sigma_hat_sq: Vec<f64>,
    pub sigma_q_sq_hat: f64,
    pub variance_steps: u64,
    pub rounds: Vec<ValeeRound>,
    pub exploit_reached: bool,
    pub exploit_action: Option<Vec<f64>>,
    /// `‖θ̂‖_q` was zero at exploit entry and `e_1` was played instead.
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValeeOutcome {
    pub trace: RunTrace,
    pub report: ValeeReport,
}

fn basis(d: usize) -> Vec<Arc<[f64]>> {
    (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            Arc::from(e)
        })
        .collect()
}

pub fn run_valee(
    env: &mut EnvHandle,
    horizon: u64,
    delta: f64,
    cfg: &ValeeConfig,
    meta: TraceMeta,
) -> Result<ValeeOutcome> {
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
    let (d, p) = match env.action_set() {
        ActionSet::LpBall { dim, p } => (*dim, *p),
        ActionSet::Finite { .. } => return Err(Error::Infeasible("valee needs an lp ball".into())),
    };
    let q = dual_exponent(p)?;
    let tau = match (cfg.known_sigma_q_sq, cfg.tau) {
        (Some(s), _) => {
            if !(s >= 0.0) {
                return Err(Error::Domain {
                    what: "known sigma_q^2",
                    value: s,
                });
            }
            None
        }
        (None, Some(t)) => Some(t),
        (None, None) => Some(default_tau(d, q, horizon, delta).min(2.0)),
    };
    let k = kappa(d, horizon, delta);
    let mut report = ValeeReport {
        q,
        kappa: k,
        alpha: f64::NAN,
        tau,
        sigma_hat_sq: Vec::new(),
        sigma_q_sq_hat: cfg.known_sigma_q_sq.unwrap_or(f64::NAN),
        variance_steps: 0,
        rounds: Vec::new(),
        exploit_reached: false,
        exploit_action: None,
        fallback_used: false,
    };
    let mut session = Session::new(env, horizon, meta);
    let body = run_body(&mut session, d, q, horizon, delta, cfg, &mut report);
    finish(body)?;
    Ok(ValeeOutcome {
        trace: session.into_trace(),
        report,
    })
}

fn run_body(
    session: &mut Session<'_>,
    d: usize,
    q: f64,
    horizon: u64,
    delta: f64,
    cfg: &ValeeConfig,
    report: &mut ValeeReport,
) -> Step<()> {
    let e = basis(d);
    if let Some(tau) = report.tau {
        for ei in &e {
            let start = session.elapsed();
            let est = estimate_action_variance(
                || session.pull_vector(ei, Phase::Variance(0)),
                tau,
                delta / d as f64,
                0.5,
                &cfg.sr,
            );
            report.variance_steps += session.elapsed() - start;
            report.sigma_hat_sq.push(est?.value);
        }
        let stds: Vec<f64> = report.sigma_hat_sq.iter().map(|&s| libm::sqrt(s)).collect();
        let n = lp_norm(&stds, q);
        report.sigma_q_sq_hat = n * n;
    }
    let alpha = alpha(d, report.kappa, horizon, q, report.sigma_q_sq_hat);
    report.alpha = alpha;

    let mut n_hat = 2.0f64;
    let mut j = 0u32;
    let theta_hat = loop {
        j += 1;
        n_hat *= 0.5;
        let eps_hat = alpha * libm::sqrt(n_hat);
        // saturating float-to-int cast
        let t_exp = (libm::ceil(8.0 / (eps_hat * eps_hat)) as u64).max(1);
        report.rounds.push(ValeeRound {
            j,
            n_hat,
            eps_hat,
            t_exp,
            theta_hat: None,
            norm: None,
        });
        let mut blocks = vec![Vec::with_capacity(report.kappa as usize); d];
        for _ in 0..report.kappa {
            for (i, ei) in e.iter().enumerate() {
                let mut sum = 0.0;
                for _ in 0..t_exp {
                    sum += session.pull_vector(ei, Phase::Explore(j))?;
                }
                blocks[i].push(sum / t_exp as f64);
            }
        }
        let theta: Vec<f64> = blocks.iter().map(|b| median_of_means(b)).collect::<Result<_>>()?;
        let norm = lp_norm(&theta, q);
        let round = report.rounds.last_mut().expect("round pushed above");
        round.theta_hat = Some(theta.clone());
        round.norm = Some(norm);
        if n_hat < norm {
            break theta;
        }
    };

    let action: Arc<[f64]> = match best_action_lp(&theta_hat, q) {
        Ok(a) => Arc::from(a),
        Err(Error::Degenerate(_)) => {
            report.fallback_used = true;
            e[0].clone()
        }
        Err(err) => return Err(err.into()),
    };
    report.exploit_reached = true;
    report.exploit_action = Some(action.to_vec());
    loop {
        session.pull_vector(&action, Phase::Exploit)?;
    }
}
