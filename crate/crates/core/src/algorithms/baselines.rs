//! Fixed-budget explore-then-commit.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::session::{finish, Session, Step};
use crate::environments::{best_action_lp, EnvHandle};
use crate::error::{Error, Result};
use crate::norms::conjugate;
use crate::types::{ActionSet, Phase, RunTrace, TraceMeta};

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreExploitReport {
    pub m: u64,
    /// Per-arm (finite) or per-coordinate (ball) sample means.
    pub means: Vec<f64>,
    pub committed_index: Option<usize>,
    pub committed_vector: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreExploitOutcome {
    pub trace: RunTrace,
    pub report: ExploreExploitReport,
}

/// `max(1, ⌊T^{2/3} / n⌋)`.
pub fn default_m(horizon: u64, n_arms: usize) -> u64 {
    let m = libm::cbrt(horizon as f64 * horizon as f64) / n_arms as f64;
    (libm::floor(m + 1e-9) as u64).max(1)
}

/// Lowest index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Plays every listed arm (or every basis vector of a ball) `m` times, then
/// commits to the empirical best (or to the optimum for the naive mean
/// estimate). A horizon shorter than the exploration truncates it.
pub fn run_baseline_explore_exploit(
    env: &mut EnvHandle,
    horizon: u64,
    m: u64,
    meta: TraceMeta,
) -> Result<ExploreExploitOutcome> {
    if m == 0 {
        return Err(Error::Domain {
            what: "explore-exploit M (must be >= 1)",
            value: 0.0,
        });
    }
    let set = env.action_set().clone();
    let n = match &set {
        ActionSet::Finite { actions, .. } => actions.len(),
        ActionSet::LpBall { dim, .. } => *dim,
    };
    let mut report = ExploreExploitReport {
        m,
        means: vec![0.0; n],
        committed_index: None,
        committed_vector: None,
    };
    let mut session = Session::new(env, horizon, meta);
    let body = match &set {
        ActionSet::Finite { .. } => finite_body(&mut session, n, m, &mut report),
        ActionSet::LpBall { dim, p } => ball_body(&mut session, *dim, *p, m, &mut report),
    };
    finish(body)?;
    Ok(ExploreExploitOutcome {
        trace: session.into_trace(),
        report,
    })
}

fn finite_body(session: &mut Session<'_>, n: usize, m: u64, report: &mut ExploreExploitReport) -> Step<()> {
    for i in 0..n {
        let mut sum = 0.0;
        for _ in 0..m {
            sum += session.pull_index(i, Phase::Explore(1))?;
        }
        report.means[i] = sum / m as f64;
    }
    let best = argmax(&report.means);
    report.committed_index = Some(best);
    loop {
        session.pull_index(best, Phase::Commit)?;
    }
}

fn ball_body(session: &mut Session<'_>, d: usize, p: f64, m: u64, report: &mut ExploreExploitReport) -> Step<()> {
    let q = conjugate(p)?;
    let mut e0: Option<Arc<[f64]>> = None;
    for i in 0..d {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        let ei: Arc<[f64]> = Arc::from(v);
        let mut sum = 0.0;
        for _ in 0..m {
            sum += session.pull_vector(&ei, Phase::Explore(1))?;
        }
        report.means[i] = sum / m as f64;
        if i == 0 {
            e0 = Some(ei);
        }
    }
    let action: Arc<[f64]> = match best_action_lp(&report.means, q) {
        Ok(a) => Arc::from(a),
        Err(Error::Degenerate(_)) => e0.ok_or(Error::Empty("dimension"))?,
        Err(e) => return Err(e.into()),
    };
    report.committed_vector = Some(action.to_vec());
    loop {
        session.pull_vector(&action, Phase::Commit)?;
    }
}
