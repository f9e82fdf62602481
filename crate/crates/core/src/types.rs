//! Shared domain vocabulary: action sets, reward models, designs, traces and
//! experiment configuration.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::linalg;
use crate::norms;

/// Decision space of a bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionSet {
    /// `K ≥ 1` listed actions of a common dimension, identified by index.
    Finite { dim: usize, actions: Vec<Vec<f64>> },
    /// The unit ℓp ball `{a : ‖a‖_p ≤ 1}`.
    LpBall { dim: usize, p: f64 },
}

impl ActionSet {
    pub fn finite(actions: Vec<Vec<f64>>) -> Result<Self> {
        let dim = actions.first().ok_or(Error::Empty("action list"))?.len();
        if dim == 0 {
            return Err(Error::Empty("action vector"));
        }
        for a in &actions {
            if a.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: a.len(),
                });
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain {
                    what: "action coordinate",
                    value: f64::NAN,
                });
            }
        }
        Ok(Self::Finite { dim, actions })
    }

    /// Unit ℓp ball. Any `p > 1` is accepted so the `p > 2` lower-bound
    /// instances can be hosted; algorithms that need `p ≤ 2` check it.
    pub fn lp_ball(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("ball dimension"));
        }
        norms::conjugate(p)?;
        Ok(Self::LpBall { dim, p })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite { dim, .. } | Self::LpBall { dim, .. } => *dim,
        }
    }

    /// Number of listed actions; `None` for a ball.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match self {
            Self::Finite { actions, .. } => Some(actions.len()),
            Self::LpBall { .. } => None,
        }
    }

    pub fn actions(&self) -> Option<&[Vec<f64>]> {
        match self {
            Self::Finite { actions, .. } => Some(actions),
            Self::LpBall { .. } => None,
        }
    }

    /// `sup_{a ∈ A} |aᵀθ|`: the dual norm for a ball, the max over the list
    /// for a finite set.
    pub fn support_function(&self, theta: &[f64]) -> f64 {
        match self {
            Self::Finite { actions, .. } => actions.iter().map(|a| norms::dot(a, theta).abs()).fold(0.0, f64::max),
            Self::LpBall { p, .. } => norms::lp_norm(theta, p / (p - 1.0)),
        }
    }

    /// Whether every action spans `R^d` (always true for a ball).
    pub fn spans(&self) -> bool {
        match self {
            Self::Finite { dim, actions } => {
                let basis = linalg::span_basis(actions.iter().map(|a| a.as_slice()), *dim);
                basis.ncols() == *dim
            }
            Self::LpBall { .. } => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    /// Gaussian draws kept only when both θ and its reflection `2θ* − θ`
    /// satisfy the reward bound. The accepted region is symmetric about θ*,
    /// so the mean stays exactly θ*; the covariance shrinks slightly.
    GaussianRejection,
    /// Gaussian draws rescaled onto the bound. Fast, biased.
    GaussianClip,
    /// θ_t = θ* always.
    PointMass,
}

/// Distribution ν of the reward vector θ_t.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    pub(crate) theta_star: Vec<f64>,
    pub(crate) covariance: DMatrix<f64>,
    pub(crate) sampler: SamplerKind,
    pub(crate) bound_radius: f64,
    pub(crate) factor: DMatrix<f64>,
}

impl RewardModel {
    pub fn new(theta_star: Vec<f64>, covariance: DMatrix<f64>, sampler: SamplerKind) -> Result<Self> {
        let d = theta_star.len();
        if d == 0 {
            return Err(Error::Empty("theta_star"));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: covariance.nrows(),
            });
        }
        if !linalg::is_symmetric(&covariance, 1e-10) {
            return Err(Error::Degenerate("covariance is not symmetric"));
        }
        let min_eig = covariance.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < -1e-9 {
            return Err(Error::Domain {
                what: "covariance eigenvalue",
                value: min_eig,
            });
        }
        let factor = linalg::psd_sqrt(&covariance);
        Ok(Self {
            theta_star,
            covariance,
            sampler,
            bound_radius: 1.0,
            factor,
        })
    }

    pub fn point_mass(theta_star: Vec<f64>) -> Result<Self> {
        let d = theta_star.len();
        Self::new(theta_star, DMatrix::zeros(d, d), SamplerKind::PointMass)
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn bound_radius(&self) -> f64 {
        self.bound_radius
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }
}

/// Probability weighting over a finite action list.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    support: Vec<(usize, f64)>,
}

impl Design {
    /// Tolerance on the total mass.
    pub const MASS_TOL: f64 = 1e-9;

    pub fn new(support: Vec<(usize, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Empty("design support"));
        }
        let total: f64 = support.iter().map(|s| s.1).sum();
        if (total - 1.0).abs() > Self::MASS_TOL {
            return Err(Error::Domain {
                what: "design mass",
                value: total,
            });
        }
        if let Some(&(_, w)) = support.iter().find(|s| !(s.1 > 0.0 && s.1 <= 1.0)) {
            return Err(Error::Domain {
                what: "design weight",
                value: w,
            });
        }
        Ok(Self { support })
    }

    /// Drops weights below `prune_eps` and renormalizes.
    pub fn from_weights(weights: &[f64], prune_eps: f64) -> Result<Self> {
        let kept: Vec<(usize, f64)> = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w >= prune_eps)
            .map(|(i, &w)| (i, w))
            .collect();
        let total: f64 = kept.iter().map(|s| s.1).sum();
        if kept.is_empty() || total <= 0.0 {
            return Err(Error::Empty("design support"));
        }
        Self::new(kept.into_iter().map(|(i, w)| (i, w / total)).collect())
    }

    pub fn uniform(indices: &[usize]) -> Result<Self> {
        let w = 1.0 / indices.len() as f64;
        Self::new(indices.iter().map(|&i| (i, w)).collect())
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.support.iter().find(|s| s.0 == index).map_or(0.0, |s| s.1)
    }
}

/// Action as recorded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub enum ActionRecord {
    Index(usize),
    /// Shared so repeated pulls of one vector do not copy it.
    Vector(Arc<[f64]>),
}

/// Which part of an algorithm produced a pull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Paired pulls feeding a variance estimate, tagged with the phase/round.
    Variance(u32),
    /// Exploration pulls of phase ℓ (VASE) or doubling round j (VALEE).
    Explore(u32),
    /// Only one candidate left; played until the horizon.
    Commit,
    Exploit,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Variance(i) => write!(f, "variance:{i}"),
            Self::Explore(i) => write!(f, "explore:{i}"),
            Self::Commit => f.write_str("commit"),
            Self::Exploit => f.write_str("exploit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    /// 1-based time step.
    pub t: u64,
    pub action: ActionRecord,
    pub reward: f64,
    pub gap: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub algorithm: String,
    pub seed: u64,
    pub run_index: u64,
    pub config_hash: String,
}

/// Per-step record of one run. Gaps are clamped at zero so the cumulative
/// pseudo-regret is non-decreasing and equals the prefix sums of the gaps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    steps: Vec<Step>,
    cum_regret: Vec<f64>,
    pub meta: TraceMeta,
}

impl RunTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            steps: Vec::new(),
            cum_regret: Vec::new(),
            meta,
        }
    }

    pub fn push(&mut self, action: ActionRecord, reward: f64, gap: f64, phase: Phase) {
        let gap = gap.max(0.0);
        let prev = self.cum_regret.last().copied().unwrap_or(0.0);
        self.steps.push(Step {
            t: self.steps.len() as u64 + 1,
            action,
            reward,
            gap,
            phase,
        });
        self.cum_regret.push(prev + gap);
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn cum_regret(&self) -> &[f64] {
        &self.cum_regret
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    /// Steps whose phase satisfies `pred`.
    pub fn count_phase(&self, pred: impl Fn(Phase) -> bool) -> usize {
        self.steps.iter().filter(|s| pred(s.phase)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Vase,
    Valee,
    BaselineEe,
    BaselineSe,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Vase => "vase",
            Self::Valee => "valee",
            Self::BaselineEe => "baseline_ee",
            Self::BaselineSe => "baseline_se",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ActionSetSpec {
    Finite {
        actions: Vec<Vec<f64>>,
    },
    /// `k` uniformly random unit ℓ2 vectors drawn from `seed`.
    RandomUnit {
        k: usize,
        d: usize,
        seed: u64,
    },
    /// The standard basis `e_1..e_d`.
    Basis {
        d: usize,
    },
    LpBall {
        d: usize,
        p: f64,
    },
    /// Finite cover of the ℓp sphere.
    Discretized {
        d: usize,
        p: f64,
        eps: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaSpec {
    Explicit {
        values: Vec<f64>,
    },
    /// `norm · e_{index}` (index defaults to 0).
    Axis {
        norm: f64,
        #[serde(default)]
        index: usize,
    },
    /// Uniform random direction with the given ℓ2 norm.
    Random {
        norm: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSpec {
    /// `sigma_sq · I`.
    Isotropic {
        sigma_sq: f64,
    },
    /// Isotropic with `(Σ_i Σ_ii^{q/2})^{2/q}` equal to `sigma_q_sq`, i.e.
    /// `Σ = sigma_q_sq / d^{2/q} · I`; `q` is the ball's dual exponent
    /// (2 for finite sets).
    IsotropicSigmaQ {
        sigma_q_sq: f64,
    },
    Diagonal {
        diag: Vec<f64>,
    },
    Full {
        matrix: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// ℓp ball with `p ≤ 2` (dual `q ≥ 2`).
    PLe2,
    /// ℓp ball with `p > 2` (dual `q ∈ (1, 2)`), in dimension `d + 1`.
    PGt2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvSpec {
    Custom {
        action_set: ActionSetSpec,
        theta_star: ThetaSpec,
        covariance: CovarianceSpec,
        #[serde(default = "default_sampler")]
        sampler: SamplerKind,
    },
    LowerBound {
        construction: Construction,
        d: usize,
        sigma_sq: f64,
        q: f64,
    },
}

fn default_sampler() -> SamplerKind {
    SamplerKind::GaussianRejection
}

/// One experiment: which policy, on which environment, for how long.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub horizon: u64,
    pub delta: f64,
    #[serde(default)]
    pub known_covariance: bool,
    #[serde(default)]
    pub tau: Option<f64>,
    pub seed: u64,
    pub environment: EnvSpec,
    /// Per-arm pulls for the fixed explore-exploit baseline; defaults to
    /// `T^{2/3} / n_arms`.
    #[serde(default)]
    pub baseline_m: Option<u64>,
    /// Fixed confidence for VASE's per-phase variance estimates, replacing
    /// `2δ / (ℓ(ℓ+1) d(d+1))`.
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(config_err("horizon", "must be >= 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_err("delta", format!("must lie in (0, 1), got {}", self.delta)));
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(config_err("tau", format!("must be > 0, got {tau}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return Err(config_err("gamma", format!("must lie in (0, 1), got {g}")));
            }
        }
        if self.baseline_m == Some(0) {
            return Err(config_err("baseline_m", "must be >= 1"));
        }
        match &self.environment {
            EnvSpec::Custom {
                action_set, covariance, ..
            } => {
                let ball = matches!(action_set, ActionSetSpec::LpBall { .. });
                match self.algorithm {
                    Algorithm::Valee if !ball => {
                        return Err(config_err(
                            "environment.action_set",
                            "valee needs an lp_ball action set",
                        ))
                    }
                    Algorithm::Vase | Algorithm::BaselineSe if ball => {
                        return Err(config_err(
                            "environment.action_set",
                            "vase and baseline_se need a finite action set",
                        ))
                    }
                    _ => {}
                }
                if let ActionSetSpec::LpBall { p, .. } = action_set {
                    if self.algorithm == Algorithm::Valee && !(*p > 1.0 && *p <= 2.0) {
                        return Err(config_err(
                            "environment.action_set.p",
                            format!("valee needs 1 < p <= 2, got {p}"),
                        ));
                    }
                }
                match covariance {
                    CovarianceSpec::Isotropic { sigma_sq: s } | CovarianceSpec::IsotropicSigmaQ { sigma_q_sq: s }
                        if !(*s >= 0.0) =>
                    {
                        return Err(config_err(
                            "environment.covariance",
                            format!("variance must be >= 0, got {s}"),
                        ))
                    }
                    _ => {}
                }
            }
            EnvSpec::LowerBound { sigma_sq, d, .. } => {
                if matches!(self.algorithm, Algorithm::Vase | Algorithm::BaselineSe) {
                    return Err(config_err(
                        "environment",
                        "lower-bound instances are lp balls; use valee or baseline_ee",
                    ));
                }
                if *d == 0 {
                    return Err(config_err("environment.d", "must be >= 1"));
                }
                if !(*sigma_sq > 0.0) {
                    return Err(config_err("environment.sigma_sq", "must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// Variance functionals of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `(Σ_i Σ_ii^{q/2})^{2/q}`; `q = 2` for finite sets.
    pub sigma_q_sq: f64,
    /// `max_a aᵀΣa` (for a ball: best value found by ascent from the axes and
    /// the top eigenvector).
    pub sigma_max_sq: f64,
    /// `min{max_a σ²(a), max_a ‖a‖₂² tr(Σ)}`.
    pub m_sigma: f64,
    /// `‖θ*‖_q` for a ball, `max_a aᵀθ*` for a finite set.
    pub theta_star_dual_norm: f64,
}
