//! Parameter-noise environments: bounded reward samplers, gap and optimum
//! oracles, variance functionals, and the lower-bound instance generators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::{discretize_lp_ball, DEFAULT_POINT_CAP};
use crate::error::{config_err, Error, Result};
use crate::norms::{self, conjugate, dot, lp_norm};
use crate::rng::RngStream;
use crate::types::{
    ActionSet, ActionSetSpec, Construction, CovarianceSpec, Diagnostics, EnvSpec, RewardModel, SamplerKind, ThetaSpec,
};

/// Consecutive rejections after which a rejection sampler gives up.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Feasibility slack for ball actions.
pub const BALL_TOL: f64 = 1e-9;

/// An action as handed to the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ActionRef<'a> {
    Index(usize),
    Vector(&'a [f64]),
}

impl RewardModel {
    /// Draws one θ respecting `sup_a |aᵀθ| ≤ bound_radius` over `set`.
    pub fn sample<R: Rng + ?Sized>(&self, set: &ActionSet, rng: &mut R) -> Result<Vec<f64>> {
        let d = self.dim();
        match self.sampler {
            SamplerKind::PointMass => Ok(self.theta_star.clone()),
            SamplerKind::GaussianClip => {
                let mut th = self.gaussian(rng, d);
                let s = set.support_function(&th);
                if s > self.bound_radius {
                    th.iter_mut().for_each(|x| *x *= self.bound_radius / s);
                }
                Ok(th)
            }
            SamplerKind::GaussianRejection => {
                for _ in 0..MAX_REJECTIONS {
                    let th = self.gaussian(rng, d);
                    if set.support_function(&th) > self.bound_radius {
                        continue;
                    }
                    let mirror: Vec<f64> = th.iter().zip(&self.theta_star).map(|(x, m)| 2.0 * m - x).collect();
                    if set.support_function(&mirror) <= self.bound_radius {
                        return Ok(th);
                    }
                }
                Err(Error::SamplerStalled(MAX_REJECTIONS))
            }
        }
    }

    fn gaussian<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Vec<f64> {
        let z = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let noise = &self.factor * z;
        self.theta_star.iter().zip(noise.iter()).map(|(m, n)| m + n).collect()
    }

    /// Sample mean and covariance of `n` draws; used to measure the
    /// covariance actually produced after boundedness enforcement.
    pub fn empirical_moments<R: Rng + ?Sized>(
        &self,
        set: &ActionSet,
        rng: &mut R,
        n: usize,
    ) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let d = self.dim();
        let mut mean = DVector::<f64>::zeros(d);
        let mut m2 = DMatrix::<f64>::zeros(d, d);
        for k in 0..n {
            let th = DVector::from_vec(self.sample(set, rng)?);
            // Welford
            let delta = &th - &mean;
            mean += &delta / (k as f64 + 1.0);
            let delta2 = &th - &mean;
            m2 += &delta * delta2.transpose();
        }
        let cov = if n > 1 { m2 / (n as f64 - 1.0) } else { m2 };
        let cov = 0.5 * (&cov + cov.transpose());
        Ok((mean.iter().copied().collect(), cov))
    }
}

/// A single bandit environment: action set, reward law, random stream and
/// step counter. Horizons are enforced by the caller.
#[derive(Debug, Clone)]
pub struct EnvHandle {
    action_set: ActionSet,
    model: RewardModel,
    rng: RngStream,
    t: u64,
    best_value: f64,
}

impl EnvHandle {
    pub fn new(action_set: ActionSet, model: RewardModel, rng: RngStream) -> Result<Self> {
        if action_set.dim() != model.dim() {
            return Err(Error::Dimension {
                expected: action_set.dim(),
                got: model.dim(),
            });
        }
        let mean_bound = action_set.support_function(model.theta_star());
        let has_noise = model.covariance().amax() > 0.0;
        let ok = match model.sampler() {
            SamplerKind::GaussianRejection if has_noise => mean_bound < model.bound_radius(),
            _ => mean_bound <= model.bound_radius() + 1e-12,
        };
        if !ok {
            return Err(Error::Domain {
                what: "sup_a |a^T theta*| (mean reward bound)",
                value: mean_bound,
            });
        }
        let best_value = match &action_set {
            ActionSet::Finite { actions, .. } => actions
                .iter()
                .map(|a| dot(a, model.theta_star()))
                .fold(f64::NEG_INFINITY, f64::max),
            ActionSet::LpBall { p, .. } => lp_norm(model.theta_star(), conjugate(*p)?),
        };
        Ok(Self {
            action_set,
            model,
            rng,
            t: 0,
            best_value,
        })
    }

    pub fn action_set(&self) -> &ActionSet {
        &self.action_set
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.action_set.dim()
    }

    /// Number of rewards served so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    /// `max_a aᵀθ*`.
    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    fn resolve<'a>(&'a self, action: ActionRef<'a>) -> Result<&'a [f64]> {
        match (&self.action_set, action) {
            (ActionSet::Finite { actions, .. }, ActionRef::Index(i)) => actions
                .get(i)
                .map(|a| a.as_slice())
                .ok_or_else(|| Error::Infeasible(format!("index {i} out of {}", actions.len()))),
            (ActionSet::Finite { actions, .. }, ActionRef::Vector(v)) => actions
                .iter()
                .find(|a| a.as_slice() == v)
                .map(|a| a.as_slice())
                .ok_or_else(|| Error::Infeasible(format!("{v:?} is not a listed action"))),
            (ActionSet::LpBall { dim, p }, ActionRef::Vector(v)) => {
                if v.len() != *dim {
                    return Err(Error::Dimension {
                        expected: *dim,
                        got: v.len(),
                    });
                }
                let n = lp_norm(v, *p);
                if !(n <= 1.0 + BALL_TOL) {
                    return Err(Error::Infeasible(format!("l{p} norm {n} exceeds 1")));
                }
                Ok(v)
            }
            (ActionSet::LpBall { .. }, ActionRef::Index(i)) => {
                Err(Error::Infeasible(format!("index {i} given for a ball action set")))
            }
        }
    }

    /// Plays an action: draws θ_t and returns `aᵀθ_t ∈ [−1, 1]`.
    pub fn pull(&mut self, action: ActionRef<'_>) -> Result<f64> {
        self.resolve(action)?;
        let theta = self.model.sample(&self.action_set, &mut self.rng)?;
        let a = self.resolve(action)?;
        let r = dot(a, &theta).clamp(-1.0, 1.0);
        self.t += 1;
        Ok(r)
    }

    /// Suboptimality gap `max_b bᵀθ* − aᵀθ*`.
    pub fn gap(&self, action: ActionRef<'_>) -> Result<f64> {
        let a = self.resolve(action)?;
        Ok(self.best_value - dot(a, self.model.theta_star()))
    }

    pub fn diagnostics(&self) -> Result<Diagnostics> {
        diagnostics(&self.action_set, &self.model)
    }

    /// The random stream, e.g. for measuring empirical moments.
    pub fn rng_mut(&mut self) -> &mut RngStream {
        &mut self.rng
    }
}

/// `a(θ)_i = sign(θ_i) |θ_i|^{q−1} / ‖θ‖_q^{q−1}`, the maximizer of `aᵀθ` over
/// the unit ℓp ball with `p = q/(q−1)`.
pub fn best_action_lp(theta: &[f64], q: f64) -> Result<Vec<f64>> {
    conjugate(q)?;
    let n = lp_norm(theta, q);
    if !(n > 0.0) {
        return Err(Error::Degenerate("best_action_lp needs a nonzero theta"));
    }
    Ok(theta
        .iter()
        .map(|&x| {
            let r = x.abs() / n;
            libm::copysign(libm::pow(r, q - 1.0), x)
        })
        .collect())
}

/// `σ_q² = (Σ_i Σ_ii^{q/2})^{2/q}`.
pub fn sigma_q_sq(sigma: &DMatrix<f64>, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain { what: "q", value: q });
    }
    let diag: Vec<f64> = sigma.diagonal().iter().copied().collect();
    if let Some(&neg) = diag.iter().find(|&&x| x < 0.0) {
        return Err(Error::Domain {
            what: "covariance diagonal",
            value: neg,
        });
    }
    let stds: Vec<f64> = diag.iter().map(|&x| libm::sqrt(x)).collect();
    let n = lp_norm(&stds, q);
    Ok(n * n)
}

/// `σ²(a) = aᵀΣa`.
pub fn sigma_of_action(sigma: &DMatrix<f64>, a: &[f64]) -> f64 {
    let v = DVector::from_column_slice(a);
    (v.transpose() * sigma * &v)[(0, 0)].max(0.0)
}

/// Max of `aᵀΣa` over the unit ℓp ball by the ascent `a ← a(Σa)` started at
/// each axis and at the top eigenvector. Exact for `p = 2`.
fn max_quadratic_on_ball(sigma: &DMatrix<f64>, p: f64) -> Result<f64> {
    let d = sigma.nrows();
    let eig = sigma.clone().symmetric_eigen();
    let top = eig.eigenvalues.imax();
    if p == 2.0 {
        return Ok(eig.eigenvalues[top].max(0.0));
    }
    let q = conjugate(p)?;
    let mut starts: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        })
        .collect();
    let v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    let n = lp_norm(&v, p);
    if n > 0.0 {
        starts.push(v.iter().map(|x| x / n).collect());
    }
    let mut best = 0.0f64;
    for mut a in starts {
        let mut val = sigma_of_action(sigma, &a);
        for _ in 0..200 {
            let grad: Vec<f64> = (sigma * DVector::from_column_slice(&a)).iter().copied().collect();
            let Ok(next) = best_action_lp(&grad, q) else { break };
            let nv = sigma_of_action(sigma, &next);
            a = next;
            if nv <= val * (1.0 + 1e-12) {
                val = val.max(nv);
                break;
            }
            val = nv;
        }
        best = best.max(val);
    }
    Ok(best)
}

pub fn diagnostics(set: &ActionSet, model: &RewardModel) -> Result<Diagnostics> {
    let sigma = model.covariance();
    let trace = sigma.trace().max(0.0);
    match set {
        ActionSet::Finite { actions, .. } => {
            let sigma_max_sq = actions.iter().map(|a| sigma_of_action(sigma, a)).fold(0.0, f64::max);
            let max_norm_sq = actions.iter().map(|a| dot(a, a)).fold(0.0, f64::max);
            let best = actions
                .iter()
                .map(|a| dot(a, model.theta_star()))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(Diagnostics {
                sigma_q_sq: sigma_q_sq(sigma, 2.0)?,
                sigma_max_sq,
                m_sigma: sigma_max_sq.min(max_norm_sq * trace),
                theta_star_dual_norm: best,
            })
        }
        ActionSet::LpBall { dim, p } => {
            let q = conjugate(*p)?;
            let sigma_max_sq = max_quadratic_on_ball(sigma, *p)?;
            // max ‖a‖₂² over the ℓp ball: 1 for p ≤ 2, d^{1−2/p} otherwise
            let max_norm_sq = if *p <= 2.0 {
                1.0
            } else {
                libm::pow(*dim as f64, 1.0 - 2.0 / p)
            };
            Ok(Diagnostics {
                sigma_q_sq: sigma_q_sq(sigma, q)?,
                sigma_max_sq,
                m_sigma: sigma_max_sq.min(max_norm_sq * trace),
                theta_star_dual_norm: lp_norm(model.theta_star(), q),
            })
        }
    }
}

/// Constant `C` in the `p > 2` construction.
pub const PGT2_C: f64 = 73.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundParams {
    pub construction: Construction,
    /// Number of sign coordinates `ξ` (the PGt2 instance lives in `d + 1`).
    pub d: usize,
    pub sigma_sq: f64,
    pub horizon: u64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundInstance {
    pub xi: Vec<i8>,
    pub epsilon: f64,
    pub construction: Construction,
    pub theta_star: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Scale applied to θ (½ for PGt2, 1 otherwise).
    pub reward_scale: f64,
    /// `σ²` after the reward rescale; the covariance is built from it.
    pub sigma_sq_effective: f64,
    /// Whether the horizon meets the construction's requirement on `T`.
    pub full_fidelity: bool,
    pub p: f64,
}

/// Builds a hard instance with `ξ` uniform on `{−1, +1}^d` drawn from
/// `xi_rng`, and an environment drawing rewards from `env_rng`.
pub fn make_lower_bound_env(
    params: &LowerBoundParams,
    xi_rng: &mut RngStream,
    env_rng: RngStream,
) -> Result<(EnvHandle, LowerBoundInstance)> {
    let LowerBoundParams {
        construction,
        d,
        sigma_sq,
        horizon,
        q,
    } = *params;
    if d == 0 {
        return Err(Error::Empty("lower-bound dimension"));
    }
    if !(sigma_sq > 0.0) {
        return Err(Error::Domain {
            what: "sigma_sq",
            value: sigma_sq,
        });
    }
    let t = horizon as f64;
    let df = d as f64;
    let xi: Vec<i8> = (0..d).map(|_| if xi_rng.random::<bool>() { 1 } else { -1 }).collect();
    let sigma = libm::sqrt(sigma_sq);

    let instance = match construction {
        Construction::PLe2 => {
            if !(q >= 2.0) {
                return Err(Error::Domain {
                    what: "q (PLe2 needs q >= 2)",
                    value: q,
                });
            }
            if horizon < d as u64 {
                return Err(Error::Domain {
                    what: "horizon (PLe2 needs T >= d)",
                    value: t,
                });
            }
            let epsilon = libm::pow(df, 0.5 - 1.0 / q) * sigma / (2.0 * libm::sqrt(2.0 * t));
            let theta_star: Vec<f64> = xi.iter().map(|&s| epsilon * s as f64).collect();
            let norm = lp_norm(&theta_star, q);
            if norm > 1.0 {
                return Err(Error::Domain {
                    what: "||theta*||_q (PLe2 needs <= 1)",
                    value: norm,
                });
            }
            let var = sigma_sq / libm::pow(df, 2.0 / q);
            LowerBoundInstance {
                xi,
                epsilon,
                construction,
                theta_star,
                covariance: DMatrix::from_diagonal_element(d, d, var),
                reward_scale: 1.0,
                sigma_sq_effective: sigma_sq,
                full_fidelity: true,
                p: q / (q - 1.0),
            }
        }
        Construction::PGt2 => {
            if !(q > 1.0 && q < 2.0) {
                return Err(Error::Domain {
                    what: "q (PGt2 needs 1 < q < 2)",
                    value: q,
                });
            }
            let epsilon = libm::pow(sigma / (PGT2_C * libm::sqrt(t)), 1.0 / q);
            let mut unscaled = vec![1.0];
            unscaled.extend(xi.iter().map(|&s| epsilon * s as f64));
            let norm = lp_norm(&unscaled, q);
            if norm > 2.0 {
                return Err(Error::Domain {
                    what: "||theta*||_q before rescale (PGt2 needs <= 2)",
                    value: norm,
                });
            }
            let scale = 0.5;
            let sigma_sq_effective = sigma_sq * scale * scale;
            let mut diag = vec![sigma_sq_effective / 2.0];
            diag.extend((0..d).map(|_| sigma_sq_effective / (2.0 * libm::pow(df, 2.0 / q))));
            LowerBoundInstance {
                xi,
                epsilon,
                construction,
                theta_star: unscaled.iter().map(|x| x * scale).collect(),
                covariance: DMatrix::from_diagonal(&DVector::from_vec(diag)),
                reward_scale: scale,
                sigma_sq_effective,
                full_fidelity: t >= libm::pow(df, 4.0 / (2.0 - q)),
                p: q / (q - 1.0),
            }
        }
    };
    let set = ActionSet::lp_ball(instance.theta_star.len(), instance.p)?;
    let model = RewardModel::new(
        instance.theta_star.clone(),
        instance.covariance.clone(),
        SamplerKind::GaussianRejection,
    )?;
    let env = EnvHandle::new(set, model, env_rng)?;
    Ok((env, instance))
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norms::lp_norm(&v, 2.0);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl ActionSetSpec {
    pub fn build(&self) -> Result<ActionSet> {
        match self {
            Self::Finite { actions } => ActionSet::finite(actions.clone()),
            Self::RandomUnit { k, d, seed } => {
                if *k == 0 || *d == 0 {
                    return Err(config_err("environment.action_set", "k and d must be >= 1"));
                }
                let mut rng = RngStream::new(*seed, 0);
                ActionSet::finite((0..*k).map(|_| random_unit(&mut rng, *d)).collect())
            }
            Self::Basis { d } => ActionSet::finite(
                (0..*d)
                    .map(|i| {
                        let mut e = vec![0.0; *d];
                        e[i] = 1.0;
                        e
                    })
                    .collect(),
            ),
            Self::LpBall { d, p } => ActionSet::lp_ball(*d, *p),
            Self::Discretized { d, p, eps } => ActionSet::finite(discretize_lp_ball(*d, *p, *eps, DEFAULT_POINT_CAP)?),
        }
    }
}

impl ThetaSpec {
    pub fn build(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            Self::Explicit { values } => {
                if values.len() != d {
                    return Err(config_err(
                        "environment.theta_star",
                        format!("expected {d} values, got {}", values.len()),
                    ));
                }
                Ok(values.clone())
            }
            Self::Axis { norm, index } => {
                if *index >= d {
                    return Err(config_err("environment.theta_star.index", format!("must be < {d}")));
                }
                let mut v = vec![0.0; d];
                v[*index] = *norm;
                Ok(v)
            }
            Self::Random { norm, seed } => {
                let mut rng = RngStream::new(*seed, 1);
                Ok(random_unit(&mut rng, d).into_iter().map(|x| x * norm).collect())
            }
        }
    }
}

impl CovarianceSpec {
    pub fn build(&self, d: usize, q: f64) -> Result<DMatrix<f64>> {
        match self {
            Self::Isotropic { sigma_sq } => Ok(DMatrix::from_diagonal_element(d, d, *sigma_sq)),
            Self::IsotropicSigmaQ { sigma_q_sq } => Ok(DMatrix::from_diagonal_element(
                d,
                d,
                sigma_q_sq / libm::pow(d as f64, 2.0 / q),
            )),
            Self::Diagonal { diag } => {
                if diag.len() != d {
                    return Err(config_err(
                        "environment.covariance.diag",
                        format!("expected {d} entries"),
                    ));
                }
                Ok(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
            }
            Self::Full { matrix } => {
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(config_err("environment.covariance.matrix", format!("expected {d}x{d}")));
                }
                Ok(DMatrix::from_fn(d, d, |i, j| matrix[i][j]))
            }
        }
    }
}

/// An environment built from a spec, plus the lower-bound instance when the
/// spec asked for one.
pub struct BuiltEnv {
    pub env: EnvHandle,
    pub lower_bound: Option<LowerBoundInstance>,
}

impl EnvSpec {
    /// `rng` drives rewards; lower-bound signs `ξ` come from `xi_rng`.
    pub fn build(&self, horizon: u64, rng: RngStream, xi_rng: &mut RngStream) -> Result<BuiltEnv> {
        match self {
            Self::Custom {
                action_set,
                theta_star,
                covariance,
                sampler,
            } => {
                let set = action_set.build()?;
                let d = set.dim();
                let q = match &set {
                    ActionSet::LpBall { p, .. } => conjugate(*p)?,
                    ActionSet::Finite { .. } => 2.0,
                };
                let theta = theta_star.build(d)?;
                let cov = covariance.build(d, q)?;
                let model = RewardModel::new(theta, cov, *sampler)?;
                Ok(BuiltEnv {
                    env: EnvHandle::new(set, model, rng)?,
                    lower_bound: None,
                })
            }
            Self::LowerBound {
                construction,
                d,
                sigma_sq,
                q,
            } => {
                let params = LowerBoundParams {
                    construction: *construction,
                    d: *d,
                    sigma_sq: *sigma_sq,
                    horizon,
                    q: *q,
                };
                let (env, inst) = make_lower_bound_env(&params, xi_rng, rng)?;
                Ok(BuiltEnv {
                    env,
                    lower_bound: Some(inst),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_rng_stream;

    fn diag2(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))
    }

    #[test]
    fn point_mass_pull() {
        let set = ActionSet::lp_ball(2, 2.0).unwrap();
        let model = RewardModel::point_mass(vec![0.5, 0.0]).unwrap();
        let mut env = EnvHandle::new(set, model, derive_rng_stream(1, 0)).unwrap();
        for _ in 0..10 {
            assert_eq!(env.pull(ActionRef::Vector(&[1.0, 0.0])).unwrap(), 0.5);
        }
        assert_eq!(env.steps(), 10);
    }

    #[test]
    fn infeasible_ball_action() {
        let set = ActionSet::lp_ball(2, 2.0).unwrap();
        let model = RewardModel::point_mass(vec![0.5, 0.0]).unwrap();
        let mut env = EnvHandle::new(set, model, derive_rng_stream(1, 0)).unwrap();
        assert!(matches!(
            env.pull(ActionRef::Vector(&[1.5, 0.0])),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(env.pull(ActionRef::Index(0)), Err(Error::Infeasible(_))));
        assert_eq!(env.steps(), 0);
    }

    #[test]
    fn best_action_examples() {
        for q in [2.0, 3.0, 5.0] {
            let a = best_action_lp(&[1.0, 0.0, 0.0], q).unwrap();
            assert_eq!(a, vec![1.0, 0.0, 0.0]);
        }
        let a = best_action_lp(&[3.0, 4.0], 2.0).unwrap();
        assert!((a[0] - 0.6).abs() < 1e-15 && (a[1] - 0.8).abs() < 1e-15);
        let a = best_action_lp(&[1.0, 1.0], 3.0).unwrap();
        let expect = libm::pow(2.0, -2.0 / 3.0);
        assert!((a[0] - expect).abs() < 1e-15 && (a[1] - expect).abs() < 1e-15);
        assert!((dot(&a, &[1.0, 1.0]) - libm::cbrt(2.0)).abs() < 1e-14);
        assert!(best_action_lp(&[0.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn gap_examples() {
        let set = ActionSet::finite(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let env = EnvHandle::new(
            set,
            RewardModel::point_mass(vec![0.8, 0.3]).unwrap(),
            derive_rng_stream(0, 0),
        )
        .unwrap();
        assert!((env.gap(ActionRef::Index(1)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(env.gap(ActionRef::Index(0)).unwrap(), 0.0);

        let set = ActionSet::lp_ball(2, 2.0).unwrap();
        let env = EnvHandle::new(
            set,
            RewardModel::point_mass(vec![0.6, 0.0]).unwrap(),
            derive_rng_stream(0, 0),
        )
        .unwrap();
        assert!((env.gap(ActionRef::Vector(&[0.0, 1.0])).unwrap() - 0.6).abs() < 1e-15);
        let star = best_action_lp(&[0.6, 0.0], 2.0).unwrap();
        assert!(env.gap(ActionRef::Vector(&star)).unwrap().abs() < 1e-15);
    }

    #[test]
    fn sigma_q_examples() {
        assert!((sigma_q_sq(&DMatrix::identity(5, 5), 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((sigma_q_sq(&diag2(0.04, 0.09), 2.0).unwrap() - 0.13).abs() < 1e-15);
        assert!((sigma_q_sq(&diag2(0.04, 0.09), 4.0).unwrap() - libm::sqrt(0.0097)).abs() < 1e-15);
        assert!(sigma_q_sq(&diag2(-0.1, 0.09), 2.0).is_err());
    }

    #[test]
    fn sigma_of_action_examples() {
        let s = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        assert!((sigma_of_action(&s, &[1.0, 1.0]) - 0.15).abs() < 1e-15);
        assert_eq!(sigma_of_action(&s, &[1.0, 0.0]), 0.04);
        assert_eq!(sigma_of_action(&DMatrix::zeros(2, 2), &[0.3, 0.7]), 0.0);
    }

    #[test]
    fn rejection_keeps_mean_symmetric() {
        let set = ActionSet::lp_ball(2, 2.0).unwrap();
        let model = RewardModel::new(vec![0.3, -0.2], diag2(0.09, 0.09), SamplerKind::GaussianRejection).unwrap();
        let mut rng = derive_rng_stream(3, 0);
        let (mean, cov) = model.empirical_moments(&set, &mut rng, 100_000).unwrap();
        assert!(
            (mean[0] - 0.3).abs() < 0.004 && (mean[1] + 0.2).abs() < 0.004,
            "{mean:?}"
        );
        assert!(cov[(0, 0)] < 0.09);
    }

    #[test]
    fn env_rejects_mean_on_boundary() {
        let set = ActionSet::lp_ball(2, 2.0).unwrap();
        let model = RewardModel::new(vec![1.0, 0.0], diag2(0.01, 0.01), SamplerKind::GaussianRejection).unwrap();
        assert!(EnvHandle::new(set, model, derive_rng_stream(0, 0)).is_err());
    }

    #[test]
    fn ple2_example_values() {
        let params = LowerBoundParams {
            construction: Construction::PLe2,
            d: 4,
            sigma_sq: 0.25,
            horizon: 10_000,
            q: 2.0,
        };
        let (_, inst) = make_lower_bound_env(&params, &mut derive_rng_stream(1, 0), derive_rng_stream(1, 1)).unwrap();
        assert!((inst.epsilon - 1.7677669529663688e-3).abs() < 1e-15);
        assert!((lp_norm(&inst.theta_star, 2.0) - 3.5355339059327377e-3).abs() < 1e-15);
        assert!((sigma_q_sq(&inst.covariance, 2.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pgt2_first_coordinate_variance() {
        let params = LowerBoundParams {
            construction: Construction::PGt2,
            d: 3,
            sigma_sq: 0.04,
            horizon: 10_000,
            q: 1.5,
        };
        let (env, inst) = make_lower_bound_env(&params, &mut derive_rng_stream(2, 0), derive_rng_stream(2, 1)).unwrap();
        assert_eq!(env.dim(), 4);
        let s = sigma_of_action(&inst.covariance, &[1.0, 0.0, 0.0, 0.0]);
        assert!((s - inst.sigma_sq_effective / 2.0).abs() < 1e-18);
        assert!((inst.sigma_sq_effective - 0.01).abs() < 1e-18);
        assert_eq!(inst.theta_star[0], 0.5);
    }

    #[test]
    fn lower_bound_rejects_bad_params() {
        let mut params = LowerBoundParams {
            construction: Construction::PLe2,
            d: 4,
            sigma_sq: 0.25,
            horizon: 2,
            q: 2.0,
        };
        assert!(make_lower_bound_env(&params, &mut derive_rng_stream(0, 0), derive_rng_stream(0, 1)).is_err());
        params.horizon = 100;
        params.q = 1.5;
        assert!(make_lower_bound_env(&params, &mut derive_rng_stream(0, 0), derive_rng_stream(0, 1)).is_err());
        params.construction = Construction::PGt2;
        params.q = 2.5;
        assert!(make_lower_bound_env(&params, &mut derive_rng_stream(0, 0), derive_rng_stream(0, 1)).is_err());
    }

    #[test]
    fn diagnostics_finite() {
        let set = ActionSet::finite(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let model = RewardModel::new(vec![0.2, 0.1], diag2(0.04, 0.09), SamplerKind::GaussianRejection).unwrap();
        let d = diagnostics(&set, &model).unwrap();
        assert!((d.sigma_max_sq - 0.09).abs() < 1e-15);
        assert!((d.m_sigma - 0.09).abs() < 1e-15);
        assert!(d.m_sigma <= d.sigma_max_sq);
        assert!((d.theta_star_dual_norm - 0.2).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_ball_quadratic_max() {
        let sigma = DMatrix::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.09]);
        let exact = sigma.clone().symmetric_eigen().eigenvalues.max();
        assert!((max_quadratic_on_ball(&sigma, 2.0).unwrap() - exact).abs() < 1e-15);
        // l_1.5 ball sits inside the l2 ball and contains the axes
        let v = max_quadratic_on_ball(&sigma, 1.5).unwrap();
        assert!(v <= exact + 1e-12 && v >= 0.09 - 1e-12);
    }
}
