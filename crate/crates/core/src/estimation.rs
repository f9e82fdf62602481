//! Statistical subroutines: the stopping-rule mean estimator, the paired
//! variance probe, median of means and weighted least squares.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Threshold family for the stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SrThreshold {
    /// `Υ = (1+ε) · 2(1 + ε/3) · ln(2/δ) / ε²`, from Bernstein's inequality on
    /// the running sum at the two critical sample counts.
    #[default]
    Bernstein,
    /// Dagum et al.: `Υ = 1 + (1+ε) · 4(e−2) ln(2/δ) / ε²`.
    Dagum,
}

impl SrThreshold {
    pub fn value(self, eps: f64, delta: f64) -> f64 {
        let log = libm::log(2.0 / delta);
        match self {
            Self::Bernstein => (1.0 + eps) * 2.0 * (1.0 + eps / 3.0) * log / (eps * eps),
            Self::Dagum => 1.0 + (1.0 + eps) * 4.0 * (core::f64::consts::E - 2.0) * log / (eps * eps),
        }
    }
}

/// Constant `c` in the step bound `c · ln(2/δ) / (ε² μ)`; covers both
/// threshold families (`4e(e−2)` rounded up).
pub const SR_STEP_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrConfig {
    pub threshold: SrThreshold,
    /// Hard limit on samples per call.
    pub step_cap: u64,
}

impl Default for SrConfig {
    fn default() -> Self {
        Self {
            threshold: SrThreshold::Bernstein,
            step_cap: 1_000_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrResult {
    pub estimate: f64,
    pub steps: u64,
}

/// Stopping-rule estimate of the mean of a `[0, 1]` variable with mean
/// `μ > 0`: sample until the running sum reaches the threshold `Υ` and return
/// `Υ / steps`. With probability `1 − δ` the result is within `eps · μ` of `μ`.
///
/// Sampler errors pass through unchanged; SR failures are converted with
/// `E: From<Error>`.
pub fn stopping_rule_estimate<E, F>(
    mut sample: F,
    eps: f64,
    delta: f64,
    cfg: &SrConfig,
) -> core::result::Result<SrResult, E>
where
    E: From<Error>,
    F: FnMut() -> core::result::Result<f64, E>,
{
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain {
            what: "SR eps",
            value: eps,
        }
        .into());
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain {
            what: "SR delta",
            value: delta,
        }
        .into());
    }
    let upsilon = cfg.threshold.value(eps, delta);
    let mut sum = 0.0;
    let mut steps = 0u64;
    while sum < upsilon {
        if steps >= cfg.step_cap {
            return Err(Error::StepCap(cfg.step_cap).into());
        }
        let x = sample()?;
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::SampleOutOfRange(x).into());
        }
        sum += x;
        steps += 1;
    }
    Ok(SrResult {
        estimate: upsilon / steps as f64,
        steps,
    })
}

/// `Z = max{¼ (X_s − X_{s+1})², τ/2}` for two rewards of the same action.
pub fn probe_value(x1: f64, x2: f64, tau: f64) -> f64 {
    let d = x1 - x2;
    (0.25 * d * d).max(0.5 * tau)
}

/// One variance probe: pulls the action twice via `pull`.
pub fn variance_probe_sample<E, F>(pull: &mut F, tau: f64) -> core::result::Result<f64, E>
where
    F: FnMut() -> core::result::Result<f64, E>,
{
    let x1 = pull()?;
    let x2 = pull()?;
    Ok(probe_value(x1, x2, tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEstimate {
    pub value: f64,
    /// Bandit pulls spent (twice the SR sample count).
    pub steps: u64,
}

/// Stopping rule over paired probes of one action. With probability
/// `1 − delta_bar` the result lies in `[¼ max{τ, σ²}, ¾σ² + ¾τ]` when
/// `eps_bar = ½`.
pub fn estimate_action_variance<E, F>(
    mut pull: F,
    tau: f64,
    delta_bar: f64,
    eps_bar: f64,
    cfg: &SrConfig,
) -> core::result::Result<VarianceEstimate, E>
where
    E: From<Error>,
    F: FnMut() -> core::result::Result<f64, E>,
{
    if !(tau > 0.0 && tau <= 2.0) {
        return Err(Error::Domain {
            what: "variance threshold tau",
            value: tau,
        }
        .into());
    }
    let sr = stopping_rule_estimate(|| variance_probe_sample(&mut pull, tau), eps_bar, delta_bar, cfg)?;
    Ok(VarianceEstimate {
        value: sr.estimate,
        steps: 2 * sr.steps,
    })
}

/// Median of the block means; the lower median for an even count.
pub fn median_of_means(block_means: &[f64]) -> Result<f64> {
    if block_means.is_empty() {
        return Err(Error::Empty("block means"));
    }
    let mut v = block_means.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v[(v.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct WlsObservation {
    pub action: Vec<f64>,
    pub weight: f64,
    pub reward: f64,
}

/// Streaming accumulator for `V = Σ w a aᵀ` and `b = Σ w a X`.
#[derive(Debug, Clone, PartialEq)]
pub struct WlsAccumulator {
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    count: u64,
}

impl WlsAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            rhs: DVector::zeros(dim),
            count: 0,
        }
    }

    pub fn add(&mut self, action: &[f64], weight: f64, reward: f64) -> Result<()> {
        let d = self.rhs.len();
        if action.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: action.len(),
            });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Domain {
                what: "WLS weight",
                value: weight,
            });
        }
        for i in 0..d {
            let wi = weight * action[i];
            self.rhs[i] += wi * reward;
            for (j, aj) in action.iter().enumerate() {
                self.gram[(i, j)] += wi * aj;
            }
        }
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn solve(&self) -> Result<Vec<f64>> {
        let inv = linalg::sym_inverse(&self.gram)?;
        Ok((inv * &self.rhs).iter().copied().collect())
    }
}

/// `θ̂ = V⁻¹ Σ w a X` with `V = Σ w a aᵀ`.
pub fn weighted_least_squares(observations: &[WlsObservation]) -> Result<Vec<f64>> {
    let dim = observations.first().ok_or(Error::Empty("observations"))?.action.len();
    let mut acc = WlsAccumulator::new(dim);
    for o in observations {
        acc.add(&o.action, o.weight, o.reward)?;
    }
    acc.solve()
}
