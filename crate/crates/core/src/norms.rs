//! Vector norms and Hölder conjugates.

use crate::error::{Error, Result};

/// Dual exponent of an ℓp ball with `p ∈ (1, 2]`.
///
/// Returns `q = p / (p - 1)`, so `q ≥ 2` and `(q - 1) p = q`.
pub fn dual_exponent(p: f64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain {
            what: "p (expected 1 < p <= 2)",
            value: p,
        });
    }
    Ok(p / (p - 1.0))
}

/// Hölder conjugate for any `r > 1`. Unlike [`dual_exponent`] this accepts
/// `r > 2`, which the lower-bound constructions need.
pub fn conjugate(r: f64) -> Result<f64> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::Domain {
            what: "exponent (expected r > 1)",
            value: r,
        });
    }
    Ok(r / (r - 1.0))
}

pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return libm::sqrt(v.iter().map(|x| x * x).sum());
    }
    if p.is_infinite() {
        return v.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    // Scale by the max entry so tiny vectors don't underflow in |x|^p.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|x| libm::pow(x.abs() / scale, p)).sum();
    scale * libm::pow(s, 1.0 / p)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
