//! Approximate G-optimal experimental designs over finite action lists.
//!
//! `g(π) = max_a aᵀ V(π)⁻¹ a` with `V(π) = Σ_a π(a) a aᵀ`. We use the squared
//! V⁻¹-norm, for which the optimum over any spanning set equals the dimension
//! `d` (Kiefer–Wolfowitz).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::norms;
use crate::types::Design;

/// `V(π) = Σ_a π(a) a aᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix(pub DMatrix<f64>);

impl InfoMatrix {
    pub fn from_design(design: &Design, actions: &[Vec<f64>]) -> Result<Self> {
        let dim = dimension(actions)?;
        let mut v = DMatrix::zeros(dim, dim);
        for &(i, w) in design.support() {
            let a = actions.get(i).ok_or(Error::Internal("design index out of range"))?;
            let col = DVector::from_column_slice(a);
            v += w * &col * col.transpose();
        }
        Ok(Self(v))
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        linalg::sym_inverse(&self.0)
    }
}

fn dimension(actions: &[Vec<f64>]) -> Result<usize> {
    let dim = actions.first().ok_or(Error::Empty("action list"))?.len();
    if let Some(a) = actions.iter().find(|a| a.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: a.len(),
        });
    }
    Ok(dim)
}

fn quad_form(inv: &DMatrix<f64>, a: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += inv[(i, j)] * a[j];
        }
        s += a[i] * row;
    }
    s
}

/// Squared V(π)⁻¹-norm maximized over every action in `actions`.
pub fn g_value(design: &Design, actions: &[Vec<f64>]) -> Result<f64> {
    let inv = InfoMatrix::from_design(design, actions)?.inverse()?;
    Ok(actions
        .iter()
        .map(|a| quad_form(&inv, a))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConfig {
    /// Stop once `g ≤ target_factor · d`. Must be ≥ 1.
    pub target_factor: f64,
    pub max_iters: usize,
    pub prune_eps: f64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            target_factor: 2.0,
            max_iters: 10_000,
            prune_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub design: Design,
    /// g of the returned (pruned) design.
    pub g: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Incumbent g after initialization and after every iteration.
    pub history: Vec<f64>,
}

/// Greedy max-volume choice of `d` spanning actions: each pick maximizes the
/// residual norm after projecting out the span of earlier picks.
fn greedy_spanning_subset(actions: &[Vec<f64>], dim: usize) -> Result<Vec<usize>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    let mut chosen = Vec::with_capacity(dim);
    let scale = actions.iter().map(|a| norms::lp_norm(a, 2.0)).fold(0.0, f64::max);
    for _ in 0..dim {
        let mut best: Option<(usize, f64, Vec<f64>)> = None;
        for (i, a) in actions.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut r = a.clone();
            for b in &basis {
                let c = norms::dot(&r, b);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = norms::lp_norm(&r, 2.0);
            if best.as_ref().is_none_or(|bst| n > bst.1) {
                best = Some((i, n, r));
            }
        }
        match best {
            Some((i, n, mut r)) if n > 1e-9 * scale => {
                r.iter_mut().for_each(|x| *x /= n);
                basis.push(r);
                chosen.push(i);
            }
            _ => {
                return Err(Error::Singular {
                    rank: chosen.len(),
                    dim,
                })
            }
        }
    }
    Ok(chosen)
}

/// Frank–Wolfe (Fedorov–Wynn) iteration towards a G-optimal design.
///
/// Starts uniform on a greedy spanning subset, then repeatedly moves mass
/// towards `argmax_a aᵀV⁻¹a` with the closed-form step
/// `γ = (g/d − 1) / (g − 1)`. The best design seen is kept; the search stops
/// once it satisfies `g ≤ target_g` or after `max_iters` iterations, in which
/// case `converged` is false.
pub fn frank_wolfe_design(actions: &[Vec<f64>], target_g: f64, cfg: &DesignConfig) -> Result<DesignResult> {
    let dim = dimension(actions)?;
    if !(target_g >= dim as f64) {
        return Err(Error::Domain {
            what: "target g (must be >= d)",
            value: target_g,
        });
    }
    let k = actions.len();
    let start = greedy_spanning_subset(actions, dim)?;
    let mut weights = vec![0.0; k];
    for &i in &start {
        weights[i] = 1.0 / dim as f64;
    }

    let cols: Vec<DVector<f64>> = actions.iter().map(|a| DVector::from_column_slice(a)).collect();
    let mut v = DMatrix::zeros(dim, dim);
    for &i in &start {
        v += weights[i] * &cols[i] * cols[i].transpose();
    }

    let mut best_weights = weights.clone();
    let mut best_g = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let inv = linalg::sym_inverse(&v)?;
        let (arg, g) =
            actions
                .iter()
                .map(|a| quad_form(&inv, a))
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, g)| if g > acc.1 { (i, g) } else { acc },
                );
        if g < best_g {
            best_g = g;
            best_weights.copy_from_slice(&weights);
        }
        history.push(best_g);
        if best_g <= target_g || iterations >= cfg.max_iters || g <= 1.0 {
            break;
        }
        iterations += 1;
        let step = (g / dim as f64 - 1.0) / (g - 1.0);
        weights.iter_mut().for_each(|w| *w *= 1.0 - step);
        weights[arg] += step;
        v = (1.0 - step) * v + step * &cols[arg] * cols[arg].transpose();
    }

    let design = Design::from_weights(&best_weights, cfg.prune_eps)?;
    let g = g_value(&design, actions)?;
    Ok(DesignResult {
        design,
        g,
        iterations,
        converged: g <= target_g * (1.0 + 1e-9),
        history,
    })
}

/// Default cap on the number of points [`discretize_lp_ball`] will emit.
pub const DEFAULT_POINT_CAP: u64 = 1_000_000;

/// Finite cover of the unit ℓp sphere in `R^d` (any `p > 1`).
///
/// Points of a regular grid on the surface of the cube `[-1, 1]^d` are pushed
/// radially onto the ℓp sphere. On a cube face the radial map has Lipschitz
/// constant at most `1 + d`, so a face grid of spacing
/// `h = 2 eps / ((1 + d) √(d − 1))` yields an `eps`-cover in ℓ2 distance.
pub fn discretize_lp_ball(dim: usize, p: f64, eps: f64, cap: u64) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(Error::Empty("dimension"));
    }
    norms::conjugate(p)?;
    if !(eps > 0.0) {
        return Err(Error::Domain {
            what: "cover radius",
            value: eps,
        });
    }
    let cells: u64 = if dim == 1 {
        1
    } else {
        let h = 2.0 * eps / ((1.0 + dim as f64) * libm::sqrt((dim - 1) as f64));
        let n = libm::ceil(2.0 / h);
        if n > 1e9 {
            return Err(Error::TooManyPoints {
                estimated: f64::INFINITY,
                cap,
            });
        }
        n as u64
    };
    let count = libm::pow(cells as f64 + 1.0, dim as f64) - libm::pow(cells as f64 - 1.0, dim as f64);
    if count > cap as f64 {
        return Err(Error::TooManyPoints { estimated: count, cap });
    }

    let step = 2.0 / cells as f64;
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0u64; dim];
    loop {
        if idx.iter().any(|&i| i == 0 || i == cells) {
            let v: Vec<f64> = idx.iter().map(|&i| -1.0 + step * i as f64).collect();
            let n = norms::lp_norm(&v, p);
            out.push(v.into_iter().map(|x| x / n).collect());
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == dim {
                return Ok(out);
            }
            idx[pos] += 1;
            if idx[pos] <= cells {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
