//! Small dense symmetric linear algebra on top of nalgebra.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues below `max_eigenvalue / CONDITION_GUARD` count as zero.
pub const CONDITION_GUARD: f64 = 1e12;

/// Rank and pseudo-spectrum of a symmetric PSD matrix.
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub rank: usize,
    pub cutoff: f64,
}

pub fn spectrum(m: &DMatrix<f64>) -> Spectrum {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let cutoff = lmax / CONDITION_GUARD;
    let rank = if lmax > 0.0 {
        eig.eigenvalues.iter().filter(|&&l| l > cutoff).count()
    } else {
        0
    };
    Spectrum {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
        rank,
        cutoff,
    }
}

/// Inverse of a symmetric PSD matrix, refusing anything with condition
/// number above [`CONDITION_GUARD`].
pub fn sym_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let s = spectrum(m);
    if s.rank < n {
        return Err(Error::Singular { rank: s.rank, dim: n });
    }
    let inv_vals = s.values.map(|l| 1.0 / l);
    Ok(&s.vectors * DMatrix::from_diagonal(&inv_vals) * s.vectors.transpose())
}

/// Square root factor `L` with `L Lᵀ = m` for a symmetric PSD `m`
/// (negative round-off eigenvalues are clamped to zero).
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| libm::sqrt(l.max(0.0)));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// Orthonormal basis (as columns) of the span of `vectors`.
pub fn span_basis<'a, I>(vectors: I, dim: usize) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for v in vectors {
        let col = DVector::from_column_slice(v);
        gram += &col * col.transpose();
    }
    let s = spectrum(&gram);
    let cols: Vec<DVector<f64>> = (0..dim)
        .filter(|&i| s.rank > 0 && s.values[i] > s.cutoff)
        .map(|i| s.vectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(dim, 0);
    }
    DMatrix::from_columns(&cols)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}
