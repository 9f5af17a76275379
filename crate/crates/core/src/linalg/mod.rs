//! Dense complex linear algebra and the subspace calculus used by every
//! other module.
//!
//! Operators are plain `DMatrix<Complex64>` values. Subspaces are always
//! carried as [`Frame`]s (orthonormal column bases); projectors are derived
//! on demand.
//!
//! Tensor products use a single left-factor-major convention: for `kron(A, B)`
//! the basis vector `(i, t)` of the domain sits at flat index `i * B.ncols() + t`.
//! Consequently `I_d ⊗ X` is block diagonal with `d` copies of `X`, and an
//! operator `E ⊗ K -> K` is stored as `[A(e_0) | A(e_1) | ...]`.

mod frame;

pub use frame::{
    containment_residual, direct_sum_check, image, image_lifted, intersect, kernel,
    orthocomplement, orthonormal_frame, principal_angles, span_of, subspace_distance,
    DirectSumReport, Frame,
};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Largest row or column count any Kronecker product may produce.
pub const KRON_MAX_DIM: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff used for every rank decision.
    pub rank_tol: f64,
    /// Operator-norm residual below which an identity is considered to hold.
    pub eq_tol: f64,
    /// Eigenvalue floor for positive semidefiniteness; never positive.
    pub psd_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-10,
            eq_tol: 1e-8,
            psd_tol: -1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rank_tol >= 0.0
            && self.eq_tol >= 0.0
            && self.psd_tol <= 0.0
            && self.rank_tol.is_finite()
            && self.eq_tol.is_finite()
            && self.psd_tol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::BadParams(format!(
                "tolerances must satisfy rank_tol >= 0, eq_tol >= 0, psd_tol <= 0 (got {self:?})"
            )))
        }
    }
}

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

pub fn check_finite(m: &ComplexMatrix, what: &str) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite {
                    what: what.to_string(),
                    row: r,
                    col: c,
                });
            }
        }
    }
    Ok(())
}

/// Kronecker product with the crate-wide left-factor-major ordering.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_limited(a, b, KRON_MAX_DIM)
}

pub fn kron_limited(a: &ComplexMatrix, b: &ComplexMatrix, limit: usize) -> Result<ComplexMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) if r <= limit && c <= limit => (r, c),
        _ => {
            return Err(Error::Overflow {
                rows: a.nrows().saturating_mul(b.nrows()),
                cols: a.ncols().saturating_mul(b.ncols()),
                limit,
            })
        }
    };
    let (p, q) = (b.nrows(), b.ncols());
    let mut out = ComplexMatrix::zeros(rows, cols);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for t in 0..q {
                for r in 0..p {
                    out[(i * p + r, j * q + t)] = s * b[(r, t)];
                }
            }
        }
    }
    Ok(out)
}

/// `I_n ⊗ m`.
pub fn id_kron(n: usize, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron(&identity(n), m)
}

/// Singular values in descending order. Empty for a matrix with a zero dimension.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(a.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn op_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Largest `delta` with `delta |x| <= |A x|` over the whole domain.
///
/// Zero whenever `A` has a nontrivial kernel, including every wide matrix.
pub fn smallest_singular(a: &ComplexMatrix) -> f64 {
    if a.ncols() == 0 || a.nrows() < a.ncols() {
        return 0.0;
    }
    singular_values(a).last().copied().unwrap_or(0.0)
}

/// Right singular vector for the smallest singular value over the domain.
pub(crate) fn weakest_direction(a: &ComplexMatrix) -> Option<ComplexVector> {
    let n = a.ncols();
    if n == 0 {
        return None;
    }
    // Gram route keeps the full domain basis even for wide matrices.
    let g = a.adjoint() * a;
    let eig = SymmetricEigen::new(hermitize(&g));
    let (idx, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    Some(eig.eigenvectors.column(idx).into_owned())
}

pub fn hermitize(h: &ComplexMatrix) -> ComplexMatrix {
    (h + h.adjoint()).scale(0.5)
}

pub fn hermitian_defect(h: &ComplexMatrix) -> f64 {
    op_norm(&(h - h.adjoint()))
}

/// Smallest eigenvalue of a Hermitian matrix together with a unit eigenvector.
///
/// The input is symmetrized before the eigen-solve; it must already be
/// Hermitian within `eq_tol * |H|`.
pub fn min_eigenpair(h: &ComplexMatrix, tol: &ToleranceConfig) -> Result<(f64, ComplexVector)> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            op: "min_eigenpair",
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    check_finite(h, "hermitian form")?;
    let n = h.nrows();
    if n == 0 {
        return Ok((0.0, ComplexVector::zeros(0)));
    }
    let defect = hermitian_defect(h);
    if defect > tol.eq_tol * op_norm(h) {
        return Err(Error::NotHermitian { defect });
    }
    let eig = SymmetricEigen::new(hermitize(h));
    let (idx, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty spectrum");
    Ok((lambda, eig.eigenvectors.column(idx).into_owned()))
}

pub fn psd_check(h: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
    let (lambda, _) = min_eigenpair(h, tol)?;
    Ok(lambda >= tol.psd_tol)
}

/// `<v, H v>` real part, for re-evaluating witnesses.
pub fn quadratic_form(h: &ComplexMatrix, v: &ComplexVector) -> f64 {
    (v.adjoint() * h * v)[(0, 0)].re
}

/// Block-diagonal embedding of square or rectangular blocks.
pub fn block_diag(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(*b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// Horizontal concatenation; all parts must share the row count.
pub fn hstack(parts: &[ComplexMatrix], rows: usize) -> Result<ComplexMatrix> {
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut c0 = 0;
    for p in parts {
        if p.nrows() != rows {
            return Err(Error::DimensionMismatch {
                op: "hstack",
                expected: rows,
                got: p.nrows(),
            });
        }
        out.view_mut((0, c0), (rows, p.ncols())).copy_from(p);
        c0 += p.ncols();
    }
    Ok(out)
}

/// Solve `G X = B` for Hermitian positive definite `G` by Cholesky, returning
/// the solution and the spectral condition number of `G`.
pub fn hpd_solve(g: &ComplexMatrix, b: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    if g.nrows() == 0 {
        return Ok((ComplexMatrix::zeros(0, b.ncols()), 1.0));
    }
    let s = singular_values(g);
    let smax = s[0];
    let smin = *s.last().unwrap();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= 1e12) {
        return Err(Error::GramIllConditioned { cond });
    }
    let chol = nalgebra::Cholesky::new(hermitize(g)).ok_or(Error::GramIllConditioned { cond })?;
    Ok((chol.solve(b), cond))
}
