use nalgebra::{SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::Serialize;

use super::{check_finite, hermitize, hstack, identity, kron, op_norm, ComplexMatrix, ToleranceConfig};
use crate::error::{Error, Result};

/// Orthonormal basis of a subspace of `C^n`, stored as the columns of an
/// `n x r` matrix.
#[derive(Clone, Debug)]
pub struct Frame {
    basis: ComplexMatrix,
    tol: f64,
}

impl Frame {
    pub(crate) fn from_orthonormal(basis: ComplexMatrix, tol: f64) -> Self {
        Frame { basis, tol }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Frame::from_orthonormal(ComplexMatrix::zeros(ambient_dim, 0), 0.0)
    }

    pub fn full(ambient_dim: usize) -> Self {
        Frame::from_orthonormal(identity(ambient_dim), 0.0)
    }

    /// Span of the listed standard basis vectors.
    pub fn coordinate(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        let mut b = ComplexMatrix::zeros(ambient_dim, indices.len());
        let mut seen = vec![false; ambient_dim];
        for (c, &i) in indices.iter().enumerate() {
            if i >= ambient_dim {
                return Err(Error::invalid(
                    "window_mask",
                    format!("index {i} out of range for dimension {ambient_dim}"),
                ));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::invalid("window_mask", format!("duplicate index {i}")));
            }
            b[(i, c)] = Complex64::new(1.0, 0.0);
        }
        Ok(Frame::from_orthonormal(b, 0.0))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.rank() == 0
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `|B* B - I|` in operator norm.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.adjoint() * &self.basis;
        op_norm(&(g - identity(self.rank())))
    }

    /// The frame of `C^d ⊗ S`, i.e. columns of `I_d ⊗ B`.
    pub fn lift(&self, d: usize) -> Result<Frame> {
        Ok(Frame::from_orthonormal(kron(&identity(d), &self.basis)?, self.tol))
    }

    /// Basis with every column rotated so its first non-negligible entry is
    /// positive real.
    pub fn canonical_basis(&self) -> ComplexMatrix {
        let mut b = self.basis.clone();
        for mut col in b.column_iter_mut() {
            let lead = col.iter().copied().find(|z| z.norm() > 1e-12);
            if let Some(z) = lead {
                let phase = z.conj() / z.norm();
                col *= phase;
            }
        }
        b
    }
}

/// Orthonormal frame for the column space of `vectors`. Singular values at or
/// below `rank_tol * sigma_max` are discarded.
pub fn orthonormal_frame(vectors: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Frame> {
    frame_above(vectors, None, tol)
}

/// Like [`orthonormal_frame`], but the cutoff is `rank_tol * scale` when a
/// scale is given. Images use the operator norm as the scale, so an image
/// made only of rounding noise comes out as the zero subspace.
fn frame_above(vectors: &ComplexMatrix, scale: Option<f64>, tol: &ToleranceConfig) -> Result<Frame> {
    check_finite(vectors, "vectors")?;
    let n = vectors.nrows();
    if n == 0 || vectors.ncols() == 0 {
        return Ok(Frame::zero(n));
    }
    let svd = SVD::new(vectors.clone(), true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    if smax == 0.0 {
        return Ok(Frame::zero(n));
    }
    let cutoff = tol.rank_tol * scale.unwrap_or(smax).max(smax);
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| svd.singular_values[i] > cutoff)
        .collect();
    let mut basis = ComplexMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    Ok(Frame::from_orthonormal(basis, tol.rank_tol))
}

/// Span of the union of several frames in the same ambient space.
pub fn span_of(frames: &[&Frame], ambient_dim: usize, tol: &ToleranceConfig) -> Result<Frame> {
    let parts: Vec<ComplexMatrix> = frames.iter().map(|f| f.basis.clone()).collect();
    orthonormal_frame(&hstack(&parts, ambient_dim)?, tol)
}

/// Frame for `{x : A x = 0}`, the orthocomplement of the row space.
pub fn kernel(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Frame> {
    check_finite(a, "operator")?;
    let row_space = orthonormal_frame(&a.adjoint(), tol)?;
    Ok(orthocomplement(&row_space))
}

/// Frame for `A (span S)`.
pub fn image(a: &ComplexMatrix, s: &Frame, tol: &ToleranceConfig) -> Result<Frame> {
    if a.ncols() != s.ambient_dim() {
        return Err(Error::DimensionMismatch {
            op: "image",
            expected: a.ncols(),
            got: s.ambient_dim(),
        });
    }
    if s.is_zero() {
        return Ok(Frame::zero(a.nrows()));
    }
    frame_above(&(a * s.basis()), Some(op_norm(a)), tol)
}

/// Frame for `A (C^d ⊗ S)` where `A : C^d ⊗ C^n -> C^m`.
pub fn image_lifted(a: &ComplexMatrix, d: usize, s: &Frame, tol: &ToleranceConfig) -> Result<Frame> {
    image(a, &s.lift(d)?, tol)
}

/// Intersection through principal angles: the principal vectors of `s1`
/// whose angle to `s2` has sine at most `rank_tol`. Sines are read off the
/// singular values of `(I - P2) B1`, which keeps small angles accurate.
pub fn intersect(s1: &Frame, s2: &Frame, tol: &ToleranceConfig) -> Result<Frame> {
    if s1.ambient_dim() != s2.ambient_dim() {
        return Err(Error::DimensionMismatch {
            op: "intersect",
            expected: s1.ambient_dim(),
            got: s2.ambient_dim(),
        });
    }
    let n = s1.ambient_dim();
    if s1.is_zero() || s2.is_zero() {
        return Ok(Frame::zero(n));
    }
    let residual = &s1.basis - &s2.basis * (s2.basis.adjoint() * &s1.basis);
    let svd = SVD::new(residual, false, true);
    let v_t = svd.v_t.expect("v requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol.rank_tol)
        .collect();
    let mut coeffs = ComplexMatrix::zeros(s1.rank(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        coeffs.set_column(c, &v_t.row(i).adjoint());
    }
    Ok(Frame::from_orthonormal(&s1.basis * coeffs, tol.rank_tol))
}

/// Orthogonal complement within the ambient space.
pub fn orthocomplement(s: &Frame) -> Frame {
    let n = s.ambient_dim();
    if s.is_zero() {
        return Frame::full(n);
    }
    if s.rank() >= n {
        return Frame::zero(n);
    }
    let q = identity(n) - s.projector();
    let eig = SymmetricEigen::new(hermitize(&q));
    let mut keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    keep.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut basis = ComplexMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &eig.eigenvectors.column(i));
    }
    Frame::from_orthonormal(basis, s.tol)
}

/// Principal angles (radians, ascending) between two subspaces; there are
/// `min(rank a, rank b)` of them. Computed from sines so that small angles
/// keep full relative accuracy.
pub fn principal_angles(a: &Frame, b: &Frame) -> Vec<f64> {
    assert_eq!(a.ambient_dim(), b.ambient_dim(), "frames live in different spaces");
    let (x, y) = if a.rank() <= b.rank() { (a, b) } else { (b, a) };
    if x.is_zero() {
        return Vec::new();
    }
    let residual = &x.basis - &y.basis * (y.basis.adjoint() * &x.basis);
    let svd = SVD::new(residual, false, false);
    let mut angles: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| s.clamp(0.0, 1.0).asin())
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle between equal-rank subspaces, `pi/2` when the
/// ranks differ.
pub fn subspace_distance(a: &Frame, b: &Frame) -> f64 {
    if a.rank() != b.rank() {
        return std::f64::consts::FRAC_PI_2;
    }
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

/// `|(I - P_target) B_s|`: sine of the largest angle between `s` and `target`.
/// Zero iff `s` lies inside `target`.
pub fn containment_residual(s: &Frame, target: &Frame) -> f64 {
    if s.is_zero() {
        return 0.0;
    }
    let residual = &s.basis - &target.basis * (target.basis.adjoint() * &s.basis);
    op_norm(&residual)
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectSumReport {
    /// Largest `|<u, v>|` over basis vectors taken from different frames.
    pub max_overlap: f64,
    /// `ambient_dim - rank` of the concatenated bases.
    pub span_defect: f64,
    pub total_rank: usize,
    pub passed: bool,
}

pub fn direct_sum_check(
    frames: &[&Frame],
    ambient_dim: usize,
    tol: &ToleranceConfig,
) -> Result<DirectSumReport> {
    let mut max_overlap = 0.0f64;
    for (i, a) in frames.iter().enumerate() {
        for b in &frames[i + 1..] {
            if a.ambient_dim() != b.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    op: "direct_sum_check",
                    expected: a.ambient_dim(),
                    got: b.ambient_dim(),
                });
            }
            let g = a.basis.adjoint() * &b.basis;
            for z in g.iter() {
                max_overlap = max_overlap.max(z.norm());
            }
        }
    }
    let total = span_of(frames, ambient_dim, tol)?;
    let span_defect = ambient_dim.saturating_sub(total.rank()) as f64;
    Ok(DirectSumReport {
        max_overlap,
        span_defect,
        total_rank: total.rank(),
        passed: max_overlap <= tol.eq_tol && span_defect <= tol.eq_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn cols(rows: usize, data: &[&[f64]]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(rows, data.len());
        for (c, col) in data.iter().enumerate() {
            for (r, &x) in col.iter().enumerate() {
                m[(r, c)] = c64(x, 0.0);
            }
        }
        m
    }

    fn shift3() -> ComplexMatrix {
        // e0 -> e1 -> e2 -> 0
        cols(3, &[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.0]])
    }

    #[test]
    fn collinear_columns_give_rank_one() {
        let f = orthonormal_frame(&cols(2, &[&[1.0, 0.0], &[2.0, 0.0]]), &tol()).unwrap();
        assert_eq!(f.rank(), 1);
        assert!(containment_residual(&f, &Frame::coordinate(2, &[0]).unwrap()) < 1e-15);
    }

    #[test]
    fn zero_matrix_gives_rank_zero() {
        assert_eq!(orthonormal_frame(&ComplexMatrix::zeros(3, 2), &tol()).unwrap().rank(), 0);
    }

    #[test]
    fn nearly_collinear_columns_use_relative_cutoff() {
        let m = cols(2, &[&[1.0, 0.0], &[1.0, 1e-15]]);
        // 2x2 oracle: s1 s2 = |det|, s1^2 + s2^2 = |M|_F^2.
        let det = 1e-15f64;
        let fro2 = 2.0 + 1e-30;
        let disc = (fro2 * fro2 - 4.0 * det * det).sqrt();
        let s1 = ((fro2 + disc) / 2.0).sqrt();
        let s2 = det / s1;
        assert!(s2 <= 1e-10 * s1);
        assert_eq!(orthonormal_frame(&m, &tol()).unwrap().rank(), 1);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&identity(3), &tol()).unwrap().rank(), 0);
        let k = kernel(&cols(1, &[&[1.0], &[1.0]]), &tol()).unwrap();
        assert_eq!(k.rank(), 1);
        let expected = orthonormal_frame(&cols(2, &[&[1.0, -1.0]]), &tol()).unwrap();
        assert!(subspace_distance(&k, &expected) < 1e-14);
        // J* x = 0 forces x1 = x2 = 0.
        let k = kernel(&shift3().adjoint(), &tol()).unwrap();
        assert!(subspace_distance(&k, &Frame::coordinate(3, &[0]).unwrap()) < 1e-14);
    }

    #[test]
    fn image_examples() {
        let s = Frame::coordinate(3, &[0, 2]).unwrap();
        assert!(subspace_distance(&image(&identity(3), &s, &tol()).unwrap(), &s) < 1e-15);
        assert_eq!(image(&ComplexMatrix::zeros(3, 3), &s, &tol()).unwrap().rank(), 0);
        let e0 = Frame::coordinate(3, &[0]).unwrap();
        let img = image(&shift3(), &e0, &tol()).unwrap();
        assert!(subspace_distance(&img, &Frame::coordinate(3, &[1]).unwrap()) < 1e-15);
        assert!(matches!(
            image(&identity(2), &e0, &tol()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn intersect_examples() {
        let a = Frame::coordinate(3, &[0, 1]).unwrap();
        let b = Frame::coordinate(3, &[1, 2]).unwrap();
        assert!(subspace_distance(&intersect(&a, &a, &tol()).unwrap(), &a) < 1e-14);
        let i = intersect(&a, &b, &tol()).unwrap();
        assert!(subspace_distance(&i, &Frame::coordinate(3, &[1]).unwrap()) < 1e-14);
        let x = Frame::coordinate(2, &[0]).unwrap();
        let y = Frame::coordinate(2, &[1]).unwrap();
        assert_eq!(intersect(&x, &y, &tol()).unwrap().rank(), 0);
    }

    #[test]
    fn orthocomplement_examples() {
        assert_eq!(orthocomplement(&Frame::full(3)).rank(), 0);
        assert_eq!(orthocomplement(&Frame::zero(4)).rank(), 4);
        let diag = orthonormal_frame(&cols(2, &[&[1.0, 1.0]]), &tol()).unwrap();
        let anti = orthonormal_frame(&cols(2, &[&[1.0, -1.0]]), &tol()).unwrap();
        assert!(subspace_distance(&orthocomplement(&diag), &anti) < 1e-14);
    }

    #[test]
    fn direct_sum_examples() {
        let e0 = Frame::coordinate(2, &[0]).unwrap();
        let e1 = Frame::coordinate(2, &[1]).unwrap();
        let r = direct_sum_check(&[&e0, &e1], 2, &tol()).unwrap();
        assert!(r.passed && r.max_overlap == 0.0 && r.span_defect == 0.0);
        let r = direct_sum_check(&[&e0, &e0], 2, &tol()).unwrap();
        assert!(!r.passed);
        assert!((r.max_overlap - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_basis_has_positive_leading_entries() {
        let v = cols(2, &[&[0.0, 1.0]]).map(|z| z * c64(0.0, -1.0));
        let f = orthonormal_frame(&v, &tol()).unwrap();
        let b = f.canonical_basis();
        assert!((b[(1, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols)
            .prop_map(move |v| ComplexMatrix::from_iterator(rows, cols, v.into_iter().map(|(a, b)| c64(a, b))))
    }

    /// Random low-rank matrix: product of two thin factors.
    fn arb_low_rank(n: usize, r: usize, m: usize) -> impl Strategy<Value = ComplexMatrix> {
        (arb_matrix(n, r), arb_matrix(r, m)).prop_map(|(a, b)| a * b)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn frames_are_orthonormal(m in arb_low_rank(6, 3, 5)) {
            let f = orthonormal_frame(&m, &tol()).unwrap();
            prop_assert!(f.orthonormality_defect() <= 10.0 * tol().rank_tol);
            prop_assert_eq!(f.rank(), 3);
        }

        #[test]
        fn kernel_is_orthogonal_to_adjoint_image(m in arb_low_rank(5, 2, 6)) {
            let k = kernel(&m, &tol()).unwrap();
            let r = image(&m.adjoint(), &Frame::full(5), &tol()).unwrap();
            prop_assert_eq!(k.rank() + r.rank(), 6);
            let g = k.basis().adjoint() * r.basis();
            prop_assert!(g.iter().all(|z| z.norm() <= tol().eq_tol));
        }

        #[test]
        fn intersect_commutes(a in arb_matrix(6, 4), b in arb_matrix(6, 3), shared in arb_matrix(6, 1)) {
            // Force a common line so the intersection is nontrivial.
            let mut a = a; let mut b = b;
            a.set_column(0, &shared.column(0));
            b.set_column(0, &shared.column(0));
            let fa = orthonormal_frame(&a, &tol()).unwrap();
            let fb = orthonormal_frame(&b, &tol()).unwrap();
            let ab = intersect(&fa, &fb, &tol()).unwrap();
            let ba = intersect(&fb, &fa, &tol()).unwrap();
            prop_assert_eq!(ab.rank(), ba.rank());
            prop_assert!(ab.rank() >= 1);
            prop_assert!(subspace_distance(&ab, &ba) <= tol().rank_tol);
        }

        #[test]
        fn kron_is_associative(
            a in proptest::collection::vec(-4i32..4, 6),
            b in proptest::collection::vec(-4i32..4, 6),
            c in proptest::collection::vec(-4i32..4, 4),
        ) {
            // Integer entries make every product exact, so equality is bitwise.
            let m = |r, c, v: &[i32]| ComplexMatrix::from_iterator(r, c, v.iter().map(|&x| c64(x as f64, -(x as f64))));
            let (a, b, c) = (m(2, 3, &a), m(3, 2, &b), m(2, 2, &c));
            let left = kron(&kron(&a, &b).unwrap(), &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn double_complement_is_identity(m in arb_low_rank(5, 2, 3)) {
            let s = orthonormal_frame(&m, &tol()).unwrap();
            let back = orthocomplement(&orthocomplement(&s));
            prop_assert!(subspace_distance(&s, &back) <= tol().rank_tol);
        }
    }
}
