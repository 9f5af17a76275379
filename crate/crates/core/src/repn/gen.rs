//! Generators for the standard example classes and truncated models.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Correspondence, CovariantRep, ProductSystemRep};
use crate::error::{Error, Result};
use crate::linalg::{block_diag, c64, identity, kron, op_norm, ComplexMatrix, ToleranceConfig, KRON_MAX_DIM};

/// `Ã′ = β·Ã` for an isometric base. `σ` is kept, so the result stays covariant.
pub fn gen_scaled_isometry(base: &CovariantRep, beta: f64, tol: &ToleranceConfig) -> Result<CovariantRep> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::BadParams(format!("beta must lie in (0, 1), got {beta}")));
    }
    let a = base.atilde();
    let residual = op_norm(&(a.adjoint() * a - identity(a.ncols())));
    if residual > tol.eq_tol {
        return Err(Error::NotIsometric { residual });
    }
    CovariantRep::new(
        base.k_dim(),
        base.sigma().to_vec(),
        base.correspondence().clone(),
        a.scale(beta),
        base.window_mask().map(<[usize]>::to_vec),
    )
}

/// Cyclic surrogate of a weighted shift: `K = C^N`, `d = n`,
/// `A(δ_i) e_m = w_{i,m} e_{(i + n·m) mod N}` with `i = 1..n`.
pub fn gen_weighted_cyclic_shift(n: usize, big_n: usize, weights: &[Vec<Complex64>]) -> Result<CovariantRep> {
    if n == 0 || big_n < n {
        return Err(Error::BadParams(format!("need N >= n >= 1, got n = {n}, N = {big_n}")));
    }
    if weights.len() != n || weights.iter().any(|row| row.len() != big_n) {
        return Err(Error::BadParams(format!("weights must be an {n}x{big_n} table")));
    }
    let mut a = ComplexMatrix::zeros(big_n, n * big_n);
    for (i, row) in weights.iter().enumerate() {
        for (m, &w) in row.iter().enumerate() {
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::NonFinite {
                    what: "weights".into(),
                    row: i,
                    col: m,
                });
            }
            if w.norm() > 1.0 {
                return Err(Error::BadWeights {
                    direction: i,
                    index: m,
                    modulus: w.norm(),
                });
            }
            a[((i + 1 + n * m) % big_n, i * big_n + m)] = w;
        }
    }
    CovariantRep::new(big_n, Vec::new(), Correspondence::scalar(n), a, None)
}

/// Creation operators on the level-truncated Fock space
/// `K = (⊕_{l ≤ N} E^{⊗l})⊗W`, with the top level sent to 0.
///
/// The window mask covers levels `0..N`.
pub fn gen_truncated_fock(d: usize, big_n: usize, w_dim: usize) -> Result<CovariantRep> {
    if d == 0 || big_n == 0 || w_dim == 0 {
        return Err(Error::BadParams("d, N and W_dim must all be at least 1".into()));
    }
    let mut offsets = Vec::with_capacity(big_n + 2);
    let mut total = 0usize;
    let mut level_size = w_dim;
    for _ in 0..=big_n {
        offsets.push(total);
        total = total.checked_add(level_size).filter(|&t| t <= KRON_MAX_DIM).ok_or(Error::Overflow {
            rows: total,
            cols: level_size,
            limit: KRON_MAX_DIM,
        })?;
        level_size = level_size.checked_mul(d).ok_or(Error::Overflow {
            rows: level_size,
            cols: d,
            limit: KRON_MAX_DIM,
        })?;
    }
    let n = total;
    if n * d > KRON_MAX_DIM {
        return Err(Error::Overflow {
            rows: n,
            cols: n * d,
            limit: KRON_MAX_DIM,
        });
    }
    let mut a = ComplexMatrix::zeros(n, d * n);
    let mut width = 1usize; // d^l
    for l in 0..big_n {
        for i in 0..d {
            for t in 0..width {
                for w in 0..w_dim {
                    let col = i * n + offsets[l] + t * w_dim + w;
                    let row = offsets[l + 1] + (i * width + t) * w_dim + w;
                    a[(row, col)] = c64(1.0, 0.0);
                }
            }
        }
        width *= d;
    }
    let window = (0..offsets[big_n]).collect();
    CovariantRep::new(n, Vec::new(), Correspondence::scalar(d), a, Some(window))
}

/// Pair of creation operators on `C^{N+1}⊗C^{N+1}⊗W`:
/// `T₁ = J⊗I⊗I`, `T₂ = D(I⊗J⊗I)` with `D e_{p,q,w} = ω^p e_{p,q,w}`, and
/// `U₁₂ = ω̄·I`. The window mask covers `p, q < N`.
pub fn gen_twisted_fock_pair(
    omega: Complex64,
    big_n: usize,
    w_dim: usize,
    tol: &ToleranceConfig,
) -> Result<ProductSystemRep> {
    if (omega.norm() - 1.0).abs() > tol.eq_tol {
        return Err(Error::NotUnimodular { modulus: omega.norm() });
    }
    if big_n == 0 || w_dim == 0 {
        return Err(Error::BadParams("N and W_dim must be at least 1".into()));
    }
    let side = big_n + 1;
    let n = side * side * w_dim;
    let index = |p: usize, q: usize, w: usize| (p * side + q) * w_dim + w;
    let mut t1 = ComplexMatrix::zeros(n, n);
    let mut t2 = ComplexMatrix::zeros(n, n);
    let mut window = Vec::new();
    for p in 0..side {
        let phase = omega.powu(p as u32);
        for q in 0..side {
            for w in 0..w_dim {
                if p < big_n {
                    t1[(index(p + 1, q, w), index(p, q, w))] = c64(1.0, 0.0);
                }
                if q < big_n {
                    t2[(index(p, q + 1, w), index(p, q, w))] = phase;
                }
                if p < big_n && q < big_n {
                    window.push(index(p, q, w));
                }
            }
        }
    }
    let mut twists = BTreeMap::new();
    twists.insert((0, 1), identity(n) * omega.conj());
    ProductSystemRep::new(
        n,
        Vec::new(),
        vec![Correspondence::scalar(1), Correspondence::scalar(1)],
        BTreeMap::new(),
        twists,
        vec![t1, t2],
        Some(window),
    )
}

/// Block direct sum of representations of the same correspondence.
pub fn gen_block_direct_sum(reps: &[CovariantRep]) -> Result<CovariantRep> {
    let first = reps.first().ok_or_else(|| Error::BadParams("no summands".into()))?;
    let corr = first.correspondence();
    let d = corr.dim();
    for r in &reps[1..] {
        match corr.max_difference(r.correspondence()) {
            Some(diff) if diff <= 1e-12 => {}
            _ => {
                return Err(Error::DimensionMismatch {
                    op: "gen_block_direct_sum",
                    expected: d,
                    got: r.d(),
                })
            }
        }
    }
    let n: usize = reps.iter().map(CovariantRep::k_dim).sum();
    let mut a = ComplexMatrix::zeros(n, d * n);
    let mut offset = 0;
    let mut window: Vec<usize> = Vec::new();
    let any_window = reps.iter().any(|r| r.window_mask().is_some());
    for r in reps {
        let nr = r.k_dim();
        for i in 0..d {
            a.view_mut((offset, i * n + offset), (nr, nr))
                .copy_from(&r.atilde().columns(i * nr, nr));
        }
        match r.window_mask() {
            Some(w) => window.extend(w.iter().map(|&x| x + offset)),
            None => window.extend(offset..offset + nr),
        }
        offset += nr;
    }
    let sigma = (0..corr.generator_count())
        .map(|g| {
            let blocks: Vec<&ComplexMatrix> = reps.iter().map(|r| &r.sigma()[g]).collect();
            block_diag(&blocks)
        })
        .collect();
    CovariantRep::new(n, sigma, corr.clone(), a, any_window.then_some(window))
}

/// Block direct sum of product-system representations over the same
/// correspondences and flips; twists are summed blockwise.
pub fn gen_product_direct_sum(psrs: &[ProductSystemRep]) -> Result<ProductSystemRep> {
    let first = psrs.first().ok_or_else(|| Error::BadParams("no summands".into()))?;
    let k = first.k();
    for p in &psrs[1..] {
        if p.k() != k {
            return Err(Error::DimensionMismatch {
                op: "gen_product_direct_sum",
                expected: k,
                got: p.k(),
            });
        }
        for i in 0..k {
            match first.correspondence(i).max_difference(p.correspondence(i)) {
                Some(diff) if diff <= 1e-12 => {}
                _ => {
                    return Err(Error::DimensionMismatch {
                        op: "gen_product_direct_sum",
                        expected: first.d(i),
                        got: p.d(i),
                    })
                }
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                if op_norm(&(first.flip(i, j) - p.flip(i, j))) > 1e-12 {
                    return Err(Error::BadParams(format!(
                        "summands disagree on the flip ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
    }
    let n: usize = psrs.iter().map(ProductSystemRep::k_dim).sum();
    let mut atildes = Vec::with_capacity(k);
    for i in 0..k {
        let d = first.d(i);
        let mut a = ComplexMatrix::zeros(n, d * n);
        let mut offset = 0;
        for p in psrs {
            let nr = p.k_dim();
            for e in 0..d {
                a.view_mut((offset, e * n + offset), (nr, nr))
                    .copy_from(&p.atilde(i).columns(e * nr, nr));
            }
            offset += nr;
        }
        atildes.push(a);
    }
    let mut twists = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..k {
            if psrs.iter().any(|p| p.stored_twists().contains_key(&(i, j))) {
                let blocks: Vec<ComplexMatrix> = psrs.iter().map(|p| p.twist(i, j)).collect();
                let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
                twists.insert((i, j), block_diag(&refs));
            }
        }
    }
    let mut window = Vec::new();
    let any_window = psrs.iter().any(|p| p.window_mask().is_some());
    let mut offset = 0;
    for p in psrs {
        match p.window_mask() {
            Some(w) => window.extend(w.iter().map(|&x| x + offset)),
            None => window.extend(offset..offset + p.k_dim()),
        }
        offset += p.k_dim();
    }
    let sigma = (0..first.sigma().len())
        .map(|g| {
            let blocks: Vec<&ComplexMatrix> = psrs.iter().map(|p| &p.sigma()[g]).collect();
            block_diag(&blocks)
        })
        .collect();
    let corrs = (0..k).map(|i| first.correspondence(i).clone()).collect();
    ProductSystemRep::new(
        n,
        sigma,
        corrs,
        first.stored_flips().clone(),
        twists,
        atildes,
        any_window.then_some(window),
    )
}

/// Untwisted pair `T₁ = X⊗I⊗I_W`, `T₂ = I⊗Y⊗I_W` on `C^a⊗C^b⊗W`.
/// The window is the product of the given coordinate windows.
pub fn gen_tensor_pair(
    x: &ComplexMatrix,
    x_window: &[usize],
    y: &ComplexMatrix,
    y_window: &[usize],
    w_dim: usize,
) -> Result<ProductSystemRep> {
    let (a, b) = (x.nrows(), y.nrows());
    if x.ncols() != a || y.ncols() != b || w_dim == 0 {
        return Err(Error::BadParams("tensor pair factors must be square and W_dim >= 1".into()));
    }
    let id_w = identity(w_dim);
    let t1 = kron(&kron(x, &identity(b))?, &id_w)?;
    let t2 = kron(&kron(&identity(a), y)?, &id_w)?;
    let mut window = Vec::new();
    for &p in x_window {
        for &q in y_window {
            for w in 0..w_dim {
                window.push((p * b + q) * w_dim + w);
            }
        }
    }
    window.sort_unstable();
    ProductSystemRep::new(
        a * b * w_dim,
        Vec::new(),
        vec![Correspondence::scalar(1), Correspondence::scalar(1)],
        BTreeMap::new(),
        BTreeMap::new(),
        vec![t1, t2],
        Some(window),
    )
}

/// Untwisted pair on `(F⊗F ⊕ F⊗C ⊕ C⊗F ⊕ C⊗C)⊗W`, where `F = C^{N+1}`
/// carries the truncated creation operator and `C = C^r` the cyclic shift.
/// Block order matches the summands `{1,2}`, `{1}`, `{2}`, `{}`.
pub fn gen_four_block_pair(big_n: usize, r: usize, w_dim: usize) -> Result<ProductSystemRep> {
    let fock = gen_truncated_fock(1, big_n, 1)?;
    let j = fock.atilde().clone();
    let j_window: Vec<usize> = fock.window_mask().expect("fock has a window").to_vec();
    let c = gen_cyclic_shift(r)?.atilde().clone();
    let c_window: Vec<usize> = (0..r).collect();
    let blocks = [
        gen_tensor_pair(&j, &j_window, &j, &j_window, w_dim)?,
        gen_tensor_pair(&j, &j_window, &c, &c_window, w_dim)?,
        gen_tensor_pair(&c, &c_window, &j, &j_window, w_dim)?,
        gen_tensor_pair(&c, &c_window, &c, &c_window, w_dim)?,
    ];
    gen_product_direct_sum(&blocks)
}

/// The cyclic permutation `e_m ↦ e_{(m+1) mod n}` as a `d = 1` representation.
pub fn gen_cyclic_shift(n: usize) -> Result<CovariantRep> {
    if n == 0 {
        return Err(Error::BadParams("n must be at least 1".into()));
    }
    gen_weighted_cyclic_shift(1, n, &[vec![c64(1.0, 0.0); n]])
}

/// `Ã = [U_1 | … | U_d]/√d` for unitaries `U_i` on `C^n`: a row coisometry,
/// `ÃÃ* = I`, with surjective `Ã`.
pub fn gen_row_coisometry(unitaries: &[ComplexMatrix], tol: &ToleranceConfig) -> Result<CovariantRep> {
    let first = unitaries.first().ok_or_else(|| Error::BadParams("no unitaries".into()))?;
    let n = first.nrows();
    let d = unitaries.len();
    let mut a = ComplexMatrix::zeros(n, d * n);
    let scale = 1.0 / (d as f64).sqrt();
    for (i, u) in unitaries.iter().enumerate() {
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimensionMismatch {
                op: "gen_row_coisometry",
                expected: n,
                got: u.nrows(),
            });
        }
        let residual = op_norm(&(u.adjoint() * u - identity(n)));
        if residual > tol.eq_tol {
            return Err(Error::NotIsometric { residual });
        }
        a.columns_mut(i * n, n).copy_from(&u.scale(scale));
    }
    CovariantRep::new(n, Vec::new(), Correspondence::scalar(d), a, None)
}

/// Seeded Haar-like random unitary via QR of a complex Gaussian matrix.
pub fn gen_random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| {
        let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        c64(r * t.cos(), r * t.sin())
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column phases so the distribution does not depend on QR conventions
    let mut q = q;
    for j in 0..n {
        let z = r[(j, j)];
        if z.norm() > 0.0 {
            let phase = z / z.norm();
            let col = q.column(j) * phase;
            q.set_column(j, &col);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kernel, smallest_singular};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn truncated_fock_d1_is_nilpotent_shift() {
        let rep = gen_truncated_fock(1, 2, 1).unwrap();
        let mut j = ComplexMatrix::zeros(3, 3);
        j[(1, 0)] = c64(1.0, 0.0);
        j[(2, 1)] = c64(1.0, 0.0);
        assert_eq!(rep.atilde(), &j);
        assert_eq!(rep.window_mask(), Some(&[0, 1][..]));
    }

    #[test]
    fn truncated_fock_d2_levels() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        assert_eq!(rep.k_dim(), 15);
        let ker = kernel(&rep.atilde().adjoint(), &tol()).unwrap();
        assert_eq!(ker.rank(), 1);
        // kernel of Ã* is the vacuum
        assert!((ker.basis()[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncated_fock_wandering_rank_is_w_dim() {
        for (d, n, w) in [(1, 3, 2), (2, 2, 3), (3, 2, 1)] {
            let rep = gen_truncated_fock(d, n, w).unwrap();
            let ker = kernel(&rep.atilde().adjoint(), &tol()).unwrap();
            assert_eq!(ker.rank(), w, "d={d} N={n} W={w}");
        }
    }

    #[test]
    fn truncated_fock_isometry_defect_by_level() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let a = rep.atilde();
        let defect = a.adjoint() * a - identity(a.ncols());
        let n = rep.k_dim();
        // coordinates of E⊗K belonging to levels < 3 and to level 3
        let (inner, top): (Vec<usize>, Vec<usize>) =
            (0..a.ncols()).partition(|&c| (c % n) < 7);
        let sub = |rows: &[usize], cols: &[usize]| {
            ComplexMatrix::from_fn(rows.len(), cols.len(), |r, c| defect[(rows[r], cols[c])])
        };
        assert_eq!(op_norm(&sub(&inner, &inner)), 0.0);
        assert!((op_norm(&sub(&top, &top)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cyclic_shift_is_unitary_permutation() {
        let rep = gen_cyclic_shift(5).unwrap();
        let a = rep.atilde();
        assert_eq!(a[(1, 0)], c64(1.0, 0.0));
        assert_eq!(a[(0, 4)], c64(1.0, 0.0));
        assert_eq!(a.adjoint() * a, identity(5));
    }

    #[test]
    fn weighted_cyclic_unimodular_weights_are_isometric_for_n1() {
        let w: Vec<Complex64> = (0..6).map(|m| Complex64::from_polar(1.0, 0.3 * m as f64)).collect();
        let rep = gen_weighted_cyclic_shift(1, 6, &[w]).unwrap();
        let a = rep.atilde();
        assert!(op_norm(&(a.adjoint() * a - identity(6))) < 1e-12);
    }

    #[test]
    fn weighted_cyclic_constant_modulus_n1() {
        let gamma = 0.35;
        let w: Vec<Complex64> = (0..4).map(|m| Complex64::from_polar(gamma, m as f64)).collect();
        let rep = gen_weighted_cyclic_shift(1, 4, &[w]).unwrap();
        assert!((smallest_singular(rep.atilde()) - gamma).abs() < 1e-12);
    }

    #[test]
    fn weighted_cyclic_two_directions_row_structure() {
        // n = 2, N = 4: both blocks hit every row twice in total, so ÃÃ* = 2γ²I,
        // while the 4x8 matrix cannot be bounded below.
        let gamma = 0.6;
        let w = vec![vec![c64(gamma, 0.0); 4], vec![c64(0.0, gamma); 4]];
        let rep = gen_weighted_cyclic_shift(2, 4, &w).unwrap();
        let a = rep.atilde();
        assert!(op_norm(&(a * a.adjoint() - identity(4).scale(2.0 * gamma * gamma))) < 1e-12);
        assert_eq!(smallest_singular(a), 0.0);
    }

    #[test]
    fn weighted_cyclic_rejects_large_weights() {
        let err = gen_weighted_cyclic_shift(1, 2, &[vec![c64(1.0, 0.0), c64(0.0, 1.5)]]).unwrap_err();
        assert!(matches!(err, Error::BadWeights { direction: 0, index: 1, .. }));
        assert!(gen_weighted_cyclic_shift(3, 2, &[]).is_err());
    }

    #[test]
    fn scaled_isometry_scales_atilde() {
        let base = CovariantRep::from_operator(gen_random_unitary(4, 7)).unwrap();
        let rep = gen_scaled_isometry(&base, 0.5, &tol()).unwrap();
        assert!((smallest_singular(rep.atilde()) - 0.5).abs() < 1e-12);
        let twice = gen_scaled_isometry(&base, 0.5 * 0.8, &tol()).unwrap();
        assert!(op_norm(&(twice.atilde() - gen_scaled_isometry(&base, 0.8, &tol()).unwrap().atilde().scale(0.5))) < 1e-15);
        assert!(matches!(
            gen_scaled_isometry(&rep, 0.5, &tol()).unwrap_err(),
            Error::NotIsometric { .. }
        ));
        assert!(matches!(gen_scaled_isometry(&base, 1.0, &tol()), Err(Error::BadParams(_))));
    }

    #[test]
    fn random_unitary_is_unitary_and_seeded() {
        let u = gen_random_unitary(6, 3);
        assert!(op_norm(&(u.adjoint() * &u - identity(6))) < 1e-12);
        assert_eq!(u, gen_random_unitary(6, 3));
        assert_ne!(u, gen_random_unitary(6, 4));
    }

    #[test]
    fn twisted_pair_relations_hold() {
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 5.0);
        let psr = gen_twisted_fock_pair(omega, 3, 1, &tol()).unwrap();
        let (t1, t2) = (psr.atilde(0), psr.atilde(1));
        let u = psr.twist(0, 1);
        assert!(op_norm(&(t1 * t2 - &u * t2 * t1)) < 1e-12);
        assert!(op_norm(&(t2.adjoint() * t1 - &u * t1 * t2.adjoint())) < 1e-12);
        assert_eq!(psr.window_mask().unwrap().len(), 9);
    }

    #[test]
    fn twisted_pair_rejects_non_unimodular() {
        assert!(matches!(
            gen_twisted_fock_pair(c64(1.1, 0.0), 2, 1, &tol()).unwrap_err(),
            Error::NotUnimodular { .. }
        ));
    }

    #[test]
    fn block_sum_single_summand_is_identity() {
        let rep = gen_truncated_fock(2, 2, 1).unwrap();
        let sum = gen_block_direct_sum(std::slice::from_ref(&rep)).unwrap();
        assert_eq!(sum.atilde(), rep.atilde());
        assert_eq!(sum.window_mask(), rep.window_mask());
    }

    #[test]
    fn block_sum_respects_e_major_ordering() {
        let a = gen_truncated_fock(2, 1, 1).unwrap();
        let u = gen_row_coisometry(&[identity(2), gen_random_unitary(2, 1)], &tol()).unwrap();
        let sum = gen_block_direct_sum(&[a.clone(), u.clone()]).unwrap();
        assert_eq!(sum.k_dim(), 5);
        for i in 0..2 {
            let blk = sum.block(i);
            assert_eq!(blk.view((0, 0), (3, 3)).into_owned(), a.block(i));
            assert_eq!(blk.view((3, 3), (2, 2)).into_owned(), u.block(i));
            assert!(blk.view((0, 3), (3, 2)).iter().all(|z| *z == c64(0.0, 0.0)));
        }
        assert_eq!(sum.window_mask().unwrap(), &[0, 3, 4]);
    }

    #[test]
    fn block_sum_associates() {
        let a = CovariantRep::from_operator(gen_random_unitary(2, 1)).unwrap();
        let b = gen_truncated_fock(1, 2, 1).unwrap();
        let c = gen_cyclic_shift(3).unwrap();
        let left = gen_block_direct_sum(&[gen_block_direct_sum(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = gen_block_direct_sum(&[a, gen_block_direct_sum(&[b, c]).unwrap()]).unwrap();
        assert_eq!(left.atilde(), right.atilde());
    }

    #[test]
    fn block_sum_rejects_mismatched_e() {
        let a = gen_truncated_fock(1, 2, 1).unwrap();
        let b = gen_truncated_fock(2, 2, 1).unwrap();
        assert!(matches!(
            gen_block_direct_sum(&[a, b]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn row_coisometry_is_coisometric() {
        let rep = gen_row_coisometry(&[identity(2), gen_random_unitary(2, 9)], &tol()).unwrap();
        let a = rep.atilde();
        assert!(op_norm(&(a * a.adjoint() - identity(2))) < 1e-12);
    }

    #[test]
    fn four_block_dimensions() {
        let psr = gen_four_block_pair(2, 2, 1).unwrap();
        assert_eq!(psr.k_dim(), 9 + 6 + 6 + 4);
        // commuting, untwisted
        let (t1, t2) = (psr.atilde(0), psr.atilde(1));
        assert!(op_norm(&(t1 * t2 - t2 * t1)) < 1e-15);
        assert!(op_norm(&(t1.adjoint() * t2 - t2 * t1.adjoint())) < 1e-15);
    }
}
