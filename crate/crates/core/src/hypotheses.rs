//! Checkers for the hypotheses the decompositions rely on.
//!
//! Every checker returns a [`CheckReport`]. Operator identities are
//! evaluated on full matrices in operator norm; operator inequalities are
//! compiled to Hermitian forms and decided by their smallest eigenvalue.

use crate::error::{Error, Result};
use crate::linalg::{
    block_diag, hermitize, id_kron, identity, image, kron, min_eigenpair, op_norm, smallest_singular, ComplexMatrix,
    ComplexVector, Frame, ToleranceConfig,
};
use crate::report::{CheckReport, Witness, Worst};
use crate::repn::{iterate_atilde, CovariantRep, ProductSystemRep};

/// Where an identity is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scope {
    Full,
    /// Compress to the representation's window mask (falls back to the full
    /// space, with a note, when there is none).
    Window,
}

/// Projector onto `C^{lift}⊗W` for the window `W`, or `None` for the full space.
struct Compression {
    window: Option<Frame>,
}

impl Compression {
    fn new(window: Option<Frame>, scope: Scope) -> Self {
        Compression {
            window: if scope == Scope::Window { window } else { None },
        }
    }

    fn active(&self) -> bool {
        self.window.is_some()
    }

    fn projector(&self, lift: usize) -> Result<Option<ComplexMatrix>> {
        match &self.window {
            None => Ok(None),
            Some(w) => Ok(Some(id_kron(lift, &w.projector())?)),
        }
    }

    /// `R·(I_lift ⊗ P_W)`
    fn domain(&self, r: ComplexMatrix, lift: usize) -> Result<ComplexMatrix> {
        Ok(match self.projector(lift)? {
            None => r,
            Some(p) => r * p,
        })
    }

    /// `(I_lift ⊗ P_W)·H·(I_lift ⊗ P_W)`
    fn both(&self, h: ComplexMatrix, lift: usize) -> Result<ComplexMatrix> {
        Ok(match self.projector(lift)? {
            None => h,
            Some(p) => &p * h * &p,
        })
    }

    fn finish(&self, mut report: CheckReport, scope: Scope) -> CheckReport {
        if scope == Scope::Window && !self.active() {
            report.notes.push("no window mask; evaluated on the full space".into());
        }
        report
    }
}

fn pow(d: usize, e: usize) -> usize {
    d.pow(e as u32)
}

/// `‖Ã*Ã − I‖`.
pub fn check_isometric(rep: &CovariantRep, scope: Scope, tol: &ToleranceConfig) -> Result<CheckReport> {
    let comp = Compression::new(rep.window_frame(), scope);
    let a = rep.atilde();
    let h = comp.both(a.adjoint() * a - identity(a.ncols()), rep.d())?;
    let mut w = Worst::default();
    w.consider("A*A - I", &h);
    Ok(comp.finish(w.into_report("isometric", tol.eq_tol, comp.active()), scope))
}

/// Near-isometry: (a) `δ‖x‖ ≤ ‖Ãx‖ ≤ ‖x‖` with `δ = smallest_singular(Ã)`,
/// and (b) `ran(Ã_m*Ã_{m+1}) ⊆ E^{⊗m}⊗ran Ã` for `1 ≤ m ≤ m_max`.
pub fn check_near_isometric(
    rep: &CovariantRep,
    m_max: usize,
    scope: Scope,
    tol: &ToleranceConfig,
) -> Result<(CheckReport, CheckReport)> {
    if m_max == 0 {
        return Err(Error::BadParams("m_max must be at least 1".into()));
    }
    let comp = Compression::new(rep.window_frame(), scope);
    let (n, d) = (rep.k_dim(), rep.d());
    let a = rep.atilde();

    // (a): restrict Ã to E⊗W through the lifted window basis
    let lift = match &comp.window {
        Some(w) => Some(id_kron(d, w.basis())?),
        None => None,
    };
    let restricted = match &lift {
        Some(l) => a * l,
        None => a.clone(),
    };
    let delta = smallest_singular(&restricted);
    let upper = op_norm(&restricted);
    let bounded_below = delta > tol.rank_tol;
    let mut residual = (upper - 1.0).max(0.0);
    if !bounded_below {
        residual = residual.max(1.0 - delta);
    }
    let mut rep_a = CheckReport::new("near_isometric_a", residual, tol.eq_tol, comp.active())
        .with_value("delta", delta)
        .with_value("upper", upper);
    rep_a.passed = bounded_below && upper <= 1.0 + tol.eq_tol;
    if !rep_a.passed {
        let local = if bounded_below {
            top_singular_vector(&restricted)
        } else {
            weakest_vector(&restricted, tol)
        };
        let v = match &lift {
            Some(l) => l * local,
            None => local,
        };
        rep_a.witness = Some(Witness::from_vector(&v));
        if !bounded_below {
            rep_a.notes.push("not bounded below: witness lies in the kernel".into());
        }
    }

    // (b)
    let ran = image(a, &Frame::full(d * n), tol)?;
    let p_ran = ran.projector();
    let mut worst = Worst::default();
    let mut a_m = a.clone();
    for m in 1..=m_max {
        let a_next = &a_m * id_kron(pow(d, m), a)?;
        let x = a_m.adjoint() * &a_next;
        let outside = identity(pow(d, m) * n) - id_kron(pow(d, m), &p_ran)?;
        let r = comp.domain(outside * x, pow(d, m + 1))?;
        worst.consider(format!("m={m}"), &r);
        a_m = a_next;
    }
    let rep_b = worst
        .into_report("near_isometric_b", tol.eq_tol, comp.active())
        .with_value("horizon", m_max as f64)
        .with_note(format!("range inclusion verified for 1 <= m <= {m_max} only"));
    Ok((comp.finish(rep_a, scope), comp.finish(rep_b, scope)))
}

fn top_singular_vector(a: &ComplexMatrix) -> ComplexVector {
    let svd = nalgebra::SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.expect("v requested");
    let idx = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|x| x.0)
        .unwrap_or(0);
    v_t.row(idx).adjoint()
}

/// A unit vector in (or nearest to) the kernel. Prefers an exactly vanishing
/// coordinate column, so that the witness is a basis vector when one exists.
fn weakest_vector(a: &ComplexMatrix, tol: &ToleranceConfig) -> ComplexVector {
    let scale = op_norm(a).max(1.0);
    for c in 0..a.ncols() {
        if a.column(c).norm() <= tol.rank_tol * scale {
            let mut v = ComplexVector::zeros(a.ncols());
            v[c] = num_complex::Complex64::new(1.0, 0.0);
            return v;
        }
    }
    crate::linalg::weakest_direction(a).unwrap_or_else(|| ComplexVector::zeros(a.ncols()))
}

/// Operator-inequality conditions compiled to PSD checks.
#[derive(Clone, Debug, PartialEq)]
pub enum ConcavityCondition {
    /// `2B*B − Ã₂*Ã₂ − I ⪰ 0` on `E^{⊗2}⊗K`, `B = I_E⊗Ã`.
    Concave,
    /// `[[2I − B*B, −B*], [−B, 2Ã*Ã − I]] ⪰ 0` on `(E^{⊗2}⊗K) ⊕ (E⊗K)`.
    BlockNorm,
    /// `2(Ã*Ã)² − Ã*Ã − Ã*Ã₂Ã₂*Ã ⪰ 0` on `E⊗K`.
    GramSquare,
    /// `l_m(B_m*B_m − I) + l·I − Ã_m*Ã_m ⪰ 0` for `m = 1..=seq.len()`,
    /// `B_m = I_{E^{⊗m-1}}⊗Ã`.
    Weighted { l: f64, seq: Vec<f64> },
}

impl ConcavityCondition {
    pub fn name(&self) -> &'static str {
        match self {
            ConcavityCondition::Concave => "concavity",
            ConcavityCondition::BlockNorm => "block_norm_bound",
            ConcavityCondition::GramSquare => "gram_square_bound",
            ConcavityCondition::Weighted { .. } => "weighted_sequence_bound",
        }
    }
}

/// Decide a compiled Hermitian form by its smallest eigenvalue.
fn psd_report(name: &str, h: &ComplexMatrix, tol: &ToleranceConfig, windowed: bool) -> Result<CheckReport> {
    let (lambda, v) = min_eigenpair(h, tol)?;
    let mut r = CheckReport::new(name, (-lambda).max(0.0), -tol.psd_tol, windowed).with_value("min_eigenvalue", lambda);
    r.passed = lambda >= tol.psd_tol;
    if h.nrows() > 0 {
        r.witness = Some(Witness::from_vector(&v));
    }
    Ok(r)
}

pub fn check_concavity(
    rep: &CovariantRep,
    condition: &ConcavityCondition,
    scope: Scope,
    tol: &ToleranceConfig,
) -> Result<CheckReport> {
    let comp = Compression::new(rep.window_frame(), scope);
    let (n, d) = (rep.k_dim(), rep.d());
    let a = rep.atilde();
    let gram = a.adjoint() * a;
    let b = id_kron(d, a)?;
    let a2 = a * &b;
    let name = condition.name();
    let report = match condition {
        ConcavityCondition::Concave => {
            let h = (b.adjoint() * &b).scale(2.0) - a2.adjoint() * &a2 - identity(d * d * n);
            psd_report(name, &hermitize(&comp.both(h, d * d)?), tol, comp.active())?
        }
        ConcavityCondition::BlockNorm => {
            let dim2 = d * d * n;
            let dim1 = d * n;
            let mut h = ComplexMatrix::zeros(dim2 + dim1, dim2 + dim1);
            h.view_mut((0, 0), (dim2, dim2))
                .copy_from(&(identity(dim2).scale(2.0) - b.adjoint() * &b));
            h.view_mut((0, dim2), (dim2, dim1)).copy_from(&(-b.adjoint()));
            h.view_mut((dim2, 0), (dim1, dim2)).copy_from(&(-&b));
            h.view_mut((dim2, dim2), (dim1, dim1))
                .copy_from(&(gram.scale(2.0) - identity(dim1)));
            let h = match (comp.projector(d * d)?, comp.projector(d)?) {
                (Some(p2), Some(p1)) => {
                    let p = block_diag(&[&p2, &p1]);
                    &p * h * &p
                }
                _ => h,
            };
            psd_report(name, &hermitize(&h), tol, comp.active())?
        }
        ConcavityCondition::GramSquare => {
            let h = (&gram * &gram).scale(2.0) - &gram - a.adjoint() * &a2 * a2.adjoint() * a;
            psd_report(name, &hermitize(&comp.both(h, d)?), tol, comp.active())?
        }
        ConcavityCondition::Weighted { l, seq } => {
            if !(l.is_finite() && *l > 0.0) || seq.is_empty() || seq.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadParams(
                    "weighted condition needs l > 0 and a nonempty finite sequence l_1, ..".into(),
                ));
            }
            let mut worst: Option<CheckReport> = None;
            for (idx, &lm) in seq.iter().enumerate() {
                let m = idx + 1;
                let bm = id_kron(pow(d, m - 1), a)?;
                let am = iterate_atilde(a, d, m)?;
                let dim = pow(d, m) * n;
                let h = (bm.adjoint() * &bm - identity(dim)).scale(lm) + identity(dim).scale(*l)
                    - am.adjoint() * &am;
                let r = psd_report(name, &hermitize(&comp.both(h, pow(d, m))?), tol, comp.active())?;
                let lambda = r.values["min_eigenvalue"];
                if worst
                    .as_ref()
                    .is_none_or(|w| lambda < w.values["min_eigenvalue"])
                {
                    worst = Some(r.with_value("level", m as f64));
                }
            }
            let mut r = worst.expect("nonempty sequence");
            r.worst = r.values.get("level").map(|m| format!("m={m}"));
            r
        }
    };
    Ok(comp.finish(report, scope))
}

fn generator_pairs(psr: &ProductSystemRep) -> Vec<(usize, usize)> {
    let k = psr.k();
    (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|(i, j)| i != j).collect()
}

/// Commutation, unitarity and commutant membership of the twists, and
/// unitarity of the flips.
pub fn check_twist_family(psr: &ProductSystemRep, tol: &ToleranceConfig) -> Result<CheckReport> {
    let n = psr.k_dim();
    let mut worst = Worst::default();
    let pairs = generator_pairs(psr);
    let twists: Vec<((usize, usize), ComplexMatrix)> = pairs.iter().map(|&(i, j)| ((i, j), psr.twist(i, j))).collect();
    for ((i, j), u) in &twists {
        let label = format!("U[{},{}]", i + 1, j + 1);
        worst.consider(format!("{label} unitarity"), &(u.adjoint() * u - identity(n)));
        worst.consider(format!("{label} co-unitarity"), &(u * u.adjoint() - identity(n)));
        for (g, s) in psr.sigma().iter().enumerate() {
            worst.consider(format!("{label} commutant[{}]", g + 1), &(u * s - s * u));
        }
        for ((p, q), v) in &twists {
            worst.consider(format!("{label} vs U[{},{}]", p + 1, q + 1), &(u * v - v * u));
        }
    }
    for &(i, j) in &pairs {
        let uij = psr.flip(i, j);
        let uji = psr.flip(j, i);
        let dd = psr.d(i) * psr.d(j);
        worst.consider(format!("u[{},{}]u[{},{}]", i + 1, j + 1, j + 1, i + 1), &(&uji * &uij - identity(dd)));
        worst.consider(format!("u[{},{}] unitarity", i + 1, j + 1), &(uij.adjoint() * &uij - identity(dd)));
    }
    if pairs.is_empty() {
        return Ok(CheckReport::vacuous("twist_family", tol.eq_tol, "single direction"));
    }
    Ok(worst.into_report("twist_family", tol.eq_tol, false))
}

/// The twisted relation
/// `Ã⁽ⁱ⁾(I⊗Ã⁽ʲ⁾) = U_{ij}Ã⁽ʲ⁾(I⊗Ã⁽ⁱ⁾)(u_{i,j}⊗I_K)` for ordered pairs,
/// and `Ã⁽ˡ⁾(I⊗U_{ij}) = U_{ij}Ã⁽ˡ⁾` for all `l`.
pub fn check_twisted(psr: &ProductSystemRep, scope: Scope, tol: &ToleranceConfig) -> Result<CheckReport> {
    let comp = Compression::new(psr.window_frame(), scope);
    let n = psr.k_dim();
    let id_n = identity(n);
    let mut worst = Worst::default();
    let mut ucomm = Worst::default();
    for (i, j) in generator_pairs(psr) {
        let (ai, aj) = (psr.atilde(i), psr.atilde(j));
        let (di, dj) = (psr.d(i), psr.d(j));
        let u = psr.twist(i, j);
        let lhs = ai * id_kron(di, aj)?;
        let rhs = &u * aj * id_kron(dj, ai)? * kron(&psr.flip(i, j), &id_n)?;
        worst.consider(
            format!("twist ({},{})", i + 1, j + 1),
            &comp.domain(lhs - rhs, di * dj)?,
        );
        for l in 0..psr.k() {
            let al = psr.atilde(l);
            let r = al * id_kron(psr.d(l), &u)? - &u * al;
            ucomm.consider(
                format!("A[{}] vs U[{},{}]", l + 1, i + 1, j + 1),
                &comp.domain(r, psr.d(l))?,
            );
        }
    }
    if psr.k() < 2 {
        return Ok(CheckReport::vacuous("twisted", tol.eq_tol, "single direction"));
    }
    let twist_residual = worst.residual;
    let ucomm_residual = ucomm.residual;
    let report = if ucomm.residual > worst.residual {
        ucomm.into_report("twisted", tol.eq_tol, comp.active())
    } else {
        worst.into_report("twisted", tol.eq_tol, comp.active())
    };
    let report = report
        .with_value("twist_relation", twist_residual)
        .with_value("twist_intertwines_atilde", ucomm_residual);
    Ok(comp.finish(report, scope))
}

/// Agreement of the two forms of the twisted relation,
/// `U_{ij}Ã⁽ʲ⁾(I⊗Ã⁽ⁱ⁾)(u_{i,j}⊗I)` and `Ã⁽ʲ⁾(I⊗Ã⁽ⁱ⁾)(u_{i,j}⊗U_{ij})`.
pub fn check_twisted_forms(psr: &ProductSystemRep, scope: Scope, tol: &ToleranceConfig) -> Result<CheckReport> {
    let comp = Compression::new(psr.window_frame(), scope);
    let id_n = identity(psr.k_dim());
    let mut worst = Worst::default();
    for (i, j) in generator_pairs(psr) {
        let (ai, aj) = (psr.atilde(i), psr.atilde(j));
        let u = psr.twist(i, j);
        let flip = psr.flip(i, j);
        let inner = aj * id_kron(psr.d(j), ai)?;
        let first = &u * &inner * kron(&flip, &id_n)?;
        let second = &inner * kron(&flip, &u)?;
        worst.consider(
            format!("({},{})", i + 1, j + 1),
            &comp.domain(first - second, psr.d(i) * psr.d(j))?,
        );
    }
    Ok(comp.finish(worst.into_report("twisted_forms_agree", tol.eq_tol, comp.active()), scope))
}

/// The doubly twisted relation
/// `Ã⁽ʲ⁾*Ã⁽ⁱ⁾ = (I⊗U_{ij})(I⊗Ã⁽ⁱ⁾)(u_{i,j}⊗I_K)(I⊗Ã⁽ʲ⁾*)` for ordered pairs.
///
/// The report carries the residual between this form and the factored form
/// `(I⊗Ã⁽ⁱ⁾)(u_{i,j}⊗U_{ij})(I⊗Ã⁽ʲ⁾*)` as the value `form_consistency`.
pub fn check_doubly_twisted(psr: &ProductSystemRep, scope: Scope, tol: &ToleranceConfig) -> Result<CheckReport> {
    if psr.k() < 2 {
        return Ok(CheckReport::vacuous("doubly_twisted", tol.eq_tol, "single direction"));
    }
    let comp = Compression::new(psr.window_frame(), scope);
    let id_n = identity(psr.k_dim());
    let mut worst = Worst::default();
    let mut consistency: f64 = 0.0;
    for (i, j) in generator_pairs(psr) {
        let (ai, aj) = (psr.atilde(i), psr.atilde(j));
        let (di, dj) = (psr.d(i), psr.d(j));
        let u = psr.twist(i, j);
        let flip = psr.flip(i, j);
        let lhs = aj.adjoint() * ai;
        let tail = id_kron(di, &aj.adjoint())?;
        let rhs = id_kron(dj, &u)? * id_kron(dj, ai)? * kron(&flip, &id_n)? * &tail;
        let factored = id_kron(dj, ai)? * kron(&flip, &u)? * &tail;
        worst.consider(format!("({},{})", i + 1, j + 1), &comp.domain(lhs - &rhs, di)?);
        consistency = consistency.max(op_norm(&comp.domain(rhs - factored, di)?));
    }
    let mut report = worst
        .into_report("doubly_twisted", tol.eq_tol, comp.active())
        .with_value("form_consistency", consistency);
    let twisted = check_twisted(psr, scope, tol)?;
    if !twisted.passed {
        report
            .notes
            .push(format!("twisted relation fails (residual {:.3e})", twisted.residual));
    }
    Ok(comp.finish(report, scope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, quadratic_form};
    use crate::repn::{gen_random_unitary, gen_scaled_isometry, gen_truncated_fock, gen_twisted_fock_pair, gen_weighted_cyclic_shift};
    use num_complex::Complex64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn unitary_rep(n: usize, seed: u64) -> CovariantRep {
        CovariantRep::from_operator(gen_random_unitary(n, seed)).unwrap()
    }

    #[test]
    fn unitary_is_isometric() {
        let r = check_isometric(&unitary_rep(3, 1), Scope::Full, &tol()).unwrap();
        assert!(r.passed && r.residual < 1e-14);
    }

    #[test]
    fn fock_isometric_only_on_window() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let full = check_isometric(&rep, Scope::Full, &tol()).unwrap();
        assert!(!full.passed);
        assert!((full.residual - 1.0).abs() < 1e-14);
        assert!(full.witness.is_some());
        let win = check_isometric(&rep, Scope::Window, &tol()).unwrap();
        assert!(win.passed && win.window_restricted);
    }

    #[test]
    fn scaled_isometry_fails_isometric_by_one_minus_beta_squared() {
        let rep = gen_scaled_isometry(&unitary_rep(2, 5), 0.5, &tol()).unwrap();
        let r = check_isometric(&rep, Scope::Full, &tol()).unwrap();
        assert!(!r.passed);
        assert!((r.residual - 0.75).abs() < 1e-12);
    }

    #[test]
    fn scaled_isometry_is_near_isometric_with_delta_beta() {
        for beta in [0.5, 0.9, 0.13] {
            let rep = gen_scaled_isometry(&unitary_rep(4, 2), beta, &tol()).unwrap();
            let (a, b) = check_near_isometric(&rep, 4, Scope::Full, &tol()).unwrap();
            assert!(a.passed);
            assert!((a.values["delta"] - beta).abs() < 1e-10);
            assert!(b.passed && b.residual < 1e-12);
        }
    }

    #[test]
    fn scaled_fock_window_is_near_isometric() {
        let fock = gen_truncated_fock(2, 3, 1).unwrap();
        // Ã is not isometric on the full space, so scale by hand and keep the window.
        let rep = CovariantRep::new(
            fock.k_dim(),
            vec![],
            fock.correspondence().clone(),
            fock.atilde().scale(0.9),
            fock.window_mask().map(<[usize]>::to_vec),
        )
        .unwrap();
        let (a, _) = check_near_isometric(&rep, 2, Scope::Window, &tol()).unwrap();
        assert!(a.passed && a.window_restricted);
        assert!((a.values["delta"] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn fock_fails_near_isometry_with_top_level_witness() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let (a, _) = check_near_isometric(&rep, 2, Scope::Full, &tol()).unwrap();
        assert!(!a.passed);
        assert_eq!(a.values["delta"], 0.0);
        let v = a.witness.unwrap().as_vector().unwrap();
        // the witness is a basis vector e_i ⊗ h with h in the top level (indices 7..15)
        let pos = v.iter().position(|z| z.norm() > 0.5).unwrap();
        assert!(pos % 15 >= 7);
        assert!((rep.atilde() * v).norm() < 1e-15);
    }

    #[test]
    fn weighted_cyclic_with_vanishing_weight_fails_at_e0() {
        let gamma = 0.5;
        let mut w = vec![vec![c64(gamma, 0.0); 4], vec![c64(0.8, 0.0); 4]];
        w[0][0] = c64(0.0, 0.0);
        w[1][0] = c64(0.0, 0.0);
        let rep = gen_weighted_cyclic_shift(2, 4, &w).unwrap();
        let (a, _) = check_near_isometric(&rep, 2, Scope::Full, &tol()).unwrap();
        assert!(!a.passed);
        let v = a.witness.unwrap().as_vector().unwrap();
        // δ_1 ⊗ e_0
        assert_eq!(v[0], c64(1.0, 0.0));
    }

    #[test]
    fn invertible_operator_near_isometry() {
        let t = ComplexMatrix::from_row_slice(2, 2, &[c64(0.5, 0.0), c64(0.1, 0.0), c64(0.0, 0.0), c64(0.7, 0.0)]);
        let rep = CovariantRep::from_operator(t).unwrap();
        let (a, b) = check_near_isometric(&rep, 3, Scope::Full, &tol()).unwrap();
        assert!(a.passed);
        assert!(b.passed && b.residual < 1e-14);
    }

    #[test]
    fn isometric_rep_near_isometric_with_delta_one() {
        let rep = gen_truncated_fock(2, 2, 1).unwrap();
        assert!(check_isometric(&rep, Scope::Window, &tol()).unwrap().passed);
        let u = unitary_rep(3, 11);
        let (a, b) = check_near_isometric(&u, 4, Scope::Full, &tol()).unwrap();
        assert!((a.values["delta"] - 1.0).abs() < 1e-8 && a.passed && b.passed);
    }

    #[test]
    fn concavity_isometric_is_tight() {
        let r = check_concavity(&unitary_rep(3, 4), &ConcavityCondition::Concave, Scope::Full, &tol()).unwrap();
        assert!(r.passed);
        assert!(r.values["min_eigenvalue"].abs() < 1e-12);
    }

    #[test]
    fn concavity_scaled_isometry_fails_with_witness() {
        let beta: f64 = 0.5;
        let rep = gen_scaled_isometry(&unitary_rep(3, 4), beta, &tol()).unwrap();
        let r = check_concavity(&rep, &ConcavityCondition::Concave, Scope::Full, &tol()).unwrap();
        assert!(!r.passed);
        let expected = -(1.0 - beta * beta).powi(2);
        assert!((r.values["min_eigenvalue"] - expected).abs() < 1e-12);
        // re-evaluate the form on the witness independently
        let v = r.witness.unwrap().as_vector().unwrap();
        let b = id_kron(1, rep.atilde()).unwrap();
        let a2 = rep.atilde() * &b;
        let bv = &b * &v;
        let a2v = &a2 * &v;
        let value = 2.0 * bv.norm_squared() - a2v.norm_squared() - v.norm_squared();
        assert!(value <= expected + 1e-9);
    }

    #[test]
    fn concavity_other_conditions_on_isometry() {
        let rep = unitary_rep(2, 8);
        for cond in [ConcavityCondition::BlockNorm, ConcavityCondition::GramSquare] {
            let r = check_concavity(&rep, &cond, Scope::Full, &tol()).unwrap();
            assert!(r.passed, "{cond:?}: {r:?}");
        }
        let r = check_concavity(
            &rep,
            &ConcavityCondition::Weighted { l: 1.0, seq: vec![0.0; 3] },
            Scope::Full,
            &tol(),
        )
        .unwrap();
        assert!(r.passed);
        assert!(check_concavity(&rep, &ConcavityCondition::Weighted { l: 1.0, seq: vec![] }, Scope::Full, &tol()).is_err());
    }

    #[test]
    fn gram_square_form_matches_direct_evaluation() {
        // quadratic form of the compiled matrix equals the norm expression
        let rep = gen_scaled_isometry(&unitary_rep(2, 3), 0.7, &tol()).unwrap();
        let r = check_concavity(&rep, &ConcavityCondition::GramSquare, Scope::Full, &tol()).unwrap();
        let v = r.witness.unwrap().as_vector().unwrap();
        let a = rep.atilde();
        let a2 = a * id_kron(1, a).unwrap();
        let av = a * &v;
        let direct = 2.0 * (a.adjoint() * &av).norm_squared() - av.norm_squared() - (a2.adjoint() * &av).norm_squared();
        assert!((direct - r.values["min_eigenvalue"]).abs() < 1e-12);
        let _ = quadratic_form;
    }

    fn fifth_root() -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 5.0)
    }

    #[test]
    fn twisted_pair_relations_on_window() {
        let psr = gen_twisted_fock_pair(fifth_root(), 3, 1, &tol()).unwrap();
        let t = check_twisted(&psr, Scope::Window, &tol()).unwrap();
        assert!(t.passed && t.residual < 1e-12, "{t:?}");
        let d = check_doubly_twisted(&psr, Scope::Window, &tol()).unwrap();
        assert!(d.passed && d.residual < 1e-12);
        assert!(d.values["form_consistency"] <= 1e-12);
        let f = check_twisted_forms(&psr, Scope::Window, &tol()).unwrap();
        assert!(f.passed && f.residual <= 1e-12);
        assert!(check_twist_family(&psr, &tol()).unwrap().passed);
    }

    #[test]
    fn wrong_twist_direction_fails() {
        let omega = fifth_root();
        let psr = gen_twisted_fock_pair(omega, 3, 1, &tol()).unwrap();
        let n = psr.k_dim();
        let bad = psr.clone().with_twist(0, 1, identity(n) * omega).unwrap();
        let t = check_twisted(&bad, Scope::Window, &tol()).unwrap();
        assert!(!t.passed);
        let t2t1 = psr.atilde(1) * psr.atilde(0);
        let expected = (omega - omega.conj()).norm() * op_norm(&t2t1);
        assert!((t.residual - expected).abs() < 1e-12, "{} vs {expected}", t.residual);
    }

    #[test]
    fn adjoint_swap_breaks_doubly_twisted() {
        let psr = gen_twisted_fock_pair(fifth_root(), 3, 1, &tol()).unwrap();
        let t2_adj = psr.atilde(1).adjoint();
        let bad = psr.with_atilde(1, t2_adj).unwrap();
        let d = check_doubly_twisted(&bad, Scope::Window, &tol()).unwrap();
        assert!(!d.passed && d.residual > 0.1);
        assert!(d.witness.is_some());
    }

    #[test]
    fn twist_family_detects_non_unitary_bump() {
        let psr = gen_twisted_fock_pair(c64(1.0, 0.0), 2, 1, &tol()).unwrap();
        let mut u = psr.twist(0, 1);
        u[(1, 1)] += c64(1e-4, 0.0);
        let bad = psr.with_twist(0, 1, u).unwrap();
        let r = check_twist_family(&bad, &tol()).unwrap();
        assert!(!r.passed);
        assert!(r.residual > 0.9e-4 && r.residual < 3e-4, "{}", r.residual);
    }

    #[test]
    fn diagonal_twists_commute() {
        let psr = gen_twisted_fock_pair(c64(1.0, 0.0), 2, 1, &tol()).unwrap();
        let n = psr.k_dim();
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_fn(n, |t, _| {
            Complex64::from_polar(1.0, 0.4 * t as f64)
        }));
        let r = check_twist_family(&psr.with_twist(0, 1, diag).unwrap(), &tol()).unwrap();
        assert!(r.passed && r.residual < 1e-14);
    }

    #[test]
    fn failing_reports_have_reevaluable_witnesses() {
        // ‖R w‖ for the twisted-relation residual recomputed from the witness
        let omega = fifth_root();
        let psr = gen_twisted_fock_pair(omega, 3, 1, &tol()).unwrap();
        let n = psr.k_dim();
        let bad = psr.with_twist(0, 1, identity(n) * omega).unwrap();
        let r = check_twisted(&bad, Scope::Full, &tol()).unwrap();
        let w = r.witness.clone().unwrap().as_vector().unwrap();
        let (t1, t2) = (bad.atilde(0), bad.atilde(1));
        let lhs = t1 * t2;
        let rhs = bad.twist(0, 1) * t2 * t1;
        let direct = ((lhs - rhs) * &w).norm();
        assert!(direct >= r.residual / 2.0 && direct <= 2.0 * r.residual);
    }
}
