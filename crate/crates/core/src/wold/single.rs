use serde::Serialize;

use super::{grade_sequence, overlap, range_sequence, SummandClass};
use crate::error::{Error, Result};
use crate::hypotheses::{check_concavity, check_isometric, check_near_isometric, ConcavityCondition, Scope};
use crate::linalg::{
    containment_residual, direct_sum_check, id_kron, kernel, op_norm, singular_values, span_of, subspace_distance,
    ComplexMatrix, Frame, ToleranceConfig,
};
use crate::report::{CheckReport, Worst};
use crate::repn::{check_covariance, CovariantRep};
use crate::structure::reducing_worst;

#[derive(Clone, Debug, Serialize)]
pub struct SingleResiduals {
    /// Largest `|⟨u, v⟩|` between basis vectors of different grades.
    pub grade_overlap: f64,
    /// Largest `|⟨u, v⟩|` between grade `m` and `ran Ã_{m+1}`.
    pub grade_range_overlap: f64,
    pub direct_sum_overlap: f64,
    /// `dim K − rank(K1 + K2)`.
    pub direct_sum_span_defect: f64,
    /// Worst invariance, co-invariance or σ-invariance defect of K1 and K2.
    pub reducing_defect: f64,
    pub reducing_worst: Option<String>,
    /// `ran Ã_m = 𝔄_m(N) ⊕ ran Ã_{m+1}` defect for each grade `m`.
    pub level_identity: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SingleDecomposition {
    pub wandering: Frame,
    pub grades: Vec<Frame>,
    pub k1: Frame,
    pub k2: Frame,
    /// `R_0 = K, R_1 = ran Ã, …`; at least one past the last grade when the
    /// cap allows.
    pub ranges: Vec<Frame>,
    pub hypotheses: Vec<CheckReport>,
    pub residuals: SingleResiduals,
    pub k1_stabilized: bool,
    pub k2_stabilized: bool,
    pub stabilized: bool,
    pub level_cap: usize,
}

struct Raw {
    wandering: Frame,
    grades: Vec<Frame>,
    k1: Frame,
    k2: Frame,
    ranges: Vec<Frame>,
    k1_stabilized: bool,
    k2_stabilized: bool,
}

fn raw_decomposition(a: &ComplexMatrix, d: usize, cap: usize, tol: &ToleranceConfig) -> Result<Raw> {
    let n = a.nrows();
    let wandering = kernel(&a.adjoint(), tol)?;
    let g = grade_sequence(a, d, &wandering, cap, tol)?;
    let r = range_sequence(a, d, &Frame::full(n), cap, g.grades.len(), tol)?;
    Ok(Raw {
        wandering,
        k1: g.span,
        k2: r.limit().clone(),
        k1_stabilized: g.stabilized,
        k2_stabilized: r.stabilized,
        ranges: r.frames,
        grades: g.grades,
    })
}

fn max_grade_overlap(grades: &[Frame]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in grades.iter().enumerate() {
        for b in &grades[i + 1..] {
            worst = worst.max(overlap(a, b));
        }
    }
    worst
}

fn attached_hypotheses(rep: &CovariantRep, cap: usize, tol: &ToleranceConfig) -> Result<Vec<CheckReport>> {
    let m_max = cap.clamp(1, 4);
    let mut out = vec![check_covariance(rep, tol)?];
    let mut scopes = vec![Scope::Full];
    if rep.window_mask().is_some() {
        scopes.push(Scope::Window);
    }
    for scope in scopes {
        out.push(check_isometric(rep, scope, tol)?);
        let (a, b) = check_near_isometric(rep, m_max, scope, tol)?;
        out.push(a);
        out.push(b);
    }
    for cond in [
        ConcavityCondition::Concave,
        ConcavityCondition::BlockNorm,
        ConcavityCondition::GramSquare,
    ] {
        out.push(check_concavity(rep, &cond, Scope::Full, tol)?);
    }
    Ok(out)
}

/// Wandering subspace, grades, `K1 = ⋁ grades` and `K2 = ⋂ ran Ã_m`, with
/// hypothesis reports attached. The formulas are evaluated whether or not
/// the hypotheses hold.
pub fn wold_single(rep: &CovariantRep, level_cap: usize, tol: &ToleranceConfig) -> Result<SingleDecomposition> {
    tol.validate()?;
    let (n, d) = (rep.k_dim(), rep.d());
    let raw = raw_decomposition(rep.atilde(), d, level_cap, tol)?;

    let mut grade_range_overlap = 0.0f64;
    let mut level_identity = Vec::with_capacity(raw.grades.len());
    for (m, g) in raw.grades.iter().enumerate() {
        let (upper, lower) = (range_at(&raw.ranges, m), range_at(&raw.ranges, m + 1));
        let ov = overlap(g, lower);
        grade_range_overlap = grade_range_overlap.max(ov);
        let joined = span_of(&[g, lower], n, tol)?;
        level_identity.push(ov.max(subspace_distance(&joined, upper)));
    }

    let sum = direct_sum_check(&[&raw.k1, &raw.k2], n, tol)?;
    let mut worst = Worst::default();
    reducing_worst(rep.atilde(), d, rep.sigma(), &raw.k1, "K1 ", &mut worst)?;
    reducing_worst(rep.atilde(), d, rep.sigma(), &raw.k2, "K2 ", &mut worst)?;

    let residuals = SingleResiduals {
        grade_overlap: max_grade_overlap(&raw.grades),
        grade_range_overlap,
        direct_sum_overlap: sum.max_overlap,
        direct_sum_span_defect: sum.span_defect,
        reducing_defect: worst.residual,
        reducing_worst: worst.label,
        level_identity,
    };
    Ok(SingleDecomposition {
        hypotheses: attached_hypotheses(rep, level_cap, tol)?,
        residuals,
        stabilized: raw.k1_stabilized && raw.k2_stabilized,
        k1_stabilized: raw.k1_stabilized,
        k2_stabilized: raw.k2_stabilized,
        wandering: raw.wandering,
        grades: raw.grades,
        k1: raw.k1,
        k2: raw.k2,
        ranges: raw.ranges,
        level_cap,
    })
}

fn range_at(ranges: &[Frame], m: usize) -> &Frame {
    ranges.get(m).unwrap_or_else(|| ranges.last().expect("nonempty"))
}

impl SingleDecomposition {
    /// Structural residuals as named checks at `eq_tol`.
    pub fn residual_reports(&self, tol: &ToleranceConfig) -> Vec<CheckReport> {
        let r = &self.residuals;
        let level = r.level_identity.iter().copied().fold(0.0, f64::max);
        let mut out = vec![
            CheckReport::new("grade_orthogonality", r.grade_overlap.max(r.grade_range_overlap), tol.eq_tol, false),
            CheckReport::new(
                "direct_sum",
                r.direct_sum_overlap.max(r.direct_sum_span_defect),
                tol.eq_tol,
                false,
            ),
            CheckReport::new("level_identity", level, tol.eq_tol, false),
            CheckReport::new("reducing", r.reducing_defect, tol.eq_tol, false),
        ];
        if let Some(label) = &r.reducing_worst {
            out[3].worst = Some(label.clone());
        }
        if !self.stabilized {
            out.push(
                CheckReport::new("stabilized", 1.0, 0.0, false)
                    .fail_with(format!("level cap {} reached before stabilization", self.level_cap)),
            );
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub class: SummandClass,
    pub rank: usize,
    pub reducing_defect: f64,
    /// Rank of the wandering subspace of the compression.
    pub wandering_rank: usize,
    /// Rank of the span of the compression's grades.
    pub grade_span_rank: usize,
    pub grade_overlap: f64,
    /// Smallest of the top `rank` singular values of the compressed `Ã`;
    /// bounded away from zero iff it maps onto the subspace.
    pub surjectivity_margin: f64,
    pub containment_k1: f64,
    pub containment_k2: f64,
    pub stabilized: bool,
}

/// Class of a compression `B*Ã(I⊗B)` of a reducing subspace with
/// orthonormal basis `B`.
pub(crate) struct CompressedClass {
    pub class: SummandClass,
    pub wandering_rank: usize,
    pub grade_span_rank: usize,
    pub grade_overlap: f64,
    pub surjectivity_margin: f64,
    pub stabilized: bool,
}

pub(crate) fn compress(a: &ComplexMatrix, d: usize, s: &Frame) -> Result<ComplexMatrix> {
    let b = s.basis();
    Ok(b.adjoint() * a * id_kron(d, b)?)
}

pub(crate) fn classify_compressed(
    a: &ComplexMatrix,
    d: usize,
    s: &Frame,
    cap: usize,
    tol: &ToleranceConfig,
) -> Result<CompressedClass> {
    let r = s.rank();
    if r == 0 {
        return Ok(CompressedClass {
            class: SummandClass::Invertible,
            wandering_rank: 0,
            grade_span_rank: 0,
            grade_overlap: 0.0,
            surjectivity_margin: 0.0,
            stabilized: true,
        });
    }
    let c = compress(a, d, s)?;
    let sv = singular_values(&c);
    let margin = sv.get(r - 1).copied().unwrap_or(0.0);
    let wandering = kernel(&c.adjoint(), tol)?;
    let g = grade_sequence(&c, d, &wandering, cap, tol)?;
    let grade_overlap = max_grade_overlap(&g.grades);
    let class = if !wandering.is_zero() && g.span.rank() == r && grade_overlap <= tol.eq_tol {
        SummandClass::Induced
    } else if margin > tol.rank_tol * op_norm(&c).max(1.0) {
        SummandClass::Invertible
    } else {
        SummandClass::Neither
    };
    Ok(CompressedClass {
        class,
        wandering_rank: wandering.rank(),
        grade_span_rank: g.span.rank(),
        grade_overlap,
        surjectivity_margin: margin,
        stabilized: g.stabilized,
    })
}

fn reducing_check(rep: &CovariantRep, s: &Frame, tol: &ToleranceConfig) -> Result<f64> {
    if s.ambient_dim() != rep.k_dim() {
        return Err(Error::DimensionMismatch {
            op: "classify_summand",
            expected: rep.k_dim(),
            got: s.ambient_dim(),
        });
    }
    let mut worst = Worst::default();
    reducing_worst(rep.atilde(), rep.d(), rep.sigma(), s, "", &mut worst)?;
    if worst.residual > tol.eq_tol {
        return Err(Error::NotReducing { defect: worst.residual });
    }
    Ok(worst.residual)
}

fn classify_with(rep: &CovariantRep, s: &Frame, raw: &Raw, cap: usize, tol: &ToleranceConfig) -> Result<Classification> {
    let reducing_defect = reducing_check(rep, s, tol)?;
    let c = classify_compressed(rep.atilde(), rep.d(), s, cap, tol)?;
    Ok(Classification {
        class: c.class,
        rank: s.rank(),
        reducing_defect,
        wandering_rank: c.wandering_rank,
        grade_span_rank: c.grade_span_rank,
        grade_overlap: c.grade_overlap,
        surjectivity_margin: c.surjectivity_margin,
        containment_k1: containment_residual(s, &raw.k1),
        containment_k2: containment_residual(s, &raw.k2),
        stabilized: c.stabilized && raw.k1_stabilized && raw.k2_stabilized,
    })
}

/// Tag a reducing subspace as induced, invertible or neither, and measure
/// how far it sits from `K1` and `K2`.
pub fn classify_summand(rep: &CovariantRep, s: &Frame, level_cap: usize, tol: &ToleranceConfig) -> Result<Classification> {
    let raw = raw_decomposition(rep.atilde(), rep.d(), level_cap, tol)?;
    classify_with(rep, s, &raw, level_cap, tol)
}

/// Classify `s` and require it to be of the `expected` class and to lie in
/// the matching summand (`K1` for induced, `K2` for invertible).
pub fn uniqueness_check(
    rep: &CovariantRep,
    s: &Frame,
    expected: SummandClass,
    level_cap: usize,
    tol: &ToleranceConfig,
) -> Result<CheckReport> {
    if expected == SummandClass::Neither {
        return Err(Error::BadParams("expected class must be INDUCED or INVERTIBLE".into()));
    }
    let raw = raw_decomposition(rep.atilde(), rep.d(), level_cap, tol)?;
    let c = classify_with(rep, s, &raw, level_cap, tol)?;
    let (target, containment) = match expected {
        SummandClass::Induced => (&raw.k1, c.containment_k1),
        _ => (&raw.k2, c.containment_k2),
    };
    let mut report = CheckReport::new("uniqueness", containment, tol.eq_tol, false)
        .with_value("containment", containment)
        .with_value("reducing_defect", c.reducing_defect)
        .with_value("surjectivity_margin", c.surjectivity_margin)
        .with_note(format!("classified as {:?}", c.class));
    if containment > 0.0 {
        let outside = s.basis() - target.basis() * (target.basis().adjoint() * s.basis());
        let (_, v) = crate::report::norm_with_witness(&outside);
        report.witness = v.map(|v| crate::report::Witness::from_vector(&(s.basis() * v)));
    }
    if c.class != expected {
        report = report.fail_with(format!("expected {expected:?}"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, principal_angles};
    use crate::repn::{gen_block_direct_sum, gen_random_unitary, gen_scaled_isometry, gen_truncated_fock};
    use proptest::prelude::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn block_example() -> CovariantRep {
        let fock = gen_truncated_fock(2, 3, 1).unwrap();
        let u = CovariantRep::from_operator(gen_random_unitary(2, 11)).unwrap();
        // d = 2 unitary part as the row coisometry [U | I] / √2
        let row = crate::repn::gen_row_coisometry(&[u.atilde().clone(), identity(2)], &tol()).unwrap();
        gen_block_direct_sum(&[fock, row]).unwrap()
    }

    #[test]
    fn invertible_operator_is_all_k2() {
        let rep = CovariantRep::from_operator(gen_random_unitary(4, 5).scale(2.0)).unwrap();
        let dec = wold_single(&rep, 6, &tol()).unwrap();
        assert_eq!(dec.k1.rank(), 0);
        assert_eq!(dec.k2.rank(), 4);
        assert!(dec.stabilized);
    }

    #[test]
    fn truncated_fock_is_all_k1() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let dec = wold_single(&rep, 8, &tol()).unwrap();
        assert_eq!(dec.wandering.rank(), 1);
        let ranks: Vec<usize> = dec.grades.iter().map(Frame::rank).collect();
        assert_eq!(ranks, vec![1, 2, 4, 8]);
        assert_eq!((dec.k1.rank(), dec.k2.rank()), (15, 0));
        assert!(dec.residuals.grade_overlap <= 1e-12);
    }

    #[test]
    fn block_example_splits() {
        let rep = block_example();
        let dec = wold_single(&rep, 8, &tol()).unwrap();
        assert_eq!((dec.k1.rank(), dec.k2.rank()), (15, 2));
        let r = &dec.residuals;
        assert!(r.grade_overlap <= 1e-10 && r.grade_range_overlap <= 1e-10);
        assert!(r.direct_sum_overlap <= 1e-10 && r.direct_sum_span_defect == 0.0);
        assert!(r.reducing_defect <= 1e-10, "{r:?}");
        assert_eq!(r.level_identity.len(), 4);
        assert!(r.level_identity.iter().all(|&x| x <= 1e-10), "{r:?}");
        // K1 is the Fock block, independently described by coordinates
        let fock_block = Frame::coordinate(17, &(0..15).collect::<Vec<_>>()).unwrap();
        assert!(principal_angles(&dec.k1, &fock_block).iter().all(|&t| t <= 1e-10));
        assert!(dec.residual_reports(&tol()).iter().all(|c| c.passed));
    }

    #[test]
    fn classification_of_blocks() {
        let rep = block_example();
        let fock = Frame::coordinate(17, &(0..15).collect::<Vec<_>>()).unwrap();
        let unit = Frame::coordinate(17, &[15, 16]).unwrap();
        let c = classify_summand(&rep, &fock, 8, &tol()).unwrap();
        assert_eq!(c.class, SummandClass::Induced);
        assert!(c.containment_k1 <= 1e-10);
        let c = classify_summand(&rep, &unit, 8, &tol()).unwrap();
        assert_eq!(c.class, SummandClass::Invertible);
        assert!(c.containment_k2 <= 1e-10);
        let line = Frame::coordinate(17, &[3]).unwrap();
        assert!(matches!(classify_summand(&rep, &line, 8, &tol()), Err(Error::NotReducing { .. })));
    }

    #[test]
    fn uniqueness_reports() {
        let rep = block_example();
        let unit = Frame::coordinate(17, &[15, 16]).unwrap();
        let ok = uniqueness_check(&rep, &unit, SummandClass::Invertible, 8, &tol()).unwrap();
        assert!(ok.passed && ok.residual <= 1e-10);
        let wrong = uniqueness_check(&rep, &unit, SummandClass::Induced, 8, &tol()).unwrap();
        assert!(!wrong.passed);
        let inv = CovariantRep::from_operator(gen_random_unitary(3, 1)).unwrap();
        let all = uniqueness_check(&inv, &Frame::full(3), SummandClass::Invertible, 4, &tol()).unwrap();
        assert!(all.passed);
    }

    #[test]
    fn scaled_isometry_hypotheses_attached() {
        let base = CovariantRep::from_operator(gen_random_unitary(4, 2)).unwrap();
        let rep = gen_scaled_isometry(&base, 0.5, &tol()).unwrap();
        let dec = wold_single(&rep, 6, &tol()).unwrap();
        let iso = dec.hypotheses.iter().find(|h| h.name == "isometric").unwrap();
        assert!(!iso.passed);
        let concave = dec.hypotheses.iter().find(|h| h.name == "concavity").unwrap();
        assert!(!concave.passed);
        assert_eq!(dec.k2.rank(), 4);
    }

    #[test]
    fn short_cap_is_flagged() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let dec = wold_single(&rep, 2, &tol()).unwrap();
        assert!(!dec.stabilized);
        assert!(dec.residual_reports(&tol()).iter().any(|r| r.name == "stabilized" && !r.passed));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn monotone_in_cap(levels in 1usize..4, cap in 0usize..5, seed in 0u64..50) {
            let fock = gen_truncated_fock(1, levels, 1).unwrap();
            let u = CovariantRep::from_operator(gen_random_unitary(2, seed)).unwrap();
            let rep = gen_block_direct_sum(&[fock, u]).unwrap();
            let a = wold_single(&rep, cap, &tol()).unwrap();
            let b = wold_single(&rep, cap + 1, &tol()).unwrap();
            prop_assert!(b.k1.rank() >= a.k1.rank());
            prop_assert!(b.k2.rank() <= a.k2.rank());
        }
    }
}
