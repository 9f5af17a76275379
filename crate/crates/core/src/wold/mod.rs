//! Wold-type decompositions: one correspondence ([`wold_single`]) and
//! several doubly twisted directions ([`wold_multi`]), each with residual
//! reporting, classification of summands and an independent oracle.
//!
//! Infinite spans and intersections are computed up to a level cap with
//! stabilization detection; a `stabilized = false` flag marks an
//! inconclusive cap.

mod multi;
mod single;

pub use multi::{
    brute_force_oracle, compare_with_oracle, uniqueness_check_multi, wold_multi, DirectionClass, MultiDecomposition,
    MultiResiduals, OracleComparison, Summand, MAX_DIRECTIONS,
};
pub use single::{
    classify_summand, uniqueness_check, wold_single, Classification, SingleDecomposition, SingleResiduals,
};

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{image_lifted, span_of, ComplexMatrix, Frame, ToleranceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SummandClass {
    Induced,
    Invertible,
    Neither,
}

/// Grades `S, 𝔄_1(S), 𝔄_2(S), …` and their running span.
#[derive(Clone, Debug)]
pub(crate) struct GradeSequence {
    pub grades: Vec<Frame>,
    pub span: Frame,
    pub stabilized: bool,
}

/// Iterate `G_{n+1} = Ã(E⊗G_n)` from `start` for at most `cap` steps.
/// Stops (stabilized) at the first zero grade or the first grade that adds
/// nothing to the span; later grades could not add anything either.
pub(crate) fn grade_sequence(
    a: &ComplexMatrix,
    d: usize,
    start: &Frame,
    cap: usize,
    tol: &ToleranceConfig,
) -> Result<GradeSequence> {
    let n = start.ambient_dim();
    let mut grades = vec![start.clone()];
    let mut span = start.clone();
    let mut stabilized = start.is_zero();
    if !stabilized {
        for _ in 0..cap {
            let next = image_lifted(a, d, grades.last().expect("nonempty"), tol)?;
            if next.is_zero() {
                stabilized = true;
                break;
            }
            let wider = span_of(&[&span, &next], n, tol)?;
            if wider.rank() == span.rank() {
                stabilized = true;
                break;
            }
            grades.push(next);
            span = wider;
        }
    }
    Ok(GradeSequence {
        grades,
        span,
        stabilized,
    })
}

/// Nested images `R_0 = start`, `R_{m+1} = Ã(E⊗R_m)`.
#[derive(Clone, Debug)]
pub(crate) struct RangeSequence {
    pub frames: Vec<Frame>,
    /// Index of the first frame whose rank equals its predecessor's; the
    /// last frame when the cap was hit first.
    pub limit_index: usize,
    pub stabilized: bool,
}

impl RangeSequence {
    pub fn limit(&self) -> &Frame {
        &self.frames[self.limit_index]
    }
}

/// Compute `R_1, R_2, …` until the rank stops dropping (for an invariant
/// start the sequence is nested, so equal rank means equal subspace) or
/// `cap` is reached. At least `min_len` frames beyond `R_0` are produced
/// when the cap allows it.
pub(crate) fn range_sequence(
    a: &ComplexMatrix,
    d: usize,
    start: &Frame,
    cap: usize,
    min_len: usize,
    tol: &ToleranceConfig,
) -> Result<RangeSequence> {
    let mut frames = vec![start.clone()];
    let mut limit_index = None;
    for m in 1..=cap {
        if limit_index.is_some() && m > min_len {
            break;
        }
        let next = image_lifted(a, d, &frames[m - 1], tol)?;
        if limit_index.is_none() && next.rank() == frames[m - 1].rank() {
            limit_index = Some(m);
        }
        frames.push(next);
    }
    let stabilized = limit_index.is_some();
    let limit_index = limit_index.unwrap_or(frames.len() - 1);
    Ok(RangeSequence {
        frames,
        limit_index,
        stabilized,
    })
}

/// Largest `|⟨u, v⟩|` over basis vectors of two frames.
pub(crate) fn overlap(a: &Frame, b: &Frame) -> f64 {
    if a.is_zero() || b.is_zero() {
        return 0.0;
    }
    (a.basis().adjoint() * b.basis())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// `{1,3}` style label for a 0-based direction set.
pub fn beta_label(beta: &[usize]) -> String {
    let inner: Vec<String> = beta.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repn::gen_truncated_fock;

    #[test]
    fn labels() {
        assert_eq!(beta_label(&[]), "{}");
        assert_eq!(beta_label(&[0, 2]), "{1,3}");
    }

    #[test]
    fn fock_grades_double() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let tol = ToleranceConfig::default();
        let vac = Frame::coordinate(15, &[0]).unwrap();
        let g = grade_sequence(rep.atilde(), 2, &vac, 8, &tol).unwrap();
        let ranks: Vec<usize> = g.grades.iter().map(Frame::rank).collect();
        assert_eq!(ranks, vec![1, 2, 4, 8]);
        assert!(g.stabilized);
        assert_eq!(g.span.rank(), 15);
    }

    #[test]
    fn fock_ranges_shrink_to_zero() {
        let rep = gen_truncated_fock(2, 3, 1).unwrap();
        let tol = ToleranceConfig::default();
        let r = range_sequence(rep.atilde(), 2, &Frame::full(15), 8, 0, &tol).unwrap();
        let ranks: Vec<usize> = r.frames.iter().map(Frame::rank).collect();
        assert_eq!(ranks, vec![15, 14, 12, 8, 0, 0]);
        assert_eq!(r.limit_index, 5);
        assert!(r.stabilized && r.limit().is_zero());
        let short = range_sequence(rep.atilde(), 2, &Frame::full(15), 2, 0, &tol).unwrap();
        assert!(!short.stabilized);
    }
}
