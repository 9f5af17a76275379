//! Outcome of a single hypothesis or identity check.

use std::collections::BTreeMap;

use nalgebra::SVD;
use serde::Serialize;

use crate::linalg::{ComplexMatrix, ComplexVector};

#[derive(Clone, Debug, Serialize, PartialEq)]
#[serde(untagged)]
pub enum Witness {
    /// A domain vector, entries as `[re, im]`.
    Vector(Vec<[f64; 2]>),
    /// A domain basis index.
    Index(usize),
}

impl Witness {
    pub fn from_vector(v: &ComplexVector) -> Self {
        Witness::Vector(v.iter().map(|z| [z.re, z.im]).collect())
    }

    pub fn as_vector(&self) -> Option<ComplexVector> {
        match self {
            Witness::Vector(v) => Some(ComplexVector::from_iterator(
                v.len(),
                v.iter().map(|p| num_complex::Complex64::new(p[0], p[1])),
            )),
            Witness::Index(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    /// Worst violation, in operator norm or eigenvalue units.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Label of the sub-check (direction pair, level, ...) that produced the worst residual.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<String>,
    pub window_restricted: bool,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64, window_restricted: bool) -> Self {
        CheckReport {
            name: name.into(),
            passed: residual <= tolerance,
            residual,
            tolerance,
            witness: None,
            worst: None,
            window_restricted,
            values: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Vacuous pass, e.g. a covariance check with no algebra generators.
    pub fn vacuous(name: impl Into<String>, tolerance: f64, note: &str) -> Self {
        let mut r = CheckReport::new(name, 0.0, tolerance, false);
        r.notes.push(note.to_string());
        r
    }

    pub fn with_value(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Force a failure independent of the residual; used when a check has a
    /// precondition that is not itself a norm residual.
    pub(crate) fn fail_with(mut self, note: impl Into<String>) -> Self {
        self.passed = false;
        self.notes.push(note.into());
        self
    }
}

/// Running maximum of operator-norm residuals, remembering the witness of
/// the worst one.
#[derive(Default)]
pub(crate) struct Worst {
    pub residual: f64,
    pub witness: Option<ComplexVector>,
    pub label: Option<String>,
}

impl Worst {
    pub fn consider(&mut self, label: impl Into<String>, r: &ComplexMatrix) {
        let (norm, v) = norm_with_witness(r);
        if self.label.is_none() || norm > self.residual {
            self.residual = norm;
            self.witness = v;
            self.label = Some(label.into());
        }
    }

    pub fn consider_scalar(&mut self, label: impl Into<String>, value: f64, witness: Option<ComplexVector>) {
        if self.label.is_none() || value > self.residual {
            self.residual = value;
            self.witness = witness;
            self.label = Some(label.into());
        }
    }

    pub fn into_report(self, name: &str, tolerance: f64, window_restricted: bool) -> CheckReport {
        let mut r = CheckReport::new(name, self.residual, tolerance, window_restricted);
        r.witness = self.witness.as_ref().map(Witness::from_vector);
        r.worst = self.label;
        r
    }
}

/// Operator norm and a unit vector attaining it.
pub(crate) fn norm_with_witness(r: &ComplexMatrix) -> (f64, Option<ComplexVector>) {
    if r.nrows() == 0 || r.ncols() == 0 {
        return (0.0, None);
    }
    let svd = SVD::new(r.clone(), false, true);
    let v_t = svd.v_t.expect("v requested");
    let (idx, s) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let v = v_t.row(idx).adjoint();
    (s, Some(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, op_norm};

    #[test]
    fn witness_attains_the_norm() {
        let r = ComplexMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(3.0, 1.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        let (n, v) = norm_with_witness(&r);
        let v = v.unwrap();
        assert!((n - op_norm(&r)).abs() < 1e-14);
        assert!(((&r * &v).norm() - n).abs() < 1e-12);
    }

    #[test]
    fn worst_keeps_maximum() {
        let mut w = Worst::default();
        w.consider("a", &ComplexMatrix::identity(2, 2).scale(0.5));
        w.consider("b", &ComplexMatrix::identity(2, 2).scale(2.0));
        w.consider("c", &ComplexMatrix::identity(2, 2).scale(1.0));
        let rep = w.into_report("x", 1.0, false);
        assert!(!rep.passed);
        assert_eq!(rep.worst.as_deref(), Some("b"));
        assert!(rep.witness.is_some());
    }
}
