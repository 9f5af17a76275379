use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry in {what} at ({row}, {col})")]
    NonFinite {
        what: String,
        row: usize,
        col: usize,
    },
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("kronecker product of size {rows}x{cols} exceeds the limit {limit}")]
    Overflow { rows: usize, cols: usize, limit: usize },
    #[error("matrix is not Hermitian: |H - H*| = {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("base representation is not isometric: |A*A - I| = {residual:.3e}")]
    NotIsometric { residual: f64 },
    #[error("weight at ({direction}, {index}) has modulus {modulus} > 1")]
    BadWeights {
        direction: usize,
        index: usize,
        modulus: f64,
    },
    #[error("twist parameter has modulus {modulus}, expected 1")]
    NotUnimodular { modulus: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("direction {direction} is not left-invertible (smallest singular value {smallest:.3e})")]
    NotLeftInvertible { direction: usize, smallest: f64 },
    #[error("Gram matrix condition number {cond:.3e} exceeds 1e12")]
    GramIllConditioned { cond: f64 },
    #[error("subspace is not reducing: defect {defect:.3e}")]
    NotReducing { defect: f64 },
    #[error("{k} directions requested, at most {max} supported")]
    TooManyDirections { k: usize, max: usize },
    #[error("invalid representation: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}
