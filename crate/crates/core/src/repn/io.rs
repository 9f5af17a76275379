//! JSON representation files.
//!
//! ```json
//! {
//!   "mode": "single",
//!   "K_dim": 2,
//!   "sigma": [],
//!   "correspondences": [{"dim": 1, "left_action": [], "right_action": []}],
//!   "atilde": [[[0, 0], [1, 0]], [[1, 0], [0, 0]]],
//!   "window_mask": [0, 1]
//! }
//! ```
//!
//! Product files use `"mode": "product"`, `atildes` (one matrix per
//! correspondence) and optional `flips` / `twists` as lists of
//! `{"i": 1, "j": 2, "matrix": ...}` with 1-based `i < j`.
//! Bare `NaN` / `Infinity` tokens are accepted by the reader so that they can
//! be reported as non-finite entries rather than as syntax errors.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{Correspondence, CovariantRep, ProductSystemRep};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

#[derive(Clone, Debug)]
pub enum Representation {
    Single(CovariantRep),
    Product(ProductSystemRep),
}

impl Representation {
    pub fn to_json(&self) -> Value {
        match self {
            Representation::Single(rep) => {
                let mut doc = Map::new();
                doc.insert("mode".into(), json!("single"));
                doc.insert("K_dim".into(), json!(rep.k_dim()));
                doc.insert("sigma".into(), Value::Array(rep.sigma().iter().map(matrix_to_json).collect()));
                doc.insert("correspondences".into(), json!([corr_to_json(rep.correspondence())]));
                doc.insert("atilde".into(), matrix_to_json(rep.atilde()));
                if let Some(w) = rep.window_mask() {
                    doc.insert("window_mask".into(), json!(w));
                }
                Value::Object(doc)
            }
            Representation::Product(psr) => {
                let mut doc = Map::new();
                doc.insert("mode".into(), json!("product"));
                doc.insert("K_dim".into(), json!(psr.k_dim()));
                doc.insert("sigma".into(), Value::Array(psr.sigma().iter().map(matrix_to_json).collect()));
                doc.insert(
                    "correspondences".into(),
                    Value::Array((0..psr.k()).map(|i| corr_to_json(psr.correspondence(i))).collect()),
                );
                doc.insert(
                    "atildes".into(),
                    Value::Array((0..psr.k()).map(|i| matrix_to_json(psr.atilde(i))).collect()),
                );
                doc.insert("flips".into(), pairs_to_json(psr.stored_flips()));
                doc.insert("twists".into(), pairs_to_json(psr.stored_twists()));
                if let Some(w) = psr.window_mask() {
                    doc.insert("window_mask".into(), json!(w));
                }
                Value::Object(doc)
            }
        }
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

fn corr_to_json(c: &Correspondence) -> Value {
    json!({
        "dim": c.dim(),
        "left_action": c.left_action().iter().map(matrix_to_json).collect::<Vec<_>>(),
        "right_action": c.right_action().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

fn pairs_to_json(map: &BTreeMap<(usize, usize), ComplexMatrix>) -> Value {
    Value::Array(
        map.iter()
            .map(|(&(i, j), m)| json!({"i": i + 1, "j": j + 1, "matrix": matrix_to_json(m)}))
            .collect(),
    )
}

/// Quote bare `NaN`, `Infinity` and `-Infinity` tokens outside strings.
fn quote_non_finite(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = text;
    while let Some(ch) = rest.chars().next() {
        if in_string {
            out.push(ch);
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            rest = &rest[ch.len_utf8()..];
            continue;
        }
        if ch == '"' {
            in_string = true;
            out.push(ch);
            rest = &rest[1..];
            continue;
        }
        let mut matched = false;
        for token in ["-Infinity", "Infinity", "NaN"] {
            if rest.starts_with(token) {
                out.push('"');
                out.push_str(token);
                out.push('"');
                rest = &rest[token.len()..];
                matched = true;
                break;
            }
        }
        if !matched {
            out.push(ch);
            rest = &rest[ch.len_utf8()..];
        }
    }
    out
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::invalid(name, "missing field"))
}

fn as_count(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::invalid(path, "expected a nonnegative integer"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| Error::invalid(path, "expected an array"))
}

fn scalar_part(v: &Value, path: &str, row: usize, col: usize) -> Result<f64> {
    let non_finite = || Error::NonFinite {
        what: path.to_string(),
        row,
        col,
    };
    match v {
        Value::Number(x) => x.as_f64().filter(|x| x.is_finite()).ok_or_else(non_finite),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "nan" | "infinity" | "-infinity" | "inf" | "-inf" => Err(non_finite()),
            _ => Err(Error::invalid(
                format!("{path}[{row}][{col}]"),
                format!("expected a number, got string {s:?}"),
            )),
        },
        _ => Err(Error::invalid(format!("{path}[{row}][{col}]"), "expected a number")),
    }
}

/// Parse a matrix given as an array of rows of `[re, im]` pairs.
pub fn matrix_from_json(v: &Value, path: &str) -> Result<ComplexMatrix> {
    let rows = as_array(v, path)?;
    let mut cols = None;
    let mut entries = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let row = as_array(row, &format!("{path}[{r}]"))?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::invalid(
                    format!("{path}[{r}]"),
                    format!("row has {} entries, expected {c}", row.len()),
                ))
            }
            _ => {}
        }
        for (c, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::invalid(format!("{path}[{r}][{c}]"), "expected a [re, im] pair"))?;
            let re = scalar_part(&pair[0], path, r, c)?;
            let im = scalar_part(&pair[1], path, r, c)?;
            entries.push(Complex64::new(re, im));
        }
    }
    let cols = cols.unwrap_or(0);
    Ok(ComplexMatrix::from_row_slice(rows.len(), cols, &entries))
}

fn matrices(v: &Value, path: &str) -> Result<Vec<ComplexMatrix>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(g, m)| matrix_from_json(m, &format!("{path}[{g}]")))
        .collect()
}

fn corr_from_json(v: &Value, path: &str) -> Result<Correspondence> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::invalid(path, "expected an object"))?;
    let dim = as_count(
        obj.get("dim").ok_or_else(|| Error::invalid(format!("{path}.dim"), "missing field"))?,
        &format!("{path}.dim"),
    )?;
    let left = match obj.get("left_action") {
        Some(l) => matrices(l, &format!("{path}.left_action"))?,
        None => Vec::new(),
    };
    let right = match obj.get("right_action") {
        Some(r) => matrices(r, &format!("{path}.right_action"))?,
        None => Vec::new(),
    };
    Correspondence::new(dim, left, right)
}

fn pairs_from_json(v: Option<&Value>, name: &str) -> Result<BTreeMap<(usize, usize), ComplexMatrix>> {
    let mut out = BTreeMap::new();
    let Some(v) = v else { return Ok(out) };
    for (t, item) in as_array(v, name)?.iter().enumerate() {
        let path = format!("{name}[{t}]");
        let obj = item
            .as_object()
            .ok_or_else(|| Error::invalid(&path, "expected an object with i, j, matrix"))?;
        let i = as_count(field(obj, "i").map_err(|_| Error::invalid(&path, "missing i"))?, &path)?;
        let j = as_count(field(obj, "j").map_err(|_| Error::invalid(&path, "missing j"))?, &path)?;
        if i == 0 || j == 0 || i >= j {
            return Err(Error::invalid(&path, "directions are 1-based with i < j"));
        }
        let m = matrix_from_json(
            field(obj, "matrix").map_err(|_| Error::invalid(&path, "missing matrix"))?,
            &format!("{path}.matrix"),
        )?;
        out.insert((i - 1, j - 1), m);
    }
    Ok(out)
}

/// Parse a representation document.
pub fn parse_representation(text: &str) -> Result<Representation> {
    let cleaned = quote_non_finite(text);
    let doc: Value = serde_json::from_str(&cleaned).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = doc
        .as_object()
        .ok_or_else(|| Error::invalid("document", "expected a JSON object"))?;
    let mode = field(obj, "mode")?
        .as_str()
        .ok_or_else(|| Error::invalid("mode", "expected a string"))?;
    let k_dim = as_count(field(obj, "K_dim")?, "K_dim")?;
    let sigma = match obj.get("sigma") {
        Some(s) => matrices(s, "sigma")?,
        None => Vec::new(),
    };
    let corrs: Vec<Correspondence> = as_array(field(obj, "correspondences")?, "correspondences")?
        .iter()
        .enumerate()
        .map(|(i, c)| corr_from_json(c, &format!("correspondences[{i}]")))
        .collect::<Result<_>>()?;
    let window = match obj.get("window_mask") {
        None | Some(Value::Null) => None,
        Some(w) => Some(
            as_array(w, "window_mask")?
                .iter()
                .map(|x| as_count(x, "window_mask"))
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    match mode {
        "single" => {
            if corrs.len() != 1 {
                return Err(Error::invalid(
                    "correspondences",
                    "single mode takes exactly one correspondence",
                ));
            }
            let atilde = matrix_from_json(field(obj, "atilde")?, "atilde")?;
            let corr = corrs.into_iter().next().expect("length checked");
            Ok(Representation::Single(CovariantRep::new(k_dim, sigma, corr, atilde, window)?))
        }
        "product" => {
            let atildes = matrices(field(obj, "atildes")?, "atildes")?;
            let flips = pairs_from_json(obj.get("flips"), "flips")?;
            let twists = pairs_from_json(obj.get("twists"), "twists")?;
            Ok(Representation::Product(ProductSystemRep::new(
                k_dim, sigma, corrs, flips, twists, atildes, window,
            )?))
        }
        other => Err(Error::invalid("mode", format!("expected \"single\" or \"product\", got {other:?}"))),
    }
}

pub fn load_representation(path: &Path) -> Result<Representation> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_representation(&text)
}
