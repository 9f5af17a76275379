//! Correspondences, covariant representations and product-system
//! representations, all carried by their `Ã` matrices.
//!
//! `Ã: E⊗K → K` is stored as an `n × (d·n)` matrix whose `i`-th block column
//! is `A(e_i)`. Tensor factors are ordered left-factor-major, so the basis
//! vector `e_i ⊗ h_m` of `E⊗K` sits at column `i·n + m`.

mod gen;
mod io;

use std::collections::BTreeMap;

pub use gen::{
    gen_block_direct_sum, gen_cyclic_shift, gen_four_block_pair, gen_product_direct_sum, gen_random_unitary,
    gen_row_coisometry, gen_scaled_isometry, gen_tensor_pair, gen_truncated_fock, gen_twisted_fock_pair,
    gen_weighted_cyclic_shift,
};
pub use io::{load_representation, matrix_from_json, matrix_to_json, parse_representation, Representation};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, id_kron, identity, kron, op_norm, ComplexMatrix, Frame, ToleranceConfig};
use crate::report::{CheckReport, Worst};

/// A finite-dimensional correspondence `E` with generator-wise left and
/// right actions. Empty action lists mean the scalar algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Correspondence {
    dim: usize,
    left_action: Vec<ComplexMatrix>,
    right_action: Vec<ComplexMatrix>,
}

impl Correspondence {
    pub fn scalar(dim: usize) -> Self {
        Correspondence {
            dim,
            left_action: Vec::new(),
            right_action: Vec::new(),
        }
    }

    pub fn new(dim: usize, left_action: Vec<ComplexMatrix>, right_action: Vec<ComplexMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("correspondence.dim", "must be at least 1"));
        }
        if left_action.len() != right_action.len() {
            return Err(Error::invalid(
                "correspondence",
                format!(
                    "{} left generators but {} right generators",
                    left_action.len(),
                    right_action.len()
                ),
            ));
        }
        for (name, list) in [("left_action", &left_action), ("right_action", &right_action)] {
            for (g, m) in list.iter().enumerate() {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::invalid(
                        format!("correspondence.{name}[{g}]"),
                        format!("expected {dim}x{dim}, got {}x{}", m.nrows(), m.ncols()),
                    ));
                }
                check_finite(m, &format!("correspondence.{name}[{g}]"))?;
            }
        }
        Ok(Correspondence {
            dim,
            left_action,
            right_action,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator_count(&self) -> usize {
        self.left_action.len()
    }

    pub fn is_scalar(&self) -> bool {
        self.left_action.is_empty()
    }

    pub fn left_action(&self) -> &[ComplexMatrix] {
        &self.left_action
    }

    pub fn right_action(&self) -> &[ComplexMatrix] {
        &self.right_action
    }

    fn max_difference(&self, other: &Correspondence) -> Option<f64> {
        if self.dim != other.dim || self.generator_count() != other.generator_count() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.left_action.iter().zip(&other.left_action) {
            worst = worst.max(op_norm(&(a - b)));
        }
        for (a, b) in self.right_action.iter().zip(&other.right_action) {
            worst = worst.max(op_norm(&(a - b)));
        }
        Some(worst)
    }
}

fn validate_window(window: &Option<Vec<usize>>, k_dim: usize) -> Result<()> {
    if let Some(idx) = window {
        Frame::coordinate(k_dim, idx)?;
    }
    Ok(())
}

fn validate_sigma(sigma: &[ComplexMatrix], k_dim: usize, generators: usize) -> Result<()> {
    if sigma.len() != generators {
        return Err(Error::invalid(
            "sigma",
            format!("{} matrices for {generators} algebra generators", sigma.len()),
        ));
    }
    for (g, s) in sigma.iter().enumerate() {
        if s.nrows() != k_dim || s.ncols() != k_dim {
            return Err(Error::invalid(
                format!("sigma[{g}]"),
                format!("expected {k_dim}x{k_dim}, got {}x{}", s.nrows(), s.ncols()),
            ));
        }
        check_finite(s, &format!("sigma[{g}]"))?;
    }
    Ok(())
}

fn validate_atilde(a: &ComplexMatrix, k_dim: usize, d: usize, field: &str) -> Result<()> {
    if a.nrows() != k_dim || a.ncols() != d * k_dim {
        return Err(Error::invalid(
            field,
            format!("expected {k_dim}x{}, got {}x{}", d * k_dim, a.nrows(), a.ncols()),
        ));
    }
    check_finite(a, field)
}

/// A covariant representation `(σ, A)` of one correspondence on `K = C^n`.
#[derive(Clone, Debug)]
pub struct CovariantRep {
    k_dim: usize,
    sigma: Vec<ComplexMatrix>,
    corr: Correspondence,
    atilde: ComplexMatrix,
    window_mask: Option<Vec<usize>>,
}

impl CovariantRep {
    pub fn new(
        k_dim: usize,
        sigma: Vec<ComplexMatrix>,
        corr: Correspondence,
        atilde: ComplexMatrix,
        window_mask: Option<Vec<usize>>,
    ) -> Result<Self> {
        if k_dim == 0 {
            return Err(Error::invalid("K_dim", "must be at least 1"));
        }
        validate_sigma(&sigma, k_dim, corr.generator_count())?;
        validate_atilde(&atilde, k_dim, corr.dim(), "atilde")?;
        validate_window(&window_mask, k_dim)?;
        Ok(CovariantRep {
            k_dim,
            sigma,
            corr,
            atilde,
            window_mask,
        })
    }

    /// A single operator `T` on `C^n` viewed as a representation with `d = 1`.
    pub fn from_operator(t: ComplexMatrix) -> Result<Self> {
        let n = t.nrows();
        CovariantRep::new(n, Vec::new(), Correspondence::scalar(1), t, None)
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn d(&self) -> usize {
        self.corr.dim()
    }

    pub fn sigma(&self) -> &[ComplexMatrix] {
        &self.sigma
    }

    pub fn correspondence(&self) -> &Correspondence {
        &self.corr
    }

    pub fn atilde(&self) -> &ComplexMatrix {
        &self.atilde
    }

    pub fn window_mask(&self) -> Option<&[usize]> {
        self.window_mask.as_deref()
    }

    pub fn window_frame(&self) -> Option<Frame> {
        self.window_mask
            .as_ref()
            .map(|idx| Frame::coordinate(self.k_dim, idx).expect("validated at construction"))
    }

    pub fn with_window(mut self, window_mask: Option<Vec<usize>>) -> Result<Self> {
        validate_window(&window_mask, self.k_dim)?;
        self.window_mask = window_mask;
        Ok(self)
    }

    /// `A(e_i)` as an `n × n` matrix.
    pub fn block(&self, i: usize) -> ComplexMatrix {
        let n = self.k_dim;
        self.atilde.columns(i * n, n).into_owned()
    }
}

/// A representation of a product system over `k` directions.
///
/// Directions are 0-based here; the file format and reports are 1-based.
/// Flips and twists are stored for `i < j` only; the reverse ones are the
/// adjoints.
#[derive(Clone, Debug)]
pub struct ProductSystemRep {
    k_dim: usize,
    sigma: Vec<ComplexMatrix>,
    corrs: Vec<Correspondence>,
    flips: BTreeMap<(usize, usize), ComplexMatrix>,
    twists: BTreeMap<(usize, usize), ComplexMatrix>,
    atildes: Vec<ComplexMatrix>,
    window_mask: Option<Vec<usize>>,
}

impl ProductSystemRep {
    pub fn new(
        k_dim: usize,
        sigma: Vec<ComplexMatrix>,
        corrs: Vec<Correspondence>,
        flips: BTreeMap<(usize, usize), ComplexMatrix>,
        twists: BTreeMap<(usize, usize), ComplexMatrix>,
        atildes: Vec<ComplexMatrix>,
        window_mask: Option<Vec<usize>>,
    ) -> Result<Self> {
        let k = corrs.len();
        if k == 0 {
            return Err(Error::invalid("correspondences", "at least one direction required"));
        }
        if k_dim == 0 {
            return Err(Error::invalid("K_dim", "must be at least 1"));
        }
        if atildes.len() != k {
            return Err(Error::invalid(
                "atildes",
                format!("{} maps for {k} correspondences", atildes.len()),
            ));
        }
        let generators = corrs[0].generator_count();
        for (i, c) in corrs.iter().enumerate() {
            if c.generator_count() != generators {
                return Err(Error::invalid(
                    format!("correspondences[{i}]"),
                    "all correspondences must share the algebra generators",
                ));
            }
        }
        validate_sigma(&sigma, k_dim, generators)?;
        for (i, a) in atildes.iter().enumerate() {
            validate_atilde(a, k_dim, corrs[i].dim(), &format!("atildes[{i}]"))?;
        }
        for (&(i, j), u) in &flips {
            if i >= j || j >= k {
                return Err(Error::invalid(
                    "flips",
                    format!("pair ({}, {}) must satisfy 1 <= i < j <= {k}", i + 1, j + 1),
                ));
            }
            let dd = corrs[i].dim() * corrs[j].dim();
            if u.nrows() != dd || u.ncols() != dd {
                return Err(Error::invalid(
                    format!("flips[{},{}]", i + 1, j + 1),
                    format!("expected {dd}x{dd}, got {}x{}", u.nrows(), u.ncols()),
                ));
            }
            check_finite(u, &format!("flips[{},{}]", i + 1, j + 1))?;
        }
        for (&(i, j), u) in &twists {
            if i >= j || j >= k {
                return Err(Error::invalid(
                    "twists",
                    format!("pair ({}, {}) must satisfy 1 <= i < j <= {k}", i + 1, j + 1),
                ));
            }
            if u.nrows() != k_dim || u.ncols() != k_dim {
                return Err(Error::invalid(
                    format!("twists[{},{}]", i + 1, j + 1),
                    format!("expected {k_dim}x{k_dim}, got {}x{}", u.nrows(), u.ncols()),
                ));
            }
            check_finite(u, &format!("twists[{},{}]", i + 1, j + 1))?;
        }
        validate_window(&window_mask, k_dim)?;
        Ok(ProductSystemRep {
            k_dim,
            sigma,
            corrs,
            flips,
            twists,
            atildes,
            window_mask,
        })
    }

    /// The one-direction product system carrying `rep`.
    pub fn from_single(rep: &CovariantRep) -> Self {
        ProductSystemRep {
            k_dim: rep.k_dim,
            sigma: rep.sigma.clone(),
            corrs: vec![rep.corr.clone()],
            flips: BTreeMap::new(),
            twists: BTreeMap::new(),
            atildes: vec![rep.atilde.clone()],
            window_mask: rep.window_mask.clone(),
        }
    }

    pub fn k(&self) -> usize {
        self.corrs.len()
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn sigma(&self) -> &[ComplexMatrix] {
        &self.sigma
    }

    pub fn correspondence(&self, i: usize) -> &Correspondence {
        &self.corrs[i]
    }

    pub fn d(&self, i: usize) -> usize {
        self.corrs[i].dim()
    }

    pub fn atilde(&self, i: usize) -> &ComplexMatrix {
        &self.atildes[i]
    }

    pub fn stored_flips(&self) -> &BTreeMap<(usize, usize), ComplexMatrix> {
        &self.flips
    }

    pub fn stored_twists(&self) -> &BTreeMap<(usize, usize), ComplexMatrix> {
        &self.twists
    }

    pub fn window_mask(&self) -> Option<&[usize]> {
        self.window_mask.as_deref()
    }

    pub fn window_frame(&self) -> Option<Frame> {
        self.window_mask
            .as_ref()
            .map(|idx| Frame::coordinate(self.k_dim, idx).expect("validated at construction"))
    }

    pub fn with_window(mut self, window_mask: Option<Vec<usize>>) -> Result<Self> {
        validate_window(&window_mask, self.k_dim)?;
        self.window_mask = window_mask;
        Ok(self)
    }

    /// `u_{i,j}: E_i⊗E_j → E_j⊗E_i`.
    pub fn flip(&self, i: usize, j: usize) -> ComplexMatrix {
        if i < j {
            match self.flips.get(&(i, j)) {
                Some(u) => u.clone(),
                None => transposition(self.d(i), self.d(j)),
            }
        } else if i > j {
            self.flip(j, i).adjoint()
        } else {
            transposition(self.d(i), self.d(i))
        }
    }

    /// `U_{ij}`; identity when not given, `U_{ji} = U_{ij}*`.
    pub fn twist(&self, i: usize, j: usize) -> ComplexMatrix {
        if i < j {
            match self.twists.get(&(i, j)) {
                Some(u) => u.clone(),
                None => identity(self.k_dim),
            }
        } else if i > j {
            self.twist(j, i).adjoint()
        } else {
            identity(self.k_dim)
        }
    }

    /// The covariant representation `(σ, A^{(i)})`.
    pub fn direction(&self, i: usize) -> CovariantRep {
        CovariantRep {
            k_dim: self.k_dim,
            sigma: self.sigma.clone(),
            corr: self.corrs[i].clone(),
            atilde: self.atildes[i].clone(),
            window_mask: self.window_mask.clone(),
        }
    }

    /// Replace the stored twist `U_{ij}` (`i < j`), e.g. for fault injection.
    pub fn with_twist(mut self, i: usize, j: usize, u: ComplexMatrix) -> Result<Self> {
        let (i, j, u) = if i < j { (i, j, u) } else { (j, i, u.adjoint()) };
        if i == j || j >= self.k() || u.nrows() != self.k_dim || u.ncols() != self.k_dim {
            return Err(Error::invalid("twists", "bad twist index or shape"));
        }
        check_finite(&u, "twists")?;
        self.twists.insert((i, j), u);
        Ok(self)
    }

    /// Replace `Ã^{(i)}`, e.g. for fault injection.
    pub fn with_atilde(mut self, i: usize, a: ComplexMatrix) -> Result<Self> {
        validate_atilde(&a, self.k_dim, self.d(i), &format!("atildes[{i}]"))?;
        self.atildes[i] = a;
        Ok(self)
    }
}

/// The permutation `e_a⊗e_b ↦ e_b⊗e_a` from `C^p⊗C^q` to `C^q⊗C^p`.
pub fn transposition(p: usize, q: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(p * q, p * q);
    for a in 0..p {
        for b in 0..q {
            u[(b * p + a, a * q + b)] = num_complex::Complex64::new(1.0, 0.0);
        }
    }
    u
}

/// A multi-index over an ordered direction set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    dirs: Vec<usize>,
    entries: Vec<usize>,
}

impl MultiIndex {
    /// `dirs` must be strictly increasing.
    pub fn new(dirs: Vec<usize>, entries: Vec<usize>) -> Result<Self> {
        if dirs.len() != entries.len() {
            return Err(Error::BadParams(format!(
                "{} directions but {} entries",
                dirs.len(),
                entries.len()
            )));
        }
        if dirs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadParams("directions must be strictly increasing".into()));
        }
        Ok(MultiIndex { dirs, entries })
    }

    /// Multi-index over all `k` directions.
    pub fn full(entries: Vec<usize>) -> Self {
        MultiIndex {
            dirs: (0..entries.len()).collect(),
            entries,
        }
    }

    pub fn dirs(&self) -> &[usize] {
        &self.dirs
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.entries.iter().sum()
    }
}

fn checked_pow(d: usize, l: usize) -> Result<usize> {
    d.checked_pow(l as u32).ok_or(Error::Overflow {
        rows: d,
        cols: l,
        limit: usize::MAX,
    })
}

/// `Ã_l = Ã(I_E⊗Ã)…(I_{E^{⊗l-1}}⊗Ã)` for an `n × d·n` matrix `a`.
pub fn iterate_atilde(a: &ComplexMatrix, d: usize, l: usize) -> Result<ComplexMatrix> {
    let n = a.nrows();
    if l == 0 {
        return Ok(identity(n));
    }
    let mut out = a.clone();
    for j in 1..l {
        out = &out * id_kron(checked_pow(d, j)?, a)?;
    }
    Ok(out)
}

pub fn atilde_iter(rep: &CovariantRep, l: usize) -> Result<ComplexMatrix> {
    iterate_atilde(&rep.atilde, rep.d(), l)
}

/// `Ã_m = Ã^{(β_1)}_{m_1}(I⊗Ã^{(β_2)}_{m_2})…` on `E_{β_1}^{⊗m_1}⊗…⊗K`.
pub fn atilde_multi(psr: &ProductSystemRep, m: &MultiIndex) -> Result<ComplexMatrix> {
    let mut out: Option<ComplexMatrix> = None;
    let mut prefix = 1usize;
    for (&dir, &e) in m.dirs.iter().zip(&m.entries) {
        if dir >= psr.k() {
            return Err(Error::BadParams(format!("direction {} out of range", dir + 1)));
        }
        if e == 0 {
            continue;
        }
        let block = iterate_atilde(&psr.atildes[dir], psr.d(dir), e)?;
        out = Some(match out {
            None => block,
            Some(acc) => &acc * id_kron(prefix, &block)?,
        });
        prefix = prefix
            .checked_mul(checked_pow(psr.d(dir), e)?)
            .ok_or(Error::Overflow {
                rows: prefix,
                cols: e,
                limit: usize::MAX,
            })?;
    }
    Ok(out.unwrap_or_else(|| identity(psr.k_dim)))
}

/// Dimension of `E_{β_1}^{⊗m_1}⊗…` (without the `K` factor).
pub fn word_domain_dim(psr: &ProductSystemRep, m: &MultiIndex) -> Result<usize> {
    let mut dim = 1usize;
    for (&dir, &e) in m.dirs.iter().zip(&m.entries) {
        dim = dim.checked_mul(checked_pow(psr.d(dir), e)?).ok_or(Error::Overflow {
            rows: dim,
            cols: e,
            limit: usize::MAX,
        })?;
    }
    Ok(dim)
}

pub(crate) fn covariance_worst(
    sigma: &[ComplexMatrix],
    corr: &Correspondence,
    a: &ComplexMatrix,
    label: &str,
    worst: &mut Worst,
) -> Result<()> {
    let n = a.nrows();
    let d = corr.dim();
    let id_n = identity(n);
    for (g, s) in sigma.iter().enumerate() {
        let r = a * kron(&corr.left_action[g], &id_n)? - s * a;
        worst.consider(format!("{label}left[{}]", g + 1), &r);
    }
    for (ga, sa) in sigma.iter().enumerate() {
        for (gb, sb) in sigma.iter().enumerate() {
            let lhs = sa * a * id_kron(d, sb)?;
            let rhs = a * kron(&(&corr.left_action[ga] * &corr.right_action[gb]), &id_n)?;
            worst.consider(format!("{label}pair[{},{}]", ga + 1, gb + 1), &(lhs - rhs));
        }
    }
    Ok(())
}

/// `‖Ã(π(a)⊗I) − σ(a)Ã‖` over generators and the two-sided identity
/// `σ(a)Ã(I_E⊗σ(b)) = Ã(π(a)·b⊗I)` over generator pairs.
pub fn check_covariance(rep: &CovariantRep, tol: &ToleranceConfig) -> Result<CheckReport> {
    if rep.corr.is_scalar() {
        return Ok(CheckReport::vacuous("covariance", tol.eq_tol, "scalar algebra"));
    }
    let mut worst = Worst::default();
    covariance_worst(&rep.sigma, &rep.corr, &rep.atilde, "", &mut worst)?;
    Ok(worst.into_report("covariance", tol.eq_tol, false))
}

/// Covariance of every direction of a product-system representation.
pub fn check_covariance_product(psr: &ProductSystemRep, tol: &ToleranceConfig) -> Result<CheckReport> {
    if psr.corrs[0].is_scalar() {
        return Ok(CheckReport::vacuous("covariance", tol.eq_tol, "scalar algebra"));
    }
    let mut worst = Worst::default();
    for i in 0..psr.k() {
        covariance_worst(
            &psr.sigma,
            &psr.corrs[i],
            &psr.atildes[i],
            &format!("direction {}: ", i + 1),
            &mut worst,
        )?;
    }
    Ok(worst.into_report("covariance", tol.eq_tol, false))
}
