use serde::Serialize;

use super::single::classify_compressed;
use super::{beta_label, grade_sequence, range_sequence, SummandClass};
use crate::error::{Error, Result};
use crate::hypotheses::{check_doubly_twisted, check_twist_family, check_twisted, Scope};
use crate::linalg::{
    containment_residual, direct_sum_check, hstack, id_kron, image, intersect, kernel, orthonormal_frame, principal_angles,
    ComplexMatrix, Frame, ToleranceConfig,
};
use crate::report::{CheckReport, Worst};
use crate::repn::{atilde_multi, word_domain_dim, MultiIndex, ProductSystemRep};
use crate::structure::{reducing_worst, wandering_space};

/// Hard cap on the number of directions (`2^k` summands).
pub const MAX_DIRECTIONS: usize = 4;

/// Vector budget of the brute-force oracle.
const ORACLE_MAX_VECTORS: usize = 1_000_000;

#[derive(Clone, Debug, Serialize)]
pub struct DirectionClass {
    /// 0-based.
    pub direction: usize,
    pub expected: SummandClass,
    pub observed: SummandClass,
    pub surjectivity_margin: f64,
    pub grade_overlap: f64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct Summand {
    /// 0-based, increasing.
    pub beta: Vec<usize>,
    pub label: String,
    pub frame: Frame,
    /// The intersection over complement words that `frame` is generated from.
    pub core: Frame,
    pub reducing_defect: f64,
    pub reducing_worst: Option<String>,
    pub classification: Vec<DirectionClass>,
    pub stabilized: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiResiduals {
    pub pairwise_overlap: f64,
    /// `dim K − rank(Σ_β K_β)`.
    pub span_defect: f64,
    pub total_rank: usize,
    pub reducing_defect: f64,
    pub classification_failures: usize,
}

#[derive(Clone, Debug)]
pub struct MultiDecomposition {
    pub k_dim: usize,
    /// Indexed by the bitmask of β (bit `i` set iff direction `i ∈ β`).
    pub summands: Vec<Summand>,
    pub residuals: MultiResiduals,
    pub level_caps: Vec<usize>,
    pub stabilized: bool,
    pub hypotheses: Vec<CheckReport>,
}

impl MultiDecomposition {
    pub fn summand(&self, beta: &[usize]) -> Option<&Summand> {
        self.summands.iter().find(|s| s.beta == beta)
    }

    pub fn residual_reports(&self, tol: &ToleranceConfig) -> Vec<CheckReport> {
        let r = &self.residuals;
        let mut out = vec![
            CheckReport::new("pairwise_orthogonality", r.pairwise_overlap, tol.eq_tol, false),
            CheckReport::new("total_span", r.span_defect, tol.eq_tol, false).with_value("total_rank", r.total_rank as f64),
            CheckReport::new("reducing", r.reducing_defect, tol.eq_tol, false),
            CheckReport::new("classification", r.classification_failures as f64, 0.0, false),
        ];
        for s in &self.summands {
            for c in s.classification.iter().filter(|c| !c.ok) {
                out[3].notes.push(format!(
                    "K{} direction {}: expected {:?}, observed {:?}",
                    s.label,
                    c.direction + 1,
                    c.expected,
                    c.observed
                ));
            }
        }
        if !self.stabilized {
            out.push(CheckReport::new("stabilized", 1.0, 0.0, false).fail_with("a level cap was reached before stabilization"));
        }
        out
    }
}

fn check_caps(psr: &ProductSystemRep, caps: &[usize]) -> Result<()> {
    if psr.k() > MAX_DIRECTIONS {
        return Err(Error::TooManyDirections {
            k: psr.k(),
            max: MAX_DIRECTIONS,
        });
    }
    if caps.len() != psr.k() {
        return Err(Error::DimensionMismatch {
            op: "level_caps",
            expected: psr.k(),
            got: caps.len(),
        });
    }
    Ok(())
}

fn split(k: usize, mask: usize) -> (Vec<usize>, Vec<usize>) {
    (0..k).partition(|i| mask >> i & 1 == 1)
}

/// `K_β` for every `β ⊆ {1..k}`: the span over β-words of the intersection
/// over complement words applied to `N_β`. Complement intersections use
/// range nesting, so only the cap frontier is evaluated.
pub fn wold_multi(psr: &ProductSystemRep, level_caps: &[usize], tol: &ToleranceConfig) -> Result<MultiDecomposition> {
    tol.validate()?;
    check_caps(psr, level_caps)?;
    let (k, n) = (psr.k(), psr.k_dim());
    let mut summands = Vec::with_capacity(1 << k);
    for mask in 0..1usize << k {
        let (beta, comp) = split(k, mask);
        let mut stabilized = true;
        let mut core = if beta.is_empty() {
            Frame::full(n)
        } else {
            wandering_space(psr, &beta, tol)?
        };
        for &j in comp.iter().rev() {
            let r = range_sequence(psr.atilde(j), psr.d(j), &core, level_caps[j], 0, tol)?;
            stabilized &= r.stabilized;
            core = r.limit().clone();
        }
        let mut frame = core.clone();
        for &i in beta.iter().rev() {
            let g = grade_sequence(psr.atilde(i), psr.d(i), &frame, level_caps[i], tol)?;
            stabilized &= g.stabilized;
            frame = g.span;
        }

        let mut worst = Worst::default();
        let mut classification = Vec::with_capacity(k);
        for i in 0..k {
            reducing_worst(psr.atilde(i), psr.d(i), psr.sigma(), &frame, &format!("A[{}] ", i + 1), &mut worst)?;
            let c = classify_compressed(psr.atilde(i), psr.d(i), &frame, level_caps[i], tol)?;
            let expected = if beta.contains(&i) {
                SummandClass::Induced
            } else {
                SummandClass::Invertible
            };
            classification.push(DirectionClass {
                direction: i,
                expected,
                observed: c.class,
                surjectivity_margin: c.surjectivity_margin,
                grade_overlap: c.grade_overlap,
                // a zero summand is vacuously of either kind
                ok: frame.is_zero() || c.class == expected,
            });
        }
        summands.push(Summand {
            label: beta_label(&beta),
            beta,
            frame,
            core,
            reducing_defect: worst.residual,
            reducing_worst: worst.label,
            classification,
            stabilized,
        });
    }

    let frames: Vec<&Frame> = summands.iter().map(|s| &s.frame).collect();
    let sum = direct_sum_check(&frames, n, tol)?;
    let residuals = MultiResiduals {
        pairwise_overlap: sum.max_overlap,
        span_defect: sum.span_defect,
        total_rank: sum.total_rank,
        reducing_defect: summands.iter().map(|s| s.reducing_defect).fold(0.0, f64::max),
        classification_failures: summands
            .iter()
            .map(|s| s.classification.iter().filter(|c| !c.ok).count())
            .sum(),
    };
    let scope = if psr.window_mask().is_some() {
        Scope::Window
    } else {
        Scope::Full
    };
    let hypotheses = vec![
        check_twist_family(psr, tol)?,
        check_twisted(psr, scope, tol)?,
        check_doubly_twisted(psr, scope, tol)?,
    ];
    Ok(MultiDecomposition {
        k_dim: n,
        stabilized: summands.iter().all(|s| s.stabilized),
        summands,
        residuals,
        level_caps: level_caps.to_vec(),
        hypotheses,
    })
}

/// Every multi-index over `dirs` with entry `j` in `0..=caps[dirs[j]]`.
fn words(dirs: &[usize], caps: &[usize]) -> Vec<MultiIndex> {
    let mut out = vec![Vec::new()];
    for &dir in dirs {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..=caps[dir]).map(move |e| {
                    let mut w = prefix.clone();
                    w.push(e);
                    w
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|entries| MultiIndex::new(dirs.to_vec(), entries).expect("increasing directions"))
        .collect()
}

/// `Ã_m (E_m ⊗ span B)` as raw columns.
fn word_image(psr: &ProductSystemRep, m: &MultiIndex, s: &Frame) -> Result<ComplexMatrix> {
    let dim = word_domain_dim(psr, m)?;
    Ok(atilde_multi(psr, m)? * id_kron(dim, s.basis())?)
}

/// Every word contributes at least `rank` vectors, so the word count alone
/// can rule a run out before anything is enumerated.
fn word_budget(dirs: &[usize], caps: &[usize], rank: usize) -> Result<()> {
    let words = dirs
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(caps[d].saturating_add(1)));
    match words.and_then(|w| w.checked_mul(rank.max(1))) {
        Some(total) if total <= ORACLE_MAX_VECTORS => Ok(()),
        other => Err(Error::Overflow {
            rows: other.unwrap_or(usize::MAX),
            cols: 1,
            limit: ORACLE_MAX_VECTORS,
        }),
    }
}

fn budget(count: &mut usize, add: usize) -> Result<()> {
    *count += add;
    if *count > ORACLE_MAX_VECTORS {
        return Err(Error::Overflow {
            rows: *count,
            cols: 1,
            limit: ORACLE_MAX_VECTORS,
        });
    }
    Ok(())
}

/// `K_β` by raw enumeration: `N_β` as the kernel of the stacked adjoints,
/// the core as the pairwise intersection of every complement-word image,
/// then every β-word applied to the core and orthonormalized once.
pub fn brute_force_oracle(
    psr: &ProductSystemRep,
    beta: &[usize],
    level_caps: &[usize],
    tol: &ToleranceConfig,
) -> Result<Frame> {
    check_caps(psr, level_caps)?;
    let (k, n) = (psr.k(), psr.k_dim());
    if beta.windows(2).any(|w| w[0] >= w[1]) || beta.iter().any(|&i| i >= k) {
        return Err(Error::BadParams("β must be strictly increasing directions in range".into()));
    }
    let comp: Vec<usize> = (0..k).filter(|i| !beta.contains(i)).collect();

    let wandering = if beta.is_empty() {
        Frame::full(n)
    } else {
        let rows: usize = beta.iter().map(|&i| psr.d(i) * n).sum();
        let mut stacked = ComplexMatrix::zeros(rows, n);
        let mut at = 0;
        for &i in beta {
            let adj = psr.atilde(i).adjoint();
            stacked.rows_mut(at, adj.nrows()).copy_from(&adj);
            at += adj.nrows();
        }
        kernel(&stacked, tol)?
    };

    word_budget(&comp, level_caps, wandering.rank())?;
    let mut count = 0usize;
    let mut core = wandering.clone();
    for w in words(&comp, level_caps) {
        let dim = word_domain_dim(psr, &w)?;
        budget(&mut count, dim * wandering.rank())?;
        core = intersect(&core, &image(&atilde_multi(psr, &w)?, &wandering.lift(dim)?, tol)?, tol)?;
    }

    word_budget(beta, level_caps, core.rank())?;
    let mut parts = Vec::new();
    for w in words(beta, level_caps) {
        let cols = word_image(psr, &w, &core)?;
        budget(&mut count, cols.ncols())?;
        parts.push(cols);
    }
    orthonormal_frame(&hstack(&parts, n)?, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    pub label: String,
    pub engine_rank: usize,
    pub oracle_rank: usize,
    /// Largest principal angle; `π/2` on a rank mismatch.
    pub max_angle: f64,
}

impl OracleComparison {
    pub fn agrees(&self, angle_tol: f64) -> bool {
        self.engine_rank == self.oracle_rank && self.max_angle <= angle_tol
    }
}

/// Run the oracle for every summand of `dec` and compare frames.
pub fn compare_with_oracle(
    psr: &ProductSystemRep,
    dec: &MultiDecomposition,
    tol: &ToleranceConfig,
) -> Result<Vec<OracleComparison>> {
    dec.summands
        .iter()
        .map(|s| {
            let oracle = brute_force_oracle(psr, &s.beta, &dec.level_caps, tol)?;
            let max_angle = if oracle.rank() == s.frame.rank() {
                principal_angles(&s.frame, &oracle).last().copied().unwrap_or(0.0)
            } else {
                std::f64::consts::FRAC_PI_2
            };
            Ok(OracleComparison {
                label: s.label.clone(),
                engine_rank: s.frame.rank(),
                oracle_rank: oracle.rank(),
                max_angle,
            })
        })
        .collect()
}

/// Classify `s` in every direction and require induced behaviour exactly on
/// `beta`, invertible behaviour elsewhere, and containment in `K_β`.
pub fn uniqueness_check_multi(
    psr: &ProductSystemRep,
    s: &Frame,
    beta: &[usize],
    level_caps: &[usize],
    tol: &ToleranceConfig,
) -> Result<CheckReport> {
    let dec = wold_multi(psr, level_caps, tol)?;
    let target = dec
        .summand(beta)
        .ok_or_else(|| Error::BadParams(format!("no summand for β = {}", beta_label(beta))))?;
    let mut worst = Worst::default();
    for i in 0..psr.k() {
        reducing_worst(psr.atilde(i), psr.d(i), psr.sigma(), s, "", &mut worst)?;
    }
    if worst.residual > tol.eq_tol {
        return Err(Error::NotReducing { defect: worst.residual });
    }
    let containment = containment_residual(s, &target.frame);
    let mut report = CheckReport::new("uniqueness", containment, tol.eq_tol, false)
        .with_value("containment", containment)
        .with_value("reducing_defect", worst.residual)
        .with_note(format!("target K{}", target.label));
    for i in 0..psr.k() {
        let c = classify_compressed(psr.atilde(i), psr.d(i), s, level_caps[i], tol)?;
        let expected = if beta.contains(&i) {
            SummandClass::Induced
        } else {
            SummandClass::Invertible
        };
        if c.class != expected && !s.is_zero() {
            report = report.fail_with(format!("direction {}: expected {expected:?}, observed {:?}", i + 1, c.class));
        }
    }
    Ok(report)
}
