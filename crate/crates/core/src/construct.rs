//! Derived sets: one or more appended parties whose local factors are drawn
//! from a nonorthogonal pair, the completable extension grid, and completion
//! checks.

use serde::{Deserialize, Serialize};

use crate::certify::CertifyHints;
use crate::error::{Error, Result};
use crate::linalg::{c, span_rank, CVector};
use crate::states::{orthogonality_report, require_orthogonal, ProductState, StateSet, WorstPair, DEFAULT_TOL};
use crate::wire;

/// Which member of the pair a state receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Choice {
    Alpha,
    Beta,
}

/// A new party with local factors drawn from `{alpha, beta}`.
///
/// `alpha == beta` is allowed: every state then gets the same factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendSpec {
    #[serde(with = "wire::vector")]
    pub alpha: CVector,
    #[serde(with = "wire::vector")]
    pub beta: CVector,
    pub assignment: Vec<Choice>,
}

impl AppendSpec {
    pub fn new(alpha: CVector, beta: CVector, assignment: Vec<Choice>) -> Self {
        Self {
            alpha,
            beta,
            assignment,
        }
    }

    /// Same factor for every one of `states` states.
    pub fn fixed(factor: CVector, states: usize) -> Self {
        Self::new(factor.clone(), factor, vec![Choice::Alpha; states])
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn validate(&self, states: usize) -> Result<(CVector, CVector)> {
        if self.alpha.len() != self.beta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alpha.len(),
                found: self.beta.len(),
            });
        }
        if self.dim() < 2 {
            return Err(Error::InvalidDimension(self.dim()));
        }
        if self.assignment.len() != states {
            return Err(Error::AssignmentLength {
                expected: states,
                found: self.assignment.len(),
            });
        }
        let (a, b) = (self.alpha.normalize(), self.beta.normalize());
        let overlap = a.dotc(&b).norm();
        if overlap.is_nan() || overlap <= DEFAULT_TOL {
            return Err(Error::OrthogonalPair(overlap));
        }
        Ok((a, b))
    }
}

/// A constructed set plus what the certifier needs to know about it.
#[derive(Clone, Debug)]
pub struct Construction {
    pub set: StateSet,
    pub hints: CertifyHints,
}

/// `{psi_i ⊗ alpha_i}`: the base with one more party.
pub fn append_party(base: &StateSet, spec: &AppendSpec) -> Result<Construction> {
    require_orthogonal(base, DEFAULT_TOL)?;
    let (alpha, beta) = spec.validate(base.len())?;
    let states = base
        .states()
        .iter()
        .zip(&spec.assignment)
        .map(|(s, choice)| {
            s.appended(match choice {
                Choice::Alpha => alpha.clone(),
                Choice::Beta => beta.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dims = base.dims().to_vec();
    dims.push(spec.dim());
    Ok(Construction {
        set: StateSet::from_dims(dims, states)?,
        hints: CertifyHints::split(base.parties()),
    })
}

/// Left fold of [`append_party`]; the hints record the original base as the
/// trivial-only block.
pub fn append_parties(base: &StateSet, specs: &[AppendSpec]) -> Result<Construction> {
    if specs.is_empty() {
        return Err(Error::ShapeMismatch("at least one append spec is required".into()));
    }
    let mut set = base.clone();
    for spec in specs {
        set = append_party(&set, spec)?.set;
    }
    Ok(Construction {
        set,
        hints: CertifyHints::split(base.parties()),
    })
}

/// Extra base-space states plus an orthonormal basis of the appended space.
#[derive(Clone, Debug)]
pub struct CompletionInput {
    pub extra_states: Vec<ProductState>,
    /// `e_1 = alpha` (up to phase) and `span{e_1, e_2} = span{alpha, beta}`.
    pub tail_basis: Vec<CVector>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletionReport {
    pub orthogonal: bool,
    pub worst: Option<WorstPair>,
    pub span_rank: usize,
    pub full_dimension: usize,
    /// Whether the states span the whole space (an orthogonal product basis).
    pub complete: bool,
}

/// Whether `base ∪ extra` is a mutually orthogonal product set, and whether
/// it spans the full space.
pub fn verify_completion(base: &StateSet, extra: &[ProductState]) -> Result<CompletionReport> {
    let union = base.extended(extra)?;
    let report = orthogonality_report(&union, DEFAULT_TOL);
    let vectors: Vec<CVector> = union.states().iter().map(|s| s.to_vector()).collect();
    let rank = span_rank(&vectors);
    let full = base.shape().total_dim();
    Ok(CompletionReport {
        orthogonal: report.orthogonal,
        worst: report.worst,
        span_rank: rank,
        full_dimension: full,
        complete: report.orthogonal && rank == full,
    })
}

/// The vector in `span{e1, e2}` orthogonal to `v`, phased so that
/// `<e2|v_perp>` is real and positive.
fn in_plane_perp(v: &CVector, e1: &CVector, e2: &CVector) -> CVector {
    let a = e1.dotc(v);
    let b = e2.dotc(v);
    let perp = e1 * (-b.conj()) + e2 * a.conj();
    let anchor = e2.dotc(&perp);
    let anchor = if anchor.norm() > 1e-12 { anchor } else { e1.dotc(&perp) };
    let phase = anchor.conj() / anchor.norm();
    (perp * phase).normalize()
}

fn check_tail_basis(basis: &[CVector], alpha: &CVector, beta: &CVector) -> Result<()> {
    let d = alpha.len();
    if basis.len() != d || basis.iter().any(|e| e.len() != d) {
        return Err(Error::InvalidCompletion(format!(
            "tail basis must contain {d} vectors of dimension {d}"
        )));
    }
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { 1.0 } else { 0.0 };
            if (basis[i].dotc(&basis[j]) - c(want, 0.0)).norm() > DEFAULT_TOL {
                return Err(Error::InvalidCompletion("tail basis is not orthonormal".into()));
            }
        }
    }
    if basis[0].dotc(alpha).norm() < 1.0 - DEFAULT_TOL {
        return Err(Error::InvalidCompletion(
            "first tail basis vector must equal alpha up to phase".into(),
        ));
    }
    let in_plane = &basis[0] * basis[0].dotc(beta) + &basis[1] * basis[1].dotc(beta);
    if (beta - in_plane).norm() > DEFAULT_TOL {
        return Err(Error::InvalidCompletion("beta is not in span{e1, e2}".into()));
    }
    Ok(())
}

/// The `N * d'` grid
///
/// ```text
/// psi_i ⊗ alpha_i        (i <= k),  psi_i ⊗ alpha       (i > k)
/// psi_i ⊗ alpha_i_perp   (i <= k),  psi_i ⊗ alpha_perp  (i > k)
/// psi_i ⊗ e_r            (all i, r = 3..d')
/// ```
///
/// Row two is labeled `<label>_perp`, row `r >= 3` is labeled `<label>_e<r>`.
pub fn build_sext(base: &StateSet, completion: &CompletionInput, spec: &AppendSpec) -> Result<Construction> {
    let (alpha, beta) = spec.validate(base.len())?;
    let report = verify_completion(base, &completion.extra_states)?;
    if !report.orthogonal {
        return Err(Error::InvalidCompletion(format!(
            "base and extra states are not mutually orthogonal (worst {:?})",
            report.worst
        )));
    }
    let basis: Vec<CVector> = completion.tail_basis.iter().map(|e| e.normalize()).collect();
    check_tail_basis(&basis, &alpha, &beta)?;
    let (e1, e2) = (&basis[0], &basis[1]);
    let alpha_perp = in_plane_perp(&alpha, e1, e2);
    let beta_perp = in_plane_perp(&beta, e1, e2);

    let extended = base.extended(&completion.extra_states)?;
    let k = base.len();
    let factor_of = |i: usize, choice: Choice| match (i < k, choice) {
        (true, Choice::Beta) => (&beta, &beta_perp),
        _ => (&alpha, &alpha_perp),
    };
    let assignment = |i: usize| if i < k { spec.assignment[i] } else { Choice::Alpha };

    let mut states = Vec::with_capacity(extended.len() * spec.dim());
    for (i, s) in extended.states().iter().enumerate() {
        states.push(s.appended(factor_of(i, assignment(i)).0.clone())?);
    }
    for (i, s) in extended.states().iter().enumerate() {
        let perp = factor_of(i, assignment(i)).1.clone();
        states.push(s.appended(perp)?.relabeled(format!("{}_perp", s.label())));
    }
    for (r, e) in basis.iter().enumerate().skip(2) {
        for s in extended.states() {
            states.push(s.appended(e.clone())?.relabeled(format!("{}_e{}", s.label(), r + 1)));
        }
    }
    let mut dims = base.dims().to_vec();
    dims.push(spec.dim());
    Ok(Construction {
        set: StateSet::from_dims(dims, states)?,
        hints: CertifyHints::split(base.parties()),
    })
}

/// Where a build plan takes a state set from.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SetSource {
    Fixture(String),
    Inline(StateSet),
}

impl SetSource {
    pub fn resolve(&self) -> Result<StateSet> {
        match self {
            SetSource::Fixture(name) => crate::fixtures::builtin_fixture(name),
            SetSource::Inline(set) => Ok(set.clone()),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SextPlan {
    pub extra: SetSource,
    pub tail_basis: Vec<wire::WireVector>,
}

/// JSON build plan: a base, the appended parties, and optionally the
/// extension grid (which needs exactly one append).
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildPlan {
    pub base: SetSource,
    #[serde(default)]
    pub appends: Vec<AppendSpec>,
    #[serde(default)]
    pub sext: Option<SextPlan>,
}

impl BuildPlan {
    pub fn execute(&self) -> Result<Construction> {
        let base = self.base.resolve()?;
        match &self.sext {
            Some(sext) => {
                let [spec] = self.appends.as_slice() else {
                    return Err(Error::InvalidCompletion(
                        "the extension grid needs exactly one append".into(),
                    ));
                };
                let extra = sext.extra.resolve()?;
                let completion = CompletionInput {
                    extra_states: extra.states().to_vec(),
                    tail_basis: sext.tail_basis.iter().map(|v| wire::vector_from_wire(v)).collect(),
                };
                build_sext(&base, &completion, spec)
            }
            None if self.appends.is_empty() => Ok(Construction {
                hints: CertifyHints::default(),
                set: base,
            }),
            None => append_parties(&base, &self.appends),
        }
    }
}
