//! Product states, state sets, and the checks every analysis starts from.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron_vec, overlap_vec, CMatrix, CVector, C64};
use crate::wire::{self, WireVector};

/// Default verdict tolerance for orthogonality and phase equivalence.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Factors with a smaller norm are rejected instead of normalized.
pub const MIN_FACTOR_NORM: f64 = 1e-6;

/// Local dimensions `d_1, ..., d_m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SystemShape {
    dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::ShapeMismatch("at least one party is required".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.parties() {
            return Err(Error::PartyOutOfRange {
                party,
                parties: self.parties(),
            });
        }
        Ok(())
    }
}

/// A pure product state: one unit vector per party.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    label: String,
    factors: Vec<CVector>,
}

impl ProductState {
    /// Normalizes every factor; factors shorter than `MIN_FACTOR_NORM` are
    /// rejected.
    pub fn new(label: impl Into<String>, factors: Vec<CVector>) -> Result<Self> {
        let label = label.into();
        let factors = factors
            .into_iter()
            .map(|f| {
                let norm = f.norm();
                if !norm.is_finite() || norm < MIN_FACTOR_NORM {
                    return Err(Error::DegenerateFactor {
                        label: label.clone(),
                        norm,
                    });
                }
                // leave exact unit vectors untouched
                if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
                    Ok(f)
                } else {
                    Ok(f.unscale(norm))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { label, factors })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn factors(&self) -> &[CVector] {
        &self.factors
    }

    pub fn factor(&self, party: usize) -> &CVector {
        &self.factors[party]
    }

    pub fn parties(&self) -> usize {
        self.factors.len()
    }

    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            factors: self.factors.clone(),
        }
    }

    /// Copy with the factor of `party` replaced (and normalized).
    pub fn with_factor(&self, party: usize, factor: CVector) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors[party] = factor;
        Self::new(self.label.clone(), factors)
    }

    /// Copy with `factor` appended as a new last party.
    pub fn appended(&self, factor: CVector) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.push(factor);
        Self::new(self.label.clone(), factors)
    }

    /// Full state vector in the tensor product space.
    pub fn to_vector(&self) -> CVector {
        let mut parts = self.factors.iter();
        let first = parts
            .next()
            .cloned()
            .unwrap_or_else(|| CVector::from_element(1, C64::new(1.0, 0.0)));
        parts.fold(first, |acc, f| kron_vec(&acc, f))
    }
}

/// `prod_p <s_p|t_p>`.
pub fn overlap(s: &ProductState, t: &ProductState) -> Result<C64> {
    if s.parties() != t.parties() {
        return Err(Error::ShapeMismatch(format!(
            "{} parties vs {} parties",
            s.parties(),
            t.parties()
        )));
    }
    s.factors
        .iter()
        .zip(&t.factors)
        .try_fold(C64::new(1.0, 0.0), |acc, (u, v)| Ok(acc * overlap_vec(u, v)?))
}

/// Product of factor overlaps over every party except `party`.
pub fn off_party_overlap(s: &ProductState, t: &ProductState, party: usize) -> C64 {
    s.factors
        .iter()
        .zip(&t.factors)
        .enumerate()
        .filter(|&(q, _)| q != party)
        .map(|(_, (u, v))| u.dotc(v))
        .product()
}

/// An ordered, immutable collection of product states on one shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateSetWire", into = "StateSetWire")]
pub struct StateSet {
    shape: SystemShape,
    states: Vec<ProductState>,
}

impl StateSet {
    pub fn new(shape: SystemShape, states: Vec<ProductState>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &states {
            if s.parties() != shape.parties() {
                return Err(Error::ShapeMismatch(format!(
                    "state `{}` has {} factors, shape has {} parties",
                    s.label,
                    s.parties(),
                    shape.parties()
                )));
            }
            for (f, &d) in s.factors.iter().zip(shape.dims()) {
                if f.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: f.len(),
                    });
                }
            }
            if !seen.insert(s.label.as_str()) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        Ok(Self { shape, states })
    }

    pub fn from_dims(dims: Vec<usize>, states: Vec<ProductState>) -> Result<Self> {
        Self::new(SystemShape::new(dims)?, states)
    }

    pub fn shape(&self) -> &SystemShape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn parties(&self) -> usize {
        self.shape.parties()
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.states.iter().map(|s| s.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s.label == label)
    }

    pub fn get(&self, label: &str) -> Option<&ProductState> {
        self.states.iter().find(|s| s.label == label)
    }

    /// The states with the given labels, in the given order.
    pub fn subset(&self, labels: &[String]) -> Result<StateSet> {
        let states = labels
            .iter()
            .map(|l| self.get(l).cloned().ok_or_else(|| Error::UnknownLabel(l.clone())))
            .collect::<Result<Vec<_>>>()?;
        StateSet::new(self.shape.clone(), states)
    }

    /// The set seen by the first `parties` parties only.
    pub fn leading_parties(&self, parties: usize) -> Result<StateSet> {
        if parties == 0 || parties > self.parties() {
            return Err(Error::PartyOutOfRange {
                party: parties,
                parties: self.parties(),
            });
        }
        let shape = SystemShape::new(self.dims()[..parties].to_vec())?;
        let states = self
            .states
            .iter()
            .map(|s| ProductState {
                label: s.label.clone(),
                factors: s.factors[..parties].to_vec(),
            })
            .collect();
        StateSet::new(shape, states)
    }

    /// This set followed by `extra`.
    pub fn extended(&self, extra: &[ProductState]) -> Result<StateSet> {
        let mut states = self.states.clone();
        states.extend_from_slice(extra);
        StateSet::new(self.shape.clone(), states)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateWire {
    label: String,
    factors: Vec<WireVector>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateSetWire {
    dims: Vec<usize>,
    states: Vec<StateWire>,
}

impl TryFrom<StateSetWire> for StateSet {
    type Error = Error;

    fn try_from(w: StateSetWire) -> Result<Self> {
        let states = w
            .states
            .into_iter()
            .map(|s| {
                let factors = s.factors.iter().map(|f| wire::vector_from_wire(f)).collect();
                ProductState::new(s.label, factors)
            })
            .collect::<Result<Vec<_>>>()?;
        StateSet::from_dims(w.dims, states)
    }
}

impl From<StateSet> for StateSetWire {
    fn from(s: StateSet) -> Self {
        StateSetWire {
            dims: s.shape.dims,
            states: s
                .states
                .into_iter()
                .map(|p| StateWire {
                    label: p.label,
                    factors: p.factors.iter().map(wire::vector_to_wire).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstPair {
    pub first: String,
    pub second: String,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    #[serde(with = "wire::matrix")]
    pub gram: CMatrix,
    pub orthogonal: bool,
    /// Largest off-diagonal Gram magnitude; absent for a single state.
    pub worst: Option<WorstPair>,
}

pub fn gram_matrix(set: &StateSet) -> CMatrix {
    let n = set.len();
    let mut gram = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // shapes agree by construction
            gram[(i, j)] = overlap(&set.states[i], &set.states[j]).expect("same shape");
        }
    }
    gram
}

pub fn orthogonality_report(set: &StateSet, tol: f64) -> OrthogonalityReport {
    let gram = gram_matrix(set);
    let mut worst: Option<WorstPair> = None;
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            let magnitude = gram[(i, j)].norm();
            if worst.as_ref().is_none_or(|w| magnitude > w.magnitude) {
                worst = Some(WorstPair {
                    first: set.states[i].label.clone(),
                    second: set.states[j].label.clone(),
                    magnitude,
                });
            }
        }
    }
    let orthogonal = worst.as_ref().is_none_or(|w| w.magnitude <= tol);
    OrthogonalityReport {
        gram,
        orthogonal,
        worst,
    }
}

/// `Err(NotOrthogonal)` naming the worst pair unless the set is mutually
/// orthogonal within `tol`.
pub fn require_orthogonal(set: &StateSet, tol: f64) -> Result<()> {
    let report = orthogonality_report(set, tol);
    match report.worst {
        Some(w) if !report.orthogonal => Err(Error::NotOrthogonal {
            first: w.first,
            second: w.second,
            magnitude: w.magnitude,
        }),
        _ => Ok(()),
    }
}

/// Local factors of one party that agree up to a global phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseClass {
    pub representative: CVector,
    /// Indices into the state set, ascending.
    pub members: Vec<usize>,
}

/// `u` and `v` are phase-equivalent when `|<u|v>| >= 1 - tol`.
pub fn phase_equivalent(u: &CVector, v: &CVector, tol: f64) -> bool {
    u.len() == v.len() && u.dotc(v).norm() >= 1.0 - tol
}

/// Partition of the states by the phase class of their factor on `party`.
/// Classes appear in order of first occurrence; representatives are the
/// first member's factor.
pub fn local_phase_classes(set: &StateSet, party: usize, tol: f64) -> Result<Vec<PhaseClass>> {
    set.shape.check_party(party)?;
    let mut classes: Vec<PhaseClass> = Vec::new();
    for (i, s) in set.states.iter().enumerate() {
        let f = s.factor(party);
        match classes.iter_mut().find(|c| phase_equivalent(&c.representative, f, tol)) {
            Some(class) => class.members.push(i),
            None => classes.push(PhaseClass {
                representative: f.clone(),
                members: vec![i],
            }),
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::linalg::{basis_vec, c, real_vec};

    #[test]
    fn self_overlap_is_one() {
        let s = ProductState::new("s", vec![real_vec(&[3.0, 4.0]), basis_vec(3, 2)]).unwrap();
        assert!((overlap(&s, &s).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eq1_first_pair_orthogonal() {
        let set = fixtures::eq1_six();
        assert!(overlap(&set.states()[0], &set.states()[1]).unwrap().norm() < 1e-15);
    }

    #[test]
    fn appended_orthogonal_factor_kills_overlap() {
        let set = fixtures::eq1_six();
        let alpha = basis_vec(2, 0);
        let beta = real_vec(&[1.0, 1.0]);
        let a = set.states()[0].appended(alpha).unwrap();
        let b = set.states()[3].appended(beta).unwrap();
        assert!(overlap(&a, &b).unwrap().norm() < 1e-15);
    }

    #[test]
    fn overlap_shape_mismatch() {
        let a = ProductState::new("a", vec![basis_vec(2, 0)]).unwrap();
        let b = ProductState::new("b", vec![basis_vec(2, 0), basis_vec(2, 0)]).unwrap();
        assert!(matches!(overlap(&a, &b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn loader_normalizes_and_rejects_degenerate() {
        let s = ProductState::new("s", vec![real_vec(&[1.0, 1.0])]).unwrap();
        assert!((s.factor(0).norm() - 1.0).abs() < 1e-15);
        let bad = ProductState::new("z", vec![real_vec(&[1e-7, 0.0])]);
        assert!(matches!(bad, Err(Error::DegenerateFactor { .. })));
    }

    #[test]
    fn set_rejects_duplicates_and_bad_dims() {
        let a = ProductState::new("a", vec![basis_vec(2, 0)]).unwrap();
        assert!(matches!(
            StateSet::from_dims(vec![2], vec![a.clone(), a.clone()]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            StateSet::from_dims(vec![3], vec![a.clone()]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            StateSet::from_dims(vec![1], vec![]),
            Err(Error::InvalidDimension(1))
        ));
    }

    #[test]
    fn orthogonality_examples() {
        let r = orthogonality_report(&fixtures::eq1_six(), DEFAULT_TOL);
        assert!(r.orthogonal);
        assert!(crate::linalg::max_abs(&(r.gram - CMatrix::identity(6, 6))) < 1e-12);
        assert!(orthogonality_report(&fixtures::example1_default(), DEFAULT_TOL).orthogonal);

        let set = StateSet::from_dims(
            vec![2],
            vec![
                ProductState::new("zero", vec![basis_vec(2, 0)]).unwrap(),
                ProductState::new("plus", vec![real_vec(&[1.0, 1.0])]).unwrap(),
            ],
        )
        .unwrap();
        let r = orthogonality_report(&set, DEFAULT_TOL);
        assert!(!r.orthogonal);
        let w = r.worst.unwrap();
        assert!((w.magnitude - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(require_orthogonal(&set, DEFAULT_TOL).is_err());
    }

    #[test]
    fn phase_classes_examples() {
        let ex1 = fixtures::example1_default();
        let classes = local_phase_classes(&ex1, 3, DEFAULT_TOL).unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].members, vec![0, 1, 2]);
        assert_eq!(classes[1].members, vec![3, 4, 5]);

        let eq1 = fixtures::eq1_six();
        let classes = local_phase_classes(&eq1, 0, DEFAULT_TOL).unwrap();
        let members: Vec<_> = classes.iter().map(|c| c.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 1], vec![2], vec![3], vec![4, 5]]);

        let phase = c((std::f64::consts::PI / 3.0).cos(), (std::f64::consts::PI / 3.0).sin());
        let set = StateSet::from_dims(
            vec![2],
            vec![
                ProductState::new("a", vec![basis_vec(2, 0)]).unwrap(),
                ProductState::new("b", vec![basis_vec(2, 0) * phase]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(local_phase_classes(&set, 0, DEFAULT_TOL).unwrap().len(), 1);
        assert!(local_phase_classes(&set, 1, DEFAULT_TOL).is_err());
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let set = fixtures::example2();
        let text = set.to_json().unwrap();
        let back = StateSet::from_json(&text).unwrap();
        assert_eq!(back.len(), set.len());
        for (a, b) in set.states().iter().zip(back.states()) {
            assert_eq!(a.label(), b.label());
            for (u, v) in a.factors().iter().zip(b.factors()) {
                assert!((u - v).norm() < 1e-15);
            }
        }
        let bad = r#"{"dims":[2],"states":[],"extra":1}"#;
        assert!(StateSet::from_json(bad).is_err());
        let reordered = r#"{"states":[{"factors":[[[1,0],[0,0]]],"label":"a"}],"dims":[2]}"#;
        assert_eq!(StateSet::from_json(reordered).unwrap().len(), 1);
    }

    #[test]
    fn leading_parties_and_subset() {
        let ex1 = fixtures::example1_default();
        let base = ex1.leading_parties(3).unwrap();
        assert_eq!(base.dims(), &[2, 2, 2]);
        assert_eq!(base.len(), 6);
        let sub = ex1.subset(&["psi2".to_string(), "psi5".to_string()]).unwrap();
        assert_eq!(sub.labels().collect::<Vec<_>>(), vec!["psi2", "psi5"]);
        assert!(ex1.subset(&["nope".to_string()]).is_err());
    }
}
