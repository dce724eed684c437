//! Per-party analysis of orthogonality-preserving measurements.
//!
//! A POVM element `E` on party `p` preserves the orthogonality of a set when
//! `<a_i|E|a_j> * prod_{q != p} <f_iq|f_jq> = 0` for every pair of states. The
//! pairs whose off-party overlap is nonzero therefore pin `E` to the solution
//! space of `<a_i|E|a_j> = 0`. A party can only measure trivially exactly when
//! that space is `span{I}`: any further solution `H` gives the nontrivial
//! measurement `(I ± eps H)/2`.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{
    hermitian_solution_space, spectral_norm_hermitian, trace, CMatrix, HermitianBasis, LinearConstraint,
};
use crate::measure::Measurement;
use crate::states::{off_party_overlap, phase_equivalent, require_orthogonal, StateSet, DEFAULT_TOL};
use crate::wire;

/// Off-party overlaps at or below this magnitude are treated as exact zeros.
pub const ACTIVITY_THRESHOLD: f64 = 1e-12;
/// Mixing strength for the synthesized two-outcome measurement.
pub const WITNESS_STRENGTH: f64 = 0.5;

fn same_up_to_phase(a: &LinearConstraint, b: &LinearConstraint) -> bool {
    let eq = |u, v| phase_equivalent(u, v, DEFAULT_TOL);
    (eq(&a.bra, &b.bra) && eq(&a.ket, &b.ket)) || (eq(&a.bra, &b.ket) && eq(&a.ket, &b.bra))
}

/// Constraints `<a_i|H|a_j> = 0` on party `party`, one per unordered pair
/// with an active off-party overlap, deduplicated up to phase.
pub fn preserving_constraints(set: &StateSet, party: usize) -> Result<Vec<LinearConstraint>> {
    preserving_constraints_with_tol(set, party, DEFAULT_TOL)
}

/// As [`preserving_constraints`], with `tol` as the orthogonality precondition.
pub fn preserving_constraints_with_tol(set: &StateSet, party: usize, tol: f64) -> Result<Vec<LinearConstraint>> {
    set.shape().check_party(party)?;
    require_orthogonal(set, tol)?;
    let states = set.states();
    let mut constraints: Vec<LinearConstraint> = Vec::new();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            if off_party_overlap(&states[i], &states[j], party).norm() <= ACTIVITY_THRESHOLD {
                continue;
            }
            let k = LinearConstraint::new(states[i].factor(party).clone(), states[j].factor(party).clone())?;
            if !constraints.iter().any(|c| same_up_to_phase(c, &k)) {
                constraints.push(k);
            }
        }
    }
    Ok(constraints)
}

#[derive(Clone, Debug, Serialize)]
pub struct PartyAnalysis {
    pub party: usize,
    #[serde(skip)]
    pub space: HermitianBasis,
    pub dimension: usize,
    pub trivial_only: bool,
    /// Traceless solution with unit Frobenius norm; present iff
    /// `dimension > 1`.
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    pub witness: Option<CMatrix>,
}

mod opt_matrix {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> std::result::Result<S::Ok, S::Error> {
        m.as_ref().map(wire::matrix_to_wire).serialize(s)
    }
}

pub fn analyze_party(set: &StateSet, party: usize) -> Result<PartyAnalysis> {
    analyze_party_with_tol(set, party, DEFAULT_TOL)
}

pub fn analyze_party_with_tol(set: &StateSet, party: usize, tol: f64) -> Result<PartyAnalysis> {
    let constraints = preserving_constraints_with_tol(set, party, tol)?;
    let d = set.dims()[party];
    let space = hermitian_solution_space(&constraints, d)?;
    let dimension = space.dimension();
    let witness = if dimension > 1 { traceless_witness(&space) } else { None };
    Ok(PartyAnalysis {
        party,
        dimension,
        trivial_only: dimension == 1,
        witness,
        space,
    })
}

pub fn analyze_all(set: &StateSet) -> Result<Vec<PartyAnalysis>> {
    analyze_all_with_tol(set, DEFAULT_TOL)
}

pub fn analyze_all_with_tol(set: &StateSet, tol: f64) -> Result<Vec<PartyAnalysis>> {
    (0..set.parties())
        .map(|p| analyze_party_with_tol(set, p, tol))
        .collect()
}

fn traceless_witness(space: &HermitianBasis) -> Option<CMatrix> {
    let d = space.dim;
    space.elements.iter().find_map(|b| {
        let shifted = b - CMatrix::identity(d, d) * (trace(b) / d as f64);
        let norm = shifted.norm();
        (norm > 1e-6).then(|| shifted.unscale(norm))
    })
}

/// Two-outcome measurement `E± = (I ± W/2)/2`, with `W` the witness scaled to
/// spectral norm 1. `None` when the party is trivial-only.
pub fn synthesize_nontrivial(set: &StateSet, party: usize) -> Result<Option<Measurement>> {
    let analysis = analyze_party(set, party)?;
    let Some(witness) = analysis.witness else {
        return Ok(None);
    };
    let d = set.dims()[party];
    let w = witness.unscale(spectral_norm_hermitian(&witness)?);
    let id = CMatrix::identity(d, d);
    let plus = (&id + &w * crate::linalg::c(WITNESS_STRENGTH, 0.0)).unscale(2.0);
    let minus = (&id - &w * crate::linalg::c(WITNESS_STRENGTH, 0.0)).unscale(2.0);
    Measurement::from_povm(&[plus, minus]).map(Some)
}

/// Largest post-measurement overlap, over all outcomes of `m` on `party`,
/// among pairs of states that are orthogonal before the measurement.
///
/// The unnormalized post-measurement overlap of states `i`, `j` under outcome
/// `k` is `<a_i|E_k|a_j>` times their off-party overlap.
pub fn outcome_gram_defect(set: &StateSet, party: usize, m: &Measurement) -> Result<f64> {
    set.shape().check_party(party)?;
    let states = set.states();
    let gram = crate::states::gram_matrix(set);
    let mut worst: f64 = 0.0;
    for e in m.povm() {
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                if gram[(i, j)].norm() > DEFAULT_TOL {
                    continue;
                }
                let local = crate::linalg::sandwich(states[i].factor(party), &e, states[j].factor(party));
                worst = worst.max((local * off_party_overlap(&states[i], &states[j], party)).norm());
            }
        }
    }
    Ok(worst)
}
