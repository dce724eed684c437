//! Finite-round LOCC protocol trees and their exact simulation.
//!
//! Every node measures one party locally, so a product input stays a product
//! of per-party factors along every branch; the simulator never forms a
//! global state vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::measure::{validate_measurement, Measurement};
use crate::states::{StateSet, DEFAULT_TOL};

/// A state is still in play on a branch when its weight exceeds this.
pub const SURVIVOR_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProtocolNode {
    Measure {
        party: usize,
        measurement: Measurement,
        children: Vec<ProtocolNode>,
    },
    Leaf {
        #[serde(rename = "leaf")]
        guess: String,
    },
}

impl ProtocolNode {
    pub fn leaf(guess: impl Into<String>) -> Self {
        ProtocolNode::Leaf { guess: guess.into() }
    }

    pub fn measure(party: usize, measurement: Measurement, children: Vec<ProtocolNode>) -> Self {
        ProtocolNode::Measure {
            party,
            measurement,
            children,
        }
    }

    /// Measurement rounds on the longest branch.
    pub fn depth(&self) -> usize {
        match self {
            ProtocolNode::Leaf { .. } => 0,
            ProtocolNode::Measure { children, .. } => 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Checks the tree against the set: party indices, local dimensions, child
/// counts, completeness of every measurement, and leaf labels.
pub fn validate_tree(set: &StateSet, node: &ProtocolNode) -> Result<()> {
    match node {
        ProtocolNode::Leaf { guess } => {
            if set.get(guess).is_none() {
                return Err(Error::MalformedProtocol(format!(
                    "leaf guesses unknown label `{guess}`"
                )));
            }
            Ok(())
        }
        ProtocolNode::Measure {
            party,
            measurement,
            children,
        } => {
            set.shape().check_party(*party)?;
            let d = set.dims()[*party];
            if measurement.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: measurement.dim(),
                });
            }
            if children.len() != measurement.outcomes() {
                return Err(Error::MalformedProtocol(format!(
                    "{} children for {} outcomes",
                    children.len(),
                    measurement.outcomes()
                )));
            }
            let report = validate_measurement(measurement);
            if !report.valid {
                return Err(Error::InvalidMeasurement(format!(
                    "completeness residual {:e}",
                    report.completeness_residual
                )));
            }
            children.iter().try_for_each(|c| validate_tree(set, c))
        }
    }
}

/// One state's progress down a branch: normalized factors plus the
/// probability of the outcomes seen so far.
#[derive(Clone, Debug)]
pub struct BranchState {
    pub factors: Vec<CVector>,
    pub weight: f64,
}

impl BranchState {
    /// Outcome `kraus` on `party`; `None` when the outcome cannot occur.
    fn apply(&self, party: usize, kraus: &CMatrix) -> Option<BranchState> {
        let updated = kraus * &self.factors[party];
        let norm_sqr = updated.norm_squared();
        if norm_sqr == 0.0 {
            return None;
        }
        let mut factors = self.factors.clone();
        factors[party] = updated.unscale(norm_sqr.sqrt());
        Some(BranchState {
            factors,
            weight: self.weight * norm_sqr,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LeafHit {
    /// Outcome indices from the root.
    pub path: Vec<usize>,
    pub guess: String,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StateDistribution {
    pub label: String,
    pub leaves: Vec<LeafHit>,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeafDistribution {
    pub states: Vec<StateDistribution>,
}

fn walk(node: &ProtocolNode, branch: BranchState, path: &mut Vec<usize>, hits: &mut Vec<LeafHit>) {
    match node {
        ProtocolNode::Leaf { guess } => hits.push(LeafHit {
            path: path.clone(),
            guess: guess.clone(),
            probability: branch.weight,
        }),
        ProtocolNode::Measure {
            party,
            measurement,
            children,
        } => {
            for (i, (kraus, child)) in measurement.kraus().iter().zip(children).enumerate() {
                if let Some(next) = branch.apply(*party, kraus) {
                    path.push(i);
                    walk(child, next, path, hits);
                    path.pop();
                }
            }
        }
    }
}

/// Probability that each input state ends at each reachable leaf.
pub fn simulate(set: &StateSet, root: &ProtocolNode) -> Result<LeafDistribution> {
    validate_tree(set, root)?;
    let states = set
        .states()
        .iter()
        .map(|s| {
            let mut hits = Vec::new();
            let start = BranchState {
                factors: s.factors().to_vec(),
                weight: 1.0,
            };
            walk(root, start, &mut Vec::new(), &mut hits);
            StateDistribution {
                label: s.label().to_string(),
                total: hits.iter().map(|h| h.probability).sum(),
                leaves: hits,
            }
        })
        .collect();
    Ok(LeafDistribution { states })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerfectionReport {
    pub perfect: bool,
    /// `max_s (1 - P(guess = s | s))`.
    pub worst_case_error: f64,
    pub worst_state: Option<String>,
}

/// Perfect when every state is guessed correctly with probability at least
/// `1 - tol`.
pub fn is_perfect(dist: &LeafDistribution, tol: f64) -> PerfectionReport {
    let mut worst_case_error = 0.0;
    let mut worst_state = None;
    for s in &dist.states {
        let correct: f64 = s
            .leaves
            .iter()
            .filter(|h| h.guess == s.label)
            .map(|h| h.probability)
            .sum();
        let error = (1.0 - correct).max(0.0);
        if worst_state.is_none() || error > worst_case_error {
            worst_case_error = error;
            worst_state = Some(s.label.clone());
        }
    }
    PerfectionReport {
        perfect: worst_case_error <= tol,
        worst_case_error,
        worst_state,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditViolation {
    /// Outcome indices leading to the offending node.
    pub path: Vec<usize>,
    pub party: usize,
    pub outcome: usize,
    pub first: String,
    pub second: String,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub nodes_checked: usize,
    pub violations: usize,
    pub first_violation: Option<AuditViolation>,
}

fn product_overlap(a: &[CVector], b: &[CVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.dotc(v))
        .product::<crate::linalg::C64>()
        .norm()
}

fn audit_node(
    node: &ProtocolNode,
    survivors: Vec<(usize, BranchState)>,
    labels: &[&str],
    path: &mut Vec<usize>,
    tol: f64,
    report: &mut AuditReport,
) {
    let ProtocolNode::Measure {
        party,
        measurement,
        children,
    } = node
    else {
        return;
    };
    report.nodes_checked += 1;
    for (outcome, (kraus, child)) in measurement.kraus().iter().zip(children).enumerate() {
        let next: Vec<(usize, BranchState)> = survivors
            .iter()
            .filter_map(|(i, b)| b.apply(*party, kraus).map(|n| (*i, n)))
            .filter(|(_, b)| b.weight > SURVIVOR_THRESHOLD)
            .collect();
        for a in 0..next.len() {
            for b in a + 1..next.len() {
                let magnitude = product_overlap(&next[a].1.factors, &next[b].1.factors);
                if magnitude > tol {
                    report.violations += 1;
                    if report.first_violation.is_none() {
                        report.first_violation = Some(AuditViolation {
                            path: path.clone(),
                            party: *party,
                            outcome,
                            first: labels[next[a].0].to_string(),
                            second: labels[next[b].0].to_string(),
                            magnitude,
                        });
                    }
                }
            }
        }
        path.push(outcome);
        audit_node(child, next, labels, path, tol, report);
        path.pop();
    }
}

/// At every node and outcome, whether the surviving post-measurement states
/// are still mutually orthogonal (normalized overlap at most `tol`).
pub fn orthogonality_audit(set: &StateSet, root: &ProtocolNode, tol: f64) -> Result<AuditReport> {
    validate_tree(set, root)?;
    let labels: Vec<&str> = set.labels().collect();
    let survivors = set
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (
                i,
                BranchState {
                    factors: s.factors().to_vec(),
                    weight: 1.0,
                },
            )
        })
        .collect();
    let mut report = AuditReport {
        nodes_checked: 0,
        violations: 0,
        first_violation: None,
    };
    audit_node(root, survivors, &labels, &mut Vec::new(), tol, &mut report);
    Ok(report)
}

/// The two-outcome POVM of the three-value example on the fourth party:
/// `E1 = [[1/2, 1/(2 sqrt3)], [1/(2 sqrt3), 1/2]]`, `E2 = I - E1`.
pub fn example2_povm() -> [CMatrix; 2] {
    let off = 1.0 / (2.0 * 3f64.sqrt());
    let e1 = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(off, 0.0), c(off, 0.0), c(0.5, 0.0)]);
    let e2 = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(-off, 0.0), c(-off, 0.0), c(0.5, 0.0)]);
    [e1, e2]
}

fn split(party: usize, basis: [CVector; 2], children: [ProtocolNode; 2]) -> ProtocolNode {
    let m = Measurement::projective(&basis).expect("two-dimensional projective measurement");
    ProtocolNode::measure(party, m, children.into())
}

/// Party `party` tells `|+>` from `|->`.
fn sign_split(party: usize, on_plus: &str, on_minus: &str) -> ProtocolNode {
    split(
        party,
        [crate::fixtures::plus(), crate::fixtures::minus()],
        [ProtocolNode::leaf(on_plus), ProtocolNode::leaf(on_minus)],
    )
}

/// Party `party` tells `|0>` from `|1>`.
fn bit_split(party: usize, on_zero: ProtocolNode, on_one: ProtocolNode) -> ProtocolNode {
    split(
        party,
        [crate::fixtures::ket0(), crate::fixtures::ket1()],
        [on_zero, on_one],
    )
}

/// Perfect four-round protocol for the three-value example set (parties
/// indexed from 0).
///
/// Round 1: party 3 measures `{E1, E2}` (principal square roots as Kraus
/// operators). Round 2: party 3 measures in the orthogonal basis
/// `{M1|alpha>, M1|gamma>}` after outcome 0, `{M2|alpha>, M2|beta>}` after
/// outcome 1; each outcome rules out one pair of states. Rounds 3 and 4: the
/// first three parties separate the four survivors with computational-basis
/// and sign-basis measurements.
pub fn example2_protocol() -> ProtocolNode {
    let [alpha, beta, gamma] = crate::fixtures::example2_factors();
    let m1 = Measurement::from_povm(&example2_povm()).expect("E1, E2 are PSD");
    let (k1, k2) = (&m1.kraus()[0], &m1.kraus()[1]);

    // survivors {psi1, psi2, psi3, psi4}: party 1 carries |1>,|1>,|0>,|0>
    let first_four = || bit_split(1, sign_split(0, "psi3", "psi4"), sign_split(2, "psi1", "psi2"));
    // survivors {psi3, psi4, psi5, psi6}: party 2 carries |1>,|1>,|0>,|0>
    let last_four = || bit_split(2, sign_split(1, "psi5", "psi6"), sign_split(0, "psi3", "psi4"));
    // survivors {psi1, psi2, psi5, psi6}: party 0 carries |0>,|0>,|1>,|1>
    let outer_four = || bit_split(0, sign_split(2, "psi1", "psi2"), sign_split(1, "psi5", "psi6"));

    let after_1 = split(3, [k1 * &alpha, k1 * &gamma], [first_four(), last_four()]);
    let after_2 = split(3, [k2 * &alpha, k2 * &beta], [outer_four(), last_four()]);
    ProtocolNode::measure(3, m1, vec![after_1, after_2])
}

/// Survivors (weight above `SURVIVOR_THRESHOLD`) after following `path`.
pub fn survivors_along(set: &StateSet, root: &ProtocolNode, path: &[usize]) -> Result<Vec<String>> {
    validate_tree(set, root)?;
    let mut branches: Vec<(usize, BranchState)> = set
        .states()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            (
                i,
                BranchState {
                    factors: s.factors().to_vec(),
                    weight: 1.0,
                },
            )
        })
        .collect();
    let mut node = root;
    for &outcome in path {
        let ProtocolNode::Measure {
            party,
            measurement,
            children,
        } = node
        else {
            return Err(Error::MalformedProtocol("path runs past a leaf".into()));
        };
        let kraus = measurement
            .kraus()
            .get(outcome)
            .ok_or_else(|| Error::MalformedProtocol(format!("no outcome {outcome}")))?;
        branches = branches
            .into_iter()
            .filter_map(|(i, b)| b.apply(*party, kraus).map(|n| (i, n)))
            .filter(|(_, b)| b.weight > SURVIVOR_THRESHOLD)
            .collect();
        node = &children[outcome];
    }
    Ok(branches
        .into_iter()
        .map(|(i, _)| set.states()[i].label().to_string())
        .collect())
}

/// `is_perfect` at the default tolerance.
pub fn is_perfect_default(dist: &LeafDistribution) -> PerfectionReport {
    is_perfect(dist, DEFAULT_TOL)
}
