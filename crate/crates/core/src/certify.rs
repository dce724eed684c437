//! Checkable LOCC-indistinguishability certificates.
//!
//! A certificate is a small derivation tree. Leaves are numeric facts about a
//! concrete state set (mutual orthogonality, trivial-only parties, phase
//! classes of appended parties, subset containment), each of which
//! [`Certifier::verify`] recomputes from scratch. Internal nodes name one of
//! four inference rules:
//!
//! * `axiom-trivial-only`: no party admits a nontrivial
//!   orthogonality-preserving measurement. Taken as established, not
//!   re-derived.
//! * `theorem-1` / `theorem-2`: the first `m` parties are trivial-only and
//!   each of the last `n` parties (one for `theorem-1`, several for
//!   `theorem-2`) carries at most two pairwise nonorthogonal local factors up
//!   to phase. The premise is an axiom certificate for the first-`m`-party
//!   projection of the set.
//! * `superset`: the set contains an already certified subset.
//!
//! Sets the rules do not cover get a [`Refusal`], never a guess.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::analyze_party_with_tol;
use crate::error::{Error, Result};
use crate::states::{local_phase_classes, orthogonality_report, StateSet, DEFAULT_TOL};
use crate::wire;

/// Optional guidance from whoever built the set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyHints {
    /// Number of leading trivial-only parties; pins the theorem split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    /// Labels of a subset to certify and lift with the superset rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub superset_of: Option<Vec<String>>,
}

impl CertifyHints {
    pub fn split(m: usize) -> Self {
        Self {
            split: Some(m),
            superset_of: None,
        }
    }

    pub fn superset_of(labels: Vec<String>) -> Self {
        Self {
            split: None,
            superset_of: Some(labels),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "axiom-trivial-only")]
    AxiomTrivialOnly,
    #[serde(rename = "theorem-1")]
    Theorem1,
    #[serde(rename = "theorem-2")]
    Theorem2,
    #[serde(rename = "superset")]
    Superset,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Fact {
    MutuallyOrthogonal {
        max_offdiagonal: f64,
    },
    TrivialOnly {
        party: usize,
        dimension: usize,
    },
    /// `classes` list member labels; `representative_overlaps` holds
    /// `|<r_a|r_b>|` for `a < b`.
    PhaseClasses {
        party: usize,
        classes: Vec<Vec<String>>,
        representative_overlaps: Vec<f64>,
    },
    Containment {
        labels: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Premise {
    Fact(Fact),
    Certificate(Box<Certificate>),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Certificate {
    /// [`content_hash`] of the subject set.
    pub subject: String,
    pub rule: Rule,
    #[serde(default)]
    pub parameters: RuleParameters,
    pub premises: Vec<Premise>,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    fn facts(&self) -> impl Iterator<Item = &Fact> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Fact(f) => Some(f),
            Premise::Certificate(_) => None,
        })
    }

    fn sub_certificates(&self) -> impl Iterator<Item = &Certificate> {
        self.premises.iter().filter_map(|p| match p {
            Premise::Certificate(c) => Some(c.as_ref()),
            Premise::Fact(_) => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefusalCode {
    NotOrthogonal,
    NoApplicableRule,
    InvalidWitness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartySummary {
    pub party: usize,
    pub dimension: usize,
    pub trivial_only: bool,
    pub phase_classes: usize,
    /// `<r_a|r_b>` for `a < b` over class representatives.
    pub representative_overlaps: Vec<wire::Complex>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Refusal {
    pub code: RefusalCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parties: Vec<PartySummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertifyOutcome {
    Certificate(Certificate),
    Refusal(Refusal),
}

impl CertifyOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CertifyOutcome::Certificate(c) => Some(c),
            CertifyOutcome::Refusal(_) => None,
        }
    }

    pub fn refusal(&self) -> Option<&Refusal> {
        match self {
            CertifyOutcome::Refusal(r) => Some(r),
            CertifyOutcome::Certificate(_) => None,
        }
    }
}

fn render(x: f64) -> String {
    let x = if x.abs() < 1e-15 { 0.0 } else { x };
    format!("{x:.14e}")
}

/// `sha256:<hex>` of a canonical rendering: dims, then states sorted by
/// label, every amplitude to 15 significant digits.
pub fn content_hash(set: &StateSet) -> String {
    let mut states: Vec<_> = set.states().iter().collect();
    states.sort_by(|a, b| a.label().cmp(b.label()));
    let mut text = String::from("dims=");
    text.push_str(&set.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","));
    for s in states {
        text.push_str(";label=");
        text.push_str(&serde_json::to_string(s.label()).expect("string"));
        for f in s.factors() {
            text.push('|');
            for z in f.iter() {
                text.push_str(&render(z.re));
                text.push(',');
                text.push_str(&render(z.im));
                text.push(',');
            }
        }
    }
    format!("sha256:{}", hex::encode(Sha256::digest(text.as_bytes())))
}

/// Phase classes of `party` as sorted label lists plus the pairwise
/// representative overlaps.
fn phase_class_fact(set: &StateSet, party: usize, tol: f64) -> Result<(Fact, Vec<wire::Complex>)> {
    let classes = local_phase_classes(set, party, tol)?;
    let mut labels: Vec<Vec<String>> = classes
        .iter()
        .map(|c| {
            let mut l: Vec<String> = c.members.iter().map(|&i| set.states()[i].label().to_string()).collect();
            l.sort();
            l
        })
        .collect();
    // keep representatives aligned with the sorted class order
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
    labels = order.iter().map(|&i| labels[i].clone()).collect();
    let reps: Vec<_> = order.iter().map(|&i| &classes[i].representative).collect();
    let mut overlaps = Vec::new();
    let mut complex = Vec::new();
    for a in 0..reps.len() {
        for b in a + 1..reps.len() {
            let z = reps[a].dotc(reps[b]);
            overlaps.push(z.norm());
            complex.push(z.into());
        }
    }
    Ok((
        Fact::PhaseClasses {
            party,
            classes: labels,
            representative_overlaps: overlaps,
        },
        complex,
    ))
}

fn phase_fact_admissible(fact: &Fact, tol: f64) -> bool {
    match fact {
        Fact::PhaseClasses {
            classes,
            representative_overlaps,
            ..
        } => classes.len() <= 2 && representative_overlaps.iter().all(|&o| o > tol),
        _ => false,
    }
}

/// Issues and checks certificates at a fixed verdict tolerance.
#[derive(Clone, Copy, Debug)]
pub struct Certifier {
    pub tol: f64,
}

impl Default for Certifier {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL }
    }
}

impl Certifier {
    pub fn new(tol: f64) -> Self {
        Self { tol }
    }

    fn orthogonality_fact(&self, set: &StateSet) -> Option<Fact> {
        let report = orthogonality_report(set, self.tol);
        report.orthogonal.then(|| Fact::MutuallyOrthogonal {
            max_offdiagonal: report.worst.map_or(0.0, |w| w.magnitude),
        })
    }

    fn axiom(&self, set: &StateSet) -> Result<Option<Certificate>> {
        let Some(orth) = self.orthogonality_fact(set) else {
            return Ok(None);
        };
        let mut premises = vec![Premise::Fact(orth)];
        for p in 0..set.parties() {
            let a = analyze_party_with_tol(set, p, self.tol)?;
            if !a.trivial_only {
                return Ok(None);
            }
            premises.push(Premise::Fact(Fact::TrivialOnly {
                party: p,
                dimension: a.dimension,
            }));
        }
        Ok(Some(Certificate {
            subject: content_hash(set),
            rule: Rule::AxiomTrivialOnly,
            parameters: RuleParameters::default(),
            premises,
        }))
    }

    fn theorem(&self, set: &StateSet, m: usize) -> Result<Option<Certificate>> {
        let parties = set.parties();
        if m == 0 || m >= parties {
            return Ok(None);
        }
        let Some(orth) = self.orthogonality_fact(set) else {
            return Ok(None);
        };
        let mut premises = vec![Premise::Fact(orth)];
        for p in m..parties {
            let (fact, _) = phase_class_fact(set, p, self.tol)?;
            if !phase_fact_admissible(&fact, self.tol) {
                return Ok(None);
            }
            premises.push(Premise::Fact(fact));
        }
        for p in 0..m {
            let a = analyze_party_with_tol(set, p, self.tol)?;
            if !a.trivial_only {
                return Ok(None);
            }
            premises.push(Premise::Fact(Fact::TrivialOnly {
                party: p,
                dimension: a.dimension,
            }));
        }
        let base = set.leading_parties(m)?;
        let Some(base_cert) = self.axiom(&base)? else {
            return Ok(None);
        };
        premises.push(Premise::Certificate(Box::new(base_cert)));
        Ok(Some(Certificate {
            subject: content_hash(set),
            rule: if parties - m == 1 {
                Rule::Theorem1
            } else {
                Rule::Theorem2
            },
            parameters: RuleParameters {
                split: Some(m),
                subset: None,
            },
            premises,
        }))
    }

    fn superset(&self, set: &StateSet, labels: &[String]) -> Result<std::result::Result<Certificate, Refusal>> {
        let invalid = |message: String| {
            Ok(Err(Refusal {
                code: RefusalCode::InvalidWitness,
                message,
                parties: vec![],
            }))
        };
        let subset = match set.subset(labels) {
            Ok(s) => s,
            Err(e) => return invalid(format!("superset witness: {e}")),
        };
        let Some(orth) = self.orthogonality_fact(set) else {
            return invalid("superset witness: set is not mutually orthogonal".into());
        };
        let sub_cert = match self.certify(&subset, None)? {
            CertifyOutcome::Certificate(c) => c,
            CertifyOutcome::Refusal(r) => return invalid(format!("superset witness refused: {}", r.message)),
        };
        Ok(Ok(Certificate {
            subject: content_hash(set),
            rule: Rule::Superset,
            parameters: RuleParameters {
                split: None,
                subset: Some(labels.to_vec()),
            },
            premises: vec![
                Premise::Fact(orth),
                Premise::Fact(Fact::Containment {
                    labels: labels.to_vec(),
                }),
                Premise::Certificate(Box::new(sub_cert)),
            ],
        }))
    }

    fn summaries(&self, set: &StateSet) -> Result<Vec<PartySummary>> {
        (0..set.parties())
            .map(|p| {
                let a = analyze_party_with_tol(set, p, self.tol)?;
                let (fact, overlaps) = phase_class_fact(set, p, self.tol)?;
                let Fact::PhaseClasses { classes, .. } = fact else {
                    unreachable!()
                };
                Ok(PartySummary {
                    party: p,
                    dimension: a.dimension,
                    trivial_only: a.trivial_only,
                    phase_classes: classes.len(),
                    representative_overlaps: overlaps,
                })
            })
            .collect()
    }

    /// Tries the axiom, then theorem splits (largest appended block first, or
    /// only the hinted split), then the superset rule when a witness subset
    /// is hinted.
    pub fn certify(&self, set: &StateSet, hints: Option<&CertifyHints>) -> Result<CertifyOutcome> {
        let report = orthogonality_report(set, self.tol);
        if !report.orthogonal {
            let w = report.worst.expect("non-orthogonal set has a worst pair");
            return Ok(CertifyOutcome::Refusal(Refusal {
                code: RefusalCode::NotOrthogonal,
                message: format!("|<{}|{}>| = {:e}", w.first, w.second, w.magnitude),
                parties: vec![],
            }));
        }
        if let Some(c) = self.axiom(set)? {
            return Ok(CertifyOutcome::Certificate(c));
        }
        let splits: Vec<usize> = match hints.and_then(|h| h.split) {
            Some(m) => vec![m],
            None => (1..set.parties()).collect(),
        };
        for &m in &splits {
            if let Some(c) = self.theorem(set, m)? {
                return Ok(CertifyOutcome::Certificate(c));
            }
        }
        if let Some(labels) = hints.and_then(|h| h.superset_of.as_ref()) {
            return Ok(match self.superset(set, labels)? {
                Ok(c) => CertifyOutcome::Certificate(c),
                Err(r) => CertifyOutcome::Refusal(r),
            });
        }
        Ok(CertifyOutcome::Refusal(Refusal {
            code: RefusalCode::NoApplicableRule,
            message: "no party split has trivial-only leading parties and at most two pairwise nonorthogonal \
                      local factors per appended party"
                .into(),
            parties: self.summaries(set)?,
        }))
    }

    /// `Err(HashMismatch)` when `cert` is not about `set`; otherwise whether
    /// every fact and sub-certificate checks out.
    pub fn verify(&self, cert: &Certificate, set: &StateSet) -> Result<bool> {
        let found = content_hash(set);
        if cert.subject != found {
            return Err(Error::HashMismatch {
                expected: cert.subject.clone(),
                found,
            });
        }
        self.verify_bound(cert, set)
    }

    fn verify_nested(&self, cert: &Certificate, set: &StateSet) -> Result<bool> {
        if cert.subject != content_hash(set) {
            return Ok(false);
        }
        self.verify_bound(cert, set)
    }

    fn check_fact(&self, fact: &Fact, set: &StateSet) -> Result<bool> {
        Ok(match fact {
            Fact::MutuallyOrthogonal { max_offdiagonal } => {
                let report = orthogonality_report(set, self.tol);
                let actual = report.worst.map_or(0.0, |w| w.magnitude);
                report.orthogonal && *max_offdiagonal <= self.tol && (actual - max_offdiagonal).abs() <= self.tol
            }
            Fact::TrivialOnly { party, dimension } => {
                if *party >= set.parties() {
                    return Ok(false);
                }
                let a = analyze_party_with_tol(set, *party, self.tol)?;
                a.trivial_only && a.dimension == *dimension
            }
            Fact::PhaseClasses {
                party,
                classes,
                representative_overlaps,
            } => {
                if *party >= set.parties() {
                    return Ok(false);
                }
                let (actual, _) = phase_class_fact(set, *party, self.tol)?;
                let Fact::PhaseClasses {
                    classes: actual_classes,
                    representative_overlaps: actual_overlaps,
                    ..
                } = &actual
                else {
                    unreachable!()
                };
                actual_classes == classes
                    && actual_overlaps.len() == representative_overlaps.len()
                    && actual_overlaps
                        .iter()
                        .zip(representative_overlaps)
                        .all(|(a, r)| (a - r).abs() <= self.tol)
                    && phase_fact_admissible(&actual, self.tol)
            }
            Fact::Containment { labels } => labels.iter().all(|l| set.get(l).is_some()),
        })
    }

    fn verify_bound(&self, cert: &Certificate, set: &StateSet) -> Result<bool> {
        for fact in cert.facts() {
            if !self.check_fact(fact, set)? {
                return Ok(false);
            }
        }
        let facts: Vec<&Fact> = cert.facts().collect();
        let subs: Vec<&Certificate> = cert.sub_certificates().collect();
        let orthogonality_first = matches!(facts.first(), Some(Fact::MutuallyOrthogonal { .. }))
            && facts
                .iter()
                .filter(|f| matches!(f, Fact::MutuallyOrthogonal { .. }))
                .count()
                == 1;
        if !orthogonality_first {
            return Ok(false);
        }
        let parties = set.parties();
        let trivial_parties = |facts: &[&Fact]| -> Vec<usize> {
            let mut v: Vec<usize> = facts
                .iter()
                .filter_map(|f| match f {
                    Fact::TrivialOnly { party, .. } => Some(*party),
                    _ => None,
                })
                .collect();
            v.sort();
            v
        };
        let phase_parties = |facts: &[&Fact]| -> Vec<usize> {
            let mut v: Vec<usize> = facts
                .iter()
                .filter_map(|f| match f {
                    Fact::PhaseClasses { party, .. } => Some(*party),
                    _ => None,
                })
                .collect();
            v.sort();
            v
        };
        let containment: Vec<&Vec<String>> = facts
            .iter()
            .filter_map(|f| match f {
                Fact::Containment { labels } => Some(labels),
                _ => None,
            })
            .collect();

        match cert.rule {
            Rule::AxiomTrivialOnly => Ok(cert.parameters == RuleParameters::default()
                && subs.is_empty()
                && facts.len() == parties + 1
                && trivial_parties(&facts) == (0..parties).collect::<Vec<_>>()),
            Rule::Theorem1 | Rule::Theorem2 => {
                let Some(m) = cert.parameters.split else {
                    return Ok(false);
                };
                if cert.parameters.subset.is_some() || m == 0 || m >= parties {
                    return Ok(false);
                }
                let n = parties - m;
                let rule_ok = match cert.rule {
                    Rule::Theorem1 => n == 1,
                    _ => n >= 2,
                };
                if !rule_ok
                    || facts.len() != parties + 1
                    || !containment.is_empty()
                    || trivial_parties(&facts) != (0..m).collect::<Vec<_>>()
                    || phase_parties(&facts) != (m..parties).collect::<Vec<_>>()
                {
                    return Ok(false);
                }
                let [base_cert] = subs.as_slice() else {
                    return Ok(false);
                };
                if base_cert.rule != Rule::AxiomTrivialOnly {
                    return Ok(false);
                }
                let base = set.leading_parties(m)?;
                self.verify_nested(base_cert, &base)
            }
            Rule::Superset => {
                let Some(labels) = cert.parameters.subset.as_ref() else {
                    return Ok(false);
                };
                if cert.parameters.split.is_some() || facts.len() != 2 || containment != vec![labels] {
                    return Ok(false);
                }
                let [sub_cert] = subs.as_slice() else {
                    return Ok(false);
                };
                let subset = match set.subset(labels) {
                    Ok(s) => s,
                    Err(_) => return Ok(false),
                };
                self.verify_nested(sub_cert, &subset)
            }
        }
    }
}

pub fn certify(set: &StateSet, hints: Option<&CertifyHints>) -> Result<CertifyOutcome> {
    Certifier::default().certify(set, hints)
}

pub fn verify_certificate(cert: &Certificate, set: &StateSet) -> Result<bool> {
    Certifier::default().verify(cert, set)
}
