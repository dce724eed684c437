//! Local measurements, triviality, and the surviving-outcome computation for
//! a nonorthogonal pair.
//!
//! For a pair `alpha`, `beta` with `<alpha|beta> != 0`, every measurement has
//! some outcome `i` whose POVM element `E_i` keeps all of
//! `<alpha|E_i|alpha>`, `<alpha|E_i|beta>` and `<beta|E_i|beta>` nonzero. The
//! diagnostic in [`diagnose_outcomes`] classifies each outcome by which of
//! those terms vanish and checks the linear relation every vanishing case
//! implies; summed over outcomes those relations would contradict
//! completeness, which is why a surviving outcome always exists.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, psd_inv_sqrt, psd_sqrt, sandwich, trace, CMatrix, CVector, C64};
use crate::wire;

/// Completeness residual accepted for a valid measurement.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// Relative cut below which a surviving-outcome term counts as zero.
pub const SURVIVAL_TOL: f64 = 1e-9;
const MAX_GENERATOR_RETRIES: usize = 8;
/// Rejection draws before a nonorthogonal pair is built explicitly.
const EXPLICIT_PAIR_AFTER: usize = 64;

/// A measurement given by its Kraus operators `M_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasurementWire", into = "MeasurementWire")]
pub struct Measurement {
    dim: usize,
    kraus: Vec<CMatrix>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementWire {
    dim: usize,
    kraus: Vec<wire::WireMatrix>,
}

impl TryFrom<MeasurementWire> for Measurement {
    type Error = Error;

    fn try_from(w: MeasurementWire) -> Result<Self> {
        let kraus = w
            .kraus
            .iter()
            .map(|m| wire::matrix_from_wire(m).ok_or_else(|| Error::InvalidMeasurement("ragged Kraus matrix".into())))
            .collect::<Result<Vec<_>>>()?;
        let m = Measurement::new(kraus)?;
        if m.dim != w.dim {
            return Err(Error::DimensionMismatch {
                expected: w.dim,
                found: m.dim,
            });
        }
        Ok(m)
    }
}

impl From<Measurement> for MeasurementWire {
    fn from(m: Measurement) -> Self {
        MeasurementWire {
            dim: m.dim,
            kraus: m.kraus.iter().map(wire::matrix_to_wire).collect(),
        }
    }
}

impl Measurement {
    /// Checks shapes only; completeness is reported by [`validate_measurement`].
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidMeasurement("no outcomes".into()))?;
        let dim = first.ncols();
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for k in &kraus {
            if k.ncols() != dim || k.nrows() != dim {
                return Err(Error::InvalidMeasurement(format!(
                    "Kraus operator is {}x{}, expected {dim}x{dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        Ok(Self { dim, kraus })
    }

    /// Kraus operators are the principal square roots of the given POVM
    /// elements.
    pub fn from_povm(elements: &[CMatrix]) -> Result<Self> {
        let kraus = elements.iter().map(psd_sqrt).collect::<Result<Vec<_>>>()?;
        Self::new(kraus)
    }

    /// Rank-one projective measurement onto the given vectors (normalized).
    pub fn projective(basis: &[CVector]) -> Result<Self> {
        let kraus = basis
            .iter()
            .map(|v| {
                let u = v.normalize();
                &u * u.adjoint()
            })
            .collect();
        Self::new(kraus)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn outcomes(&self) -> usize {
        self.kraus.len()
    }

    /// `E_i = M_i^dagger M_i`.
    pub fn povm(&self) -> Vec<CMatrix> {
        self.kraus.iter().map(|m| m.adjoint() * m).collect()
    }

    pub fn completeness_residual(&self) -> f64 {
        let total: CMatrix = self.povm().into_iter().sum();
        max_abs(&(total - CMatrix::identity(self.dim, self.dim)))
    }

    pub fn is_complete(&self) -> bool {
        self.completeness_residual() <= COMPLETENESS_TOL
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasurementReport {
    pub outcomes: usize,
    pub completeness_residual: f64,
    /// Whether each `M_i^dagger M_i` is PSD (min eigenvalue >= -1e-10).
    pub elements_psd: Vec<bool>,
    pub valid: bool,
}

pub fn validate_measurement(m: &Measurement) -> MeasurementReport {
    let elements_psd: Vec<bool> = m
        .povm()
        .iter()
        .map(|e| {
            linalg::hermitian_eigh(e)
                .map(|eig| eig.values.last().copied().unwrap_or(0.0) >= -linalg::PSD_CLAMP)
                .unwrap_or(false)
        })
        .collect();
    let completeness_residual = m.completeness_residual();
    MeasurementReport {
        outcomes: m.outcomes(),
        completeness_residual,
        valid: completeness_residual <= COMPLETENESS_TOL && elements_psd.iter().all(|&p| p),
        elements_psd,
    }
}

/// Every POVM element proportional to the identity within `tol` (max entry).
pub fn is_trivial(m: &Measurement, tol: f64) -> bool {
    let d = m.dim as f64;
    m.povm().iter().all(|e| {
        let scalar = trace(e) / d;
        let shifted = e - CMatrix::identity(m.dim, m.dim) * scalar;
        max_abs(&shifted) <= tol
    })
}

/// `beta = lambda alpha + delta alpha_perp` with `lambda = <alpha|beta>`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonorthogonalPair {
    pub alpha: CVector,
    pub beta: CVector,
    pub lambda: C64,
    pub delta: C64,
    /// Gram–Schmidt of `beta` against `alpha`, first nonzero coordinate
    /// real-positive. `None` in dimension 1.
    pub alpha_perp: Option<CVector>,
}

impl NonorthogonalPair {
    /// Both vectors are normalized; the pair must satisfy
    /// `|<alpha|beta>| > 1e-9`.
    pub fn new(alpha: &CVector, beta: &CVector) -> Result<Self> {
        let pair = Self::decompose(alpha, beta)?;
        if pair.lambda.norm() <= SURVIVAL_TOL {
            return Err(Error::OrthogonalPair(pair.lambda.norm()));
        }
        Ok(pair)
    }

    fn decompose(alpha: &CVector, beta: &CVector) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                found: beta.len(),
            });
        }
        let alpha = alpha.normalize();
        let beta = beta.normalize();
        let lambda = alpha.dotc(&beta);
        let residual = &beta - &alpha * lambda;
        let alpha_perp = if residual.norm() > 1e-12 {
            Some(residual.normalize())
        } else {
            // beta parallel to alpha: any completion of alpha works
            (0..alpha.len())
                .map(|k| {
                    let e = linalg::basis_vec(alpha.len(), k);
                    &e - &alpha * alpha.dotc(&e)
                })
                .find(|w| w.norm() > 1e-6)
                .map(|w| w.normalize())
        };
        let alpha_perp = alpha_perp.map(|mut v| {
            linalg::fix_phase(&mut v);
            v
        });
        let delta = alpha_perp.as_ref().map_or(c(0.0, 0.0), |p| p.dotc(&beta));
        Ok(Self {
            alpha,
            beta,
            lambda,
            delta,
            alpha_perp,
        })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }
}

/// `(<alpha|E|alpha>, <alpha|E|beta>, <beta|E|beta>)`.
pub fn pair_terms(e: &CMatrix, pair: &NonorthogonalPair) -> [C64; 3] {
    [
        sandwich(&pair.alpha, e, &pair.alpha),
        sandwich(&pair.alpha, e, &pair.beta),
        sandwich(&pair.beta, e, &pair.beta),
    ]
}

/// `tol * max_j (|<alpha|E_j|alpha>| + |<beta|E_j|beta>|)`.
fn survival_cut(povm: &[CMatrix], pair: &NonorthogonalPair) -> f64 {
    let scale = povm
        .iter()
        .map(|e| {
            let [aa, _, bb] = pair_terms(e, pair);
            aa.norm() + bb.norm()
        })
        .fold(0.0, f64::max);
    SURVIVAL_TOL * scale
}

fn check_pair_dim(m: &Measurement, pair: &NonorthogonalPair) -> Result<()> {
    if pair.dim() != m.dim {
        return Err(Error::DimensionMismatch {
            expected: m.dim,
            found: pair.dim(),
        });
    }
    Ok(())
}

/// First outcome under which the pair stays nonorthogonal, with the
/// normalized post-measurement pair `(M_i alpha, M_i beta)`.
pub fn surviving_outcome(m: &Measurement, pair: &NonorthogonalPair) -> Result<(usize, NonorthogonalPair)> {
    check_pair_dim(m, pair)?;
    if pair.lambda.norm() <= SURVIVAL_TOL {
        return Err(Error::OrthogonalPair(pair.lambda.norm()));
    }
    let povm = m.povm();
    let cut = survival_cut(&povm, pair);
    for (i, e) in povm.iter().enumerate() {
        if pair_terms(e, pair).iter().all(|t| t.norm() > cut) {
            let a = &m.kraus[i] * &pair.alpha;
            let b = &m.kraus[i] * &pair.beta;
            return Ok((i, NonorthogonalPair::decompose(&a, &b)?));
        }
    }
    Err(Error::NoSurvivingOutcome(format!(
        "{} outcomes, completeness residual {:e}",
        m.outcomes(),
        m.completeness_residual()
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeClass {
    AllNonzero,
    /// `<alpha|E|alpha> = 0`.
    ClassI,
    /// `<alpha|E|beta> = 0` with both diagonal terms nonzero.
    ClassIi,
    /// `<beta|E|beta> = 0`, i.e. `M beta = 0`.
    ClassIii,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeDiagnosis {
    pub outcome: usize,
    pub class: OutcomeClass,
    pub terms: [wire::Complex; 3],
    /// `<alpha|E|alpha>`.
    pub m11: wire::Complex,
    /// `<alpha|E|alpha_perp>`.
    pub m12: wire::Complex,
    /// `|lambda m11 + delta m12|`, which equals `|<alpha|E|beta>|`.
    pub relation_residual: f64,
    /// Whether the identity implied by the class holds within tolerance.
    pub identity_holds: bool,
}

/// Per-outcome classification together with the implied identities:
/// class (i) forces `m11 = m12 = 0`; classes (ii) and (iii) force
/// `lambda m11 + delta m12 = 0`.
pub fn diagnose_outcomes(m: &Measurement, pair: &NonorthogonalPair) -> Result<Vec<OutcomeDiagnosis>> {
    check_pair_dim(m, pair)?;
    let povm = m.povm();
    let cut = survival_cut(&povm, pair);
    let tol = cut.max(SURVIVAL_TOL);
    Ok(povm
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let terms = pair_terms(e, pair);
            let [aa, ab, bb] = terms.map(|t| t.norm() <= cut);
            let class = if aa {
                OutcomeClass::ClassI
            } else if bb {
                OutcomeClass::ClassIii
            } else if ab {
                OutcomeClass::ClassIi
            } else {
                OutcomeClass::AllNonzero
            };
            let (m11, m12) = bookkeeping_entries(e, pair);
            let relation_residual = (pair.lambda * m11 + pair.delta * m12).norm();
            let identity_holds = match class {
                OutcomeClass::AllNonzero => true,
                OutcomeClass::ClassI => m11.norm() <= tol && m12.norm() <= tol,
                OutcomeClass::ClassIi | OutcomeClass::ClassIii => relation_residual <= tol,
            };
            OutcomeDiagnosis {
                outcome: i,
                class,
                terms: terms.map(wire::Complex::from),
                m11: m11.into(),
                m12: m12.into(),
                relation_residual,
                identity_holds,
            }
        })
        .collect())
}

/// `(<alpha|E|alpha>, <alpha|E|alpha_perp>)`.
pub fn bookkeeping_entries(e: &CMatrix, pair: &NonorthogonalPair) -> (C64, C64) {
    let m11 = sandwich(&pair.alpha, e, &pair.alpha);
    let m12 = pair
        .alpha_perp
        .as_ref()
        .map_or(c(0.0, 0.0), |p| sandwich(&pair.alpha, e, p));
    (m11, m12)
}

/// `(sum_i <alpha|E_i|alpha>, sum_i <alpha|E_i|alpha_perp>)`; completeness
/// makes these `1` and `0`.
pub fn bookkeeping_sums(m: &Measurement, pair: &NonorthogonalPair) -> (C64, C64) {
    m.povm()
        .iter()
        .map(|e| bookkeeping_entries(e, pair))
        .fold((c(0.0, 0.0), c(0.0, 0.0)), |(s, t), (a, b)| (s + a, t + b))
}

/// Seeded stream for one generator call; distinct parameters give distinct
/// streams.
pub fn derived_rng(seed: u64, tag: &[u64]) -> ChaCha20Rng {
    // splitmix64 mixing of the seed and every tag word
    let mut state = seed ^ 0x9E37_79B9_7F4A_7C15;
    let mut mix = |x: u64| {
        state = state.wrapping_add(x).wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    let mut key = [0u8; 32];
    let mut word = mix(0);
    for &t in tag {
        word = mix(t ^ word);
    }
    for chunk in key.chunks_mut(8) {
        word = mix(word);
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha20Rng::from_seed(key)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Haar-distributed unit vector.
pub fn random_unit_vector(dim: usize, rng: &mut ChaCha20Rng) -> CVector {
    let v: CVector = gaussian_matrix(dim, 1, rng).column(0).into_owned();
    v.normalize()
}

/// `n`-outcome measurement on `C^d`: `M_i = A_i T^{-1/2}` with Gaussian `A_i`
/// and `T = sum_i A_i^dagger A_i`.
pub fn random_measurement(d: usize, n: usize, seed: u64) -> Result<Measurement> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if n == 0 {
        return Err(Error::InvalidMeasurement("no outcomes".into()));
    }
    for attempt in 0..MAX_GENERATOR_RETRIES {
        let mut rng = derived_rng(seed, &[d as u64, n as u64, attempt as u64]);
        let a: Vec<CMatrix> = (0..n).map(|_| gaussian_matrix(d, d, &mut rng)).collect();
        let t: CMatrix = a.iter().map(|x| x.adjoint() * x).sum();
        if let Some(inv) = psd_inv_sqrt(&t)? {
            return Measurement::new(a.iter().map(|x| x * &inv).collect());
        }
    }
    Err(Error::SingularGenerator(MAX_GENERATOR_RETRIES))
}

/// Random pair with `|<alpha|beta>| >= min_overlap`.
///
/// Independent Haar draws are kept when they already overlap enough. Otherwise
/// `beta = r e^{i phi} alpha + sqrt(1 - r^2) w`, with `r` uniform in
/// `[min_overlap, 1]`, a uniform phase, and `w` a random unit vector
/// orthogonal to `alpha`.
pub fn random_nonorthogonal_pair(d: usize, min_overlap: f64, seed: u64) -> Result<NonorthogonalPair> {
    use rand::Rng;
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    if !(min_overlap > 0.0 && min_overlap <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "minimum overlap {min_overlap} outside (0, 1]"
        )));
    }
    let mut rng = derived_rng(seed, &[d as u64, 0x7061_6972]);
    for _ in 0..EXPLICIT_PAIR_AFTER {
        let alpha = random_unit_vector(d, &mut rng);
        let beta = random_unit_vector(d, &mut rng);
        if alpha.dotc(&beta).norm() >= min_overlap {
            return NonorthogonalPair::new(&alpha, &beta);
        }
    }
    let alpha = random_unit_vector(d, &mut rng);
    let r: f64 = rng.random_range(min_overlap..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut beta = &alpha * (c(phi.cos(), phi.sin()) * r);
    if d > 1 && r < 1.0 {
        let v = random_unit_vector(d, &mut rng);
        let w = &v - &alpha * alpha.dotc(&v);
        if w.norm() > 1e-6 {
            beta += w.normalize() * c((1.0 - r * r).sqrt(), 0.0);
        }
    }
    NonorthogonalPair::new(&alpha, &beta)
}

/// Outcome of one surviving-outcome check.
#[derive(Clone, Debug, Serialize)]
pub struct SurvivalTrial {
    pub trial: usize,
    pub dim: usize,
    pub outcomes: usize,
    pub overlap: f64,
    pub surviving_outcome: Option<usize>,
    /// `|<alpha'|beta'>|` of the normalized post-measurement pair.
    pub post_overlap: Option<f64>,
    pub completeness_residual: f64,
    /// `|sum_i <alpha|E_i|alpha> - 1|`.
    pub m11_defect: f64,
    /// `|sum_i <alpha|E_i|alpha_perp>|`.
    pub m12_defect: f64,
    pub bookkeeping_holds: bool,
}

/// Runs the surviving-outcome check for one measurement and pair.
pub fn survival_check(trial: usize, m: &Measurement, pair: &NonorthogonalPair, tol: f64) -> Result<SurvivalTrial> {
    check_pair_dim(m, pair)?;
    let survivor = match surviving_outcome(m, pair) {
        Ok(found) => Some(found),
        Err(Error::NoSurvivingOutcome(_)) => None,
        Err(e) => return Err(e),
    };
    let (s11, s12) = bookkeeping_sums(m, pair);
    let m11_defect = (s11 - c(1.0, 0.0)).norm();
    let m12_defect = s12.norm();
    Ok(SurvivalTrial {
        trial,
        dim: m.dim(),
        outcomes: m.outcomes(),
        overlap: pair.lambda.norm(),
        surviving_outcome: survivor.as_ref().map(|(i, _)| *i),
        post_overlap: survivor.as_ref().map(|(_, p)| p.lambda.norm()),
        completeness_residual: m.completeness_residual(),
        m11_defect,
        m12_defect,
        bookkeeping_holds: m11_defect <= tol && m12_defect <= tol,
    })
}

/// Parameters of a seeded batch of random surviving-outcome checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurvivalConfig {
    pub trials: usize,
    pub seed: u64,
    pub min_dim: usize,
    pub max_dim: usize,
    pub min_outcomes: usize,
    pub max_outcomes: usize,
    pub min_overlap: f64,
}

impl Default for SurvivalConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            min_dim: 2,
            max_dim: 5,
            min_outcomes: 1,
            max_outcomes: 6,
            min_overlap: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SurvivalSummary {
    pub config: SurvivalConfig,
    pub survived: usize,
    pub bookkeeping_held: usize,
    pub max_m11_defect: f64,
    pub max_m12_defect: f64,
    /// Trials that found no surviving outcome or broke the bookkeeping.
    pub failures: Vec<SurvivalTrial>,
}

impl SurvivalSummary {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Trial `t` draws its dimension and outcome count uniformly from the
/// configured ranges using a stream derived from `(seed, t)`.
pub fn survival_suite(config: &SurvivalConfig, tol: f64) -> Result<SurvivalSummary> {
    use rand::Rng;
    if config.min_dim < 1 || config.min_dim > config.max_dim {
        return Err(Error::InvalidDimension(config.min_dim));
    }
    if config.min_outcomes < 1 || config.min_outcomes > config.max_outcomes {
        return Err(Error::InvalidMeasurement(format!(
            "outcome range {}..={}",
            config.min_outcomes, config.max_outcomes
        )));
    }
    let mut summary = SurvivalSummary {
        config: config.clone(),
        survived: 0,
        bookkeeping_held: 0,
        max_m11_defect: 0.0,
        max_m12_defect: 0.0,
        failures: Vec::new(),
    };
    for t in 0..config.trials {
        let mut rng = derived_rng(config.seed, &[t as u64, 0x0074_7269_616c]);
        let d = rng.random_range(config.min_dim..=config.max_dim);
        let n = rng.random_range(config.min_outcomes..=config.max_outcomes);
        let trial_seed: u64 = rng.random();
        let m = random_measurement(d, n, trial_seed)?;
        let pair = random_nonorthogonal_pair(d, config.min_overlap, trial_seed)?;
        let r = survival_check(t, &m, &pair, tol)?;
        summary.survived += usize::from(r.surviving_outcome.is_some());
        summary.bookkeeping_held += usize::from(r.bookkeeping_holds);
        summary.max_m11_defect = summary.max_m11_defect.max(r.m11_defect);
        summary.max_m12_defect = summary.max_m12_defect.max(r.m12_defect);
        if r.surviving_outcome.is_none() || !r.bookkeeping_holds {
            summary.failures.push(r);
        }
    }
    Ok(summary)
}
