//! Built-in state sets.
//!
//! The six-state three-qubit set every construction starts from:
//!
//! ```text
//! psi1 = |0>|1>|0+1>    psi2 = |0>|1>|0-1>
//! psi3 = |0+1>|0>|1>    psi4 = |0-1>|0>|1>
//! psi5 = |1>|0+1>|0>    psi6 = |1>|0-1>|0>
//! ```
//!
//! with `|0±1>` normalized by `1/sqrt2`.

use crate::error::{Error, Result};
use crate::linalg::{basis_vec, real_vec, CVector};
use crate::states::{ProductState, StateSet};

pub const NAMES: &[&str] = &["eq1-six", "example1", "example2", "eq1-completion"];

pub fn ket0() -> CVector {
    basis_vec(2, 0)
}

pub fn ket1() -> CVector {
    basis_vec(2, 1)
}

pub fn plus() -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    real_vec(&[s, s])
}

pub fn minus() -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    real_vec(&[s, -s])
}

fn state(label: &str, factors: Vec<CVector>) -> ProductState {
    ProductState::new(label, factors).expect("fixture factors are unit vectors")
}

pub fn eq1_six() -> StateSet {
    let states = vec![
        state("psi1", vec![ket0(), ket1(), plus()]),
        state("psi2", vec![ket0(), ket1(), minus()]),
        state("psi3", vec![plus(), ket0(), ket1()]),
        state("psi4", vec![minus(), ket0(), ket1()]),
        state("psi5", vec![ket1(), plus(), ket0()]),
        state("psi6", vec![ket1(), minus(), ket0()]),
    ];
    StateSet::from_dims(vec![2, 2, 2], states).expect("valid fixture")
}

/// `{|000>, |111>}`: completes `eq1-six` to an orthogonal product basis.
pub fn eq1_completion() -> StateSet {
    let states = vec![
        state("psi7", vec![ket0(), ket0(), ket0()]),
        state("psi8", vec![ket1(), ket1(), ket1()]),
    ];
    StateSet::from_dims(vec![2, 2, 2], states).expect("valid fixture")
}

fn append_fourth(factors: [&CVector; 6]) -> Result<StateSet> {
    let base = eq1_six();
    let states = base
        .states()
        .iter()
        .zip(factors)
        .map(|(s, f)| s.appended(f.clone()))
        .collect::<Result<Vec<_>>>()?;
    StateSet::from_dims(vec![2, 2, 2, 2], states)
}

/// `psi1..psi3` tagged with `alpha`, `psi4..psi6` with `beta` on a fourth
/// qubit. The pair must be nonorthogonal.
pub fn example1(alpha: &CVector, beta: &CVector) -> Result<StateSet> {
    if alpha.len() != 2 || beta.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: if alpha.len() != 2 { alpha.len() } else { beta.len() },
        });
    }
    let a = alpha.normalize();
    let b = beta.normalize();
    let lambda = a.dotc(&b).norm();
    if lambda <= 1e-9 {
        return Err(Error::OrthogonalPair(lambda));
    }
    append_fourth([&a, &a, &a, &b, &b, &b])
}

/// `example1` with `alpha = |0>`, `beta = |+>`.
pub fn example1_default() -> StateSet {
    example1(&ket0(), &plus()).expect("valid fixture")
}

/// Fourth-party factors of the three-value append: `|0>`,
/// `(|0> + sqrt3|1>)/2`, `(|0> - sqrt3|1>)/2`.
pub fn example2_factors() -> [CVector; 3] {
    let h = 3f64.sqrt() / 2.0;
    [ket0(), real_vec(&[0.5, h]), real_vec(&[0.5, -h])]
}

pub fn example2() -> StateSet {
    let [a, b, g] = example2_factors();
    append_fourth([&a, &a, &b, &b, &g, &g]).expect("valid fixture")
}

pub fn builtin_fixture(name: &str) -> Result<StateSet> {
    match name {
        "eq1-six" => Ok(eq1_six()),
        "example1" => Ok(example1_default()),
        "example2" => Ok(example2()),
        "eq1-completion" => Ok(eq1_completion()),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{span_rank, C64};
    use crate::states::{orthogonality_report, DEFAULT_TOL};

    #[test]
    fn fixture_shapes() {
        let eq1 = builtin_fixture("eq1-six").unwrap();
        assert_eq!((eq1.len(), eq1.dims()), (6, &[2usize, 2, 2][..]));
        let ex2 = builtin_fixture("example2").unwrap();
        assert_eq!((ex2.len(), ex2.dims()), (6, &[2usize, 2, 2, 2][..]));
        let [a, b, g] = example2_factors();
        let fourth: Vec<_> = ex2.states().iter().map(|s| s.factor(3).clone()).collect();
        assert_eq!(fourth, vec![a.clone(), a, b.clone(), b, g.clone(), g]);
        assert!(matches!(builtin_fixture("bennett"), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn example1_rejects_orthogonal_pair() {
        assert!(matches!(example1(&ket0(), &ket1()), Err(Error::OrthogonalPair(_))));
    }

    #[test]
    fn completion_spans_full_space() {
        let mut vectors: Vec<CVector> = eq1_six().states().iter().map(|s| s.to_vector()).collect();
        assert_eq!(span_rank(&vectors), 6);
        let completion = eq1_completion();
        for extra in completion.states() {
            let v = extra.to_vector();
            for w in &vectors[..6] {
                assert!(w.dotc(&v).norm() < 1e-15);
            }
            vectors.push(v);
        }
        assert_eq!(span_rank(&vectors), 8);
        let union = eq1_six().extended(completion.states()).unwrap();
        assert!(orthogonality_report(&union, DEFAULT_TOL).orthogonal);
        let total: C64 = vectors.iter().map(|v| v.dotc(v)).sum();
        assert!((total.re - 8.0).abs() < 1e-12);
    }
}
