//! JSON wire forms. Complex numbers travel as `[re, im]`.

use serde::{Deserialize, Serialize};

use crate::linalg::{c, CMatrix, CVector};

pub type WireComplex = [f64; 2];
pub type WireVector = Vec<WireComplex>;
/// Row-major list of rows.
pub type WireMatrix = Vec<Vec<WireComplex>>;

pub fn vector_to_wire(v: &CVector) -> WireVector {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_wire(w: &[WireComplex]) -> CVector {
    CVector::from_iterator(w.len(), w.iter().map(|&[re, im]| c(re, im)))
}

pub fn matrix_to_wire(m: &CMatrix) -> WireMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

/// `None` for ragged or empty input.
pub fn matrix_from_wire(w: &WireMatrix) -> Option<CMatrix> {
    let rows = w.len();
    let cols = w.first()?.len();
    if cols == 0 || w.iter().any(|r| r.len() != cols) {
        return None;
    }
    Some(CMatrix::from_fn(rows, cols, |r, k| {
        let [re, im] = w[r][k];
        c(re, im)
    }))
}

/// Serde adapter for a `CVector` field.
pub mod vector {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        vector_to_wire(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let w = WireVector::deserialize(d)?;
        Ok(vector_from_wire(&w))
    }
}

/// Serde adapter for a `CMatrix` field.
pub mod matrix {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        matrix_to_wire(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let w = WireMatrix::deserialize(d)?;
        matrix_from_wire(&w).ok_or_else(|| D::Error::custom("matrix rows must be nonempty and of equal length"))
    }
}

/// Wrapper for ad-hoc serialization of a complex scalar.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(transparent)]
pub struct Complex(pub WireComplex);

impl From<crate::linalg::C64> for Complex {
    fn from(z: crate::linalg::C64) -> Self {
        Complex([z.re, z.im])
    }
}
