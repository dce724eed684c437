//! Multipartite orthogonal product-state sets and their local
//! distinguishability.
//!
//! * [`linalg`]: dense complex linear algebra (PSD square roots, constrained
//!   Hermitian solution spaces).
//! * [`states`] and [`fixtures`]: product states, state sets, built-in sets.
//! * [`analysis`]: which parties admit a nontrivial orthogonality-preserving
//!   measurement.
//! * [`measure`]: measurements, triviality, surviving outcomes for a
//!   nonorthogonal pair.
//! * [`construct`]: appended-party constructions and the completable
//!   extension grid.
//! * [`certify`]: indistinguishability certificates and their verifier.
//! * [`protocol`]: finite LOCC protocol trees and their simulation.

pub mod analysis;
pub mod certify;
pub mod construct;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod measure;
pub mod protocol;
pub mod states;
pub mod wire;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use measure::Measurement;
pub use states::{ProductState, StateSet, SystemShape};
