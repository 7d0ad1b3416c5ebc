//! Quaternionic matrix operators and their fractional powers via the S-functional calculus.

// Negated float comparisons are deliberate: they route NaN to the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod error;
pub mod fracpow;
pub mod kato;
pub mod kernel;
pub mod matrix;
pub mod quadrature;
pub mod quaternion;
pub mod random;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::QMatrix;
pub use quaternion::{ImaginaryUnit, Quaternion};
pub use spectral::{Resolvent, SectorEstimate, SpectralReport, SpectrumSphere};
