//! Spectral analysis of non-symmetric elliptic problems on the unit disk with
//! complex-valued boundary operators: coefficient handling, ellipticity rays,
//! the radial disk spectrum and operator families polynomial in λ.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod coefficients;
pub mod disk;
pub mod ellipticity;
pub mod error;
pub mod family;
pub mod linalg;
pub mod perturb;
pub mod quadrature;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
