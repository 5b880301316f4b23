//! Singular self-similar solutions of the subcritical nonlinear Schrödinger
//! equation in one place: integrate the complex radial profile equation,
//! classify its far field with the WKB basis, shoot for the parameters that
//! minimize the oscillatory far-field coefficient, evaluate the resulting
//! explicit blowup solution, and verify it against a direct finite-difference
//! simulation with conservation diagnostics.

// Validation uses `!(x > 0.0)`-style comparisons throughout: unlike
// `x <= 0.0`, they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod banded;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod nls;
pub mod profile;
pub mod selfsimilar;
pub mod shooting;

pub use error::{Error, Result};
pub use num_complex::Complex64;
