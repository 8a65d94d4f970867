//! Numerical laboratory for the massive and massless Thirring model in 1+1 dimensions.
//!
//! The crate is organised around five pieces:
//!
//! * [`field_model`]: data families, spacetime regions, wave coordinates and the scaling map.
//! * [`exact_massless`]: closed-form massless solutions, phases and special ε-sequences.
//! * [`norms`]: Lebesgue and Sobolev norms of (possibly singular) samplers.
//! * [`solver`]: a characteristic-lattice integrator for the full system together with
//!   charge, phase and remainder diagnostics.
//! * [`experiments`]: reproducible experiment drivers with CSV/JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod exact_massless;
pub mod experiments;
pub mod field_model;
pub mod norms;
pub mod quadrature;
pub mod solver;

pub use error::{LabError, Result};
pub use num_complex::Complex64;

/// A complex field value.
pub type ComplexAmplitude = Complex64;
