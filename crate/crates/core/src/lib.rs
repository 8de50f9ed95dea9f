//! Simulation and statistical verification of Azéma martingales and
//! structure-equation jump processes.
//!
//! Two engines produce sample paths of the normal-martingale approximations:
//! a closed-form event-driven sampler for the linear coefficient f(x) = βx
//! ([`sampler`]) and a hazard-integrating ODE engine for general coefficients
//! and jump laws ([`structure`]). Renewal-process constructions of the same
//! unit-scale processes live in [`renewal`]. Pathwise functionals
//! ([`analysis`]) and a thresholded statistical battery ([`verify`]) turn the
//! limit-theorem claims into reproducible desk-scale checks; everything is a
//! pure function of explicit seeds ([`rng`]).

// Validation guards are written as `!(x > 0.0)` so NaN is rejected along
// with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod battery;
pub mod error;
pub mod export;
pub mod mc;
pub mod ode;
pub mod path;
pub mod renewal;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod structure;
pub mod verify;

pub use error::{Error, Result};
pub use path::{DenseTrace, Jump, PathKind, PathSegment, SamplePath};
pub use rng::{SeedSpec, Stream};
pub use sampler::AzemaParams;
pub use structure::{GeneralParams, JumpLaw, StructureFn};
