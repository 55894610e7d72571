//! Singular value decomposition of the truncated Hilbert transform with overlap.
//!
//! Two independent routes are provided: discretize the operator as a dense
//! matrix and take its SVD ([`discretization`], [`spectrum`]), or solve the
//! commuting two-interval Sturm–Liouville problem ([`sturm`]) and push its
//! eigenfunctions through the transform. [`verify`] ties the two together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod quadrature;
pub mod sampled;
pub mod spectrum;
pub mod sturm;
pub mod verify;
pub mod wavelet;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use geometry::Configuration;
pub use sampled::SampledFunction;
