//! Simulation and verification toolkit for real symmetric Wigner matrices.
//!
//! The crate is organised bottom-up:
//!
//! - [`ensemble`]: entry laws, the truncation/centering/rescaling pipeline and
//!   reproducible matrix sampling.
//! - [`spectra`]: Householder + implicit QL eigensolver, empirical spectral
//!   distributions and exact Kolmogorov distances.
//! - [`law`]: the semicircle law (density, CDF, quantile, Stieltjes transform).
//! - [`resolvent`]: empirical Stieltjes transforms and leave-one-out resolvent
//!   quantities.
//! - [`bounds`]: executable forms of the Berry–Esseen type smoothing
//!   inequality and of the variance, moment and exceedance bounds.
//! - [`harness`]: seeded parallel replicas, rate fitting, configuration and
//!   export.

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod law;
pub mod linalg;
pub mod quad;
pub mod resolvent;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
