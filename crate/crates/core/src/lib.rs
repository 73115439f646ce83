//! Weak measurements with pre- and postselection on finite-dimensional
//! systems.
//!
//! The crate is layered bottom-up:
//!
//! - [`hilbert`]: dense complex states, operators, projectors and spectral
//!   decompositions.
//! - [`scenario`]: the preselect / evolve / postselect timeline and strong
//!   (projective) measurement.
//! - [`meter`]: exact von Neumann Gaussian pointers as a finite superposition
//!   of shifted Gaussians.
//! - [`weakvalues`]: analytic weak values, channel decomposition and the
//!   additivity contradiction detector.
//! - [`montecarlo`]: simulated repeated experiments and weak-limit sweeps.
//! - [`document`], [`builtin`] and [`cli`]: scenario documents, the three-box
//!   arrangement and the command-line front end.

pub mod builtin;
pub mod cli;
pub mod document;
pub mod error;
pub mod hilbert;
pub mod meter;
pub mod montecarlo;
pub mod rng;
pub mod scenario;
pub mod weakvalues;

pub use error::{Error, Result};
pub use num_complex::Complex64;
