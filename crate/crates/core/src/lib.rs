//! Degree of polarization of a superposed photon beam as a function of
//! which-path distinguishability.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`]: a small sparse multi-mode bosonic Fock-space engine.
//! * [`optics`]: mode-operator transforms (attenuator, rotator, beam splitter)
//!   and Jones matrices (wave plates, polarizers).
//! * [`gedanken`]: the two-source thought experiment with a closed form and a
//!   Monte-Carlo sampler.
//! * [`coherence`]: the 2×2 coherence matrix, degree of polarization, Stokes
//!   parameters.
//! * [`zwm`]: the two-crystal induced-coherence interferometer, numerically
//!   (Fock space) and analytically.
//! * [`tomography`]: QWP + polarizer projectors, Poisson counts with dark
//!   counts, background correction and maximum-likelihood reconstruction.
//! * [`config`] and [`sweep`]: the experiment runner behind the `polsim` CLI.

pub mod coherence;
pub mod config;
pub mod error;
pub mod fock;
pub mod gedanken;
pub mod optics;
pub mod sweep;
pub mod tomography;
pub mod zwm;

pub use num_complex::Complex64 as C64;

pub use coherence::{CoherenceMatrix, Stokes};
pub use error::{Error, Result};
pub use fock::{Beam, FockState, ModeId, ModeRegistry, Polarization};
pub use optics::{JonesMatrix, ModeExpr};

/// Tolerance used when checking sign conventions such as `cos γ ≥ 0`.
pub(crate) const ANGLE_EPS: f64 = 1e-12;
