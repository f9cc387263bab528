//! Two-photon coincidence spectroscopy of a bichromatically driven
//! Jaynes–Cummings atom–cavity system.
//!
//! The crate builds the truncated atom ⊗ cavity operators, assembles the
//! Lindblad generator `L = L_eff + D(t) + J`, and solves for the long-time
//! harmonic components of the density matrix under a two-tone drive. On top
//! of that it provides coupling-strength ensembles, count-rate scans with
//! optional background subtraction, dressed-state pathway ablation and peak
//! location, plus the three-level ∨-system cross-check.
//!
//! All rates and frequencies are in units of the cavity field decay rate κ.

pub mod cli;
pub mod ensemble;
pub mod error;
pub mod floquet;
pub mod liouvillian;
pub mod operators;
pub mod par;
pub mod spectroscopy;
pub mod vee;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix (operators, density matrices, superoperators).
pub type CMatrix = nalgebra::DMatrix<C64>;
