//! Nonlinear optical response of a laser-driven atomic array coupled to a
//! single standing-wave cavity mode.
//!
//! The pipeline runs from scattering geometry ([`geometry`]) through the
//! quadratic polariton problem ([`polariton`]) to the effective nonlinear
//! Hamiltonians ([`effective`]), which are solved as open quantum systems on
//! truncated Fock spaces ([`engine`]). [`observables`] and [`analytics`]
//! turn steady states into squeezing spectra and photon statistics, and
//! [`oracle`] simulates a few two-level atoms exactly as a cross-check.
//!
//! All frequencies and rates are expressed in units of the cavity linewidth
//! κ, in the frame rotating at the laser frequency.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod config;
pub mod effective;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod observables;
pub mod oracle;
pub mod parallel;
pub mod polariton;
pub mod sweep;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix used for operators and density matrices.
pub type CMatrix = nalgebra::DMatrix<C64>;
