//! Deterministic kinetic solver library.
//!
//! Couples an exact semi-Lagrangian transport sweep for piecewise-constant
//! distributions with either a BGK relaxation operator or a spectral
//! evaluation of the Boltzmann collision integral, on uniform phase-space
//! grids with optional solid obstacles.

pub mod bgk;
pub mod cases;
pub mod config;
pub mod conservation;
pub mod dump;
pub mod error;
pub mod fft;
pub mod grid;
pub mod moments;
pub mod solver;
pub mod spectral;
pub mod transport;

pub use error::{FksError, Result};
