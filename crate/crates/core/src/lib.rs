//! Spectral simulator and controllability analyzer for a gated two-dimensional
//! quantum device on the rectangle (0, π) × (0, L).
//!
//! The pipeline runs from the Dirichlet spectrum through the gate potential and
//! its coupling matrix to connectivity and resonance certificates, and on to
//! time evolution under admissible gate voltages.

pub mod chain;
pub mod cli;
pub mod config;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod gate;
pub mod grid;
pub mod linalg;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod transforms;

pub use error::{Error, Result};
pub use spectral::{mode, ModeIndex};
