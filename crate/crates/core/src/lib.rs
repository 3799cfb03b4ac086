//! Simulation and design optimization of superconducting qubit pairs and
//! chains connected by C-shunt flux tunable couplers.

pub mod chain;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod coupler;
pub mod crosstalk;
pub mod error;
pub mod fock;
pub mod gate;
pub mod idle;
pub mod numerics;
pub mod output;
pub mod units;

pub use error::{Error, ErrorCategory, Result};
