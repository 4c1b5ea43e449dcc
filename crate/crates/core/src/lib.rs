//! Exact Fock-basis simulation of linear-optical circuits with photon-number
//! detection and feed-forward, built around a measurement-driven N00N-state
//! generator.

pub mod analytics;
pub mod combinatorics;
pub mod crosscheck;
pub mod dsl;
pub mod error;
pub mod generator;
pub mod ops;
pub mod state;

pub use error::{Error, Result};
pub use state::{FidelityReport, Occupation, StateVector};
