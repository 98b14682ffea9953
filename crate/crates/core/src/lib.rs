//! Dependability models for replicated blockchain service infrastructure.
//!
//! Reliability block diagrams ([`rbd`]) and generalized stochastic Petri
//! nets ([`spn`]) compose into a hierarchical availability model of an
//! Ethereum service stack ([`arch`]). On top of the solved models sit
//! percentage-difference sensitivity ([`sensitivity`]), capacity-oriented
//! availability ([`coa`]) and acquisition/energy/TCO costing ([`cost`]).
//! [`sim`] is an independent discrete-event estimator used to cross-check
//! the analytical engine, and [`scenario`]/[`report`] back the CLI.

pub mod arch;
pub mod cli;
pub mod coa;
pub mod cost;
pub mod error;
pub mod rbd;
pub mod report;
pub mod scenario;
pub mod sensitivity;
pub mod sim;
pub mod spn;

pub use error::{Error, Result};
