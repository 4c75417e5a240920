//! Single-pulse Rydberg-blockade controlled-phase gates: propagation of the
//! two-atom Hamiltonian, gate extraction and fidelities, analytic solution
//! search, and Monte-Carlo noise analysis.

// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod gateanalysis;
pub mod hamiltonians;
pub mod noisemc;
pub mod numkernel;
pub mod report;
pub mod simplex;
pub mod solutionsearch;
pub mod units;

pub use error::{Error, Result};
