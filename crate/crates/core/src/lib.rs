//! Simulator and diagnostics for ADBB, a distributed optimization method for
//! unbalanced directed networks that mixes with row-stochastic weights, picks
//! Barzilai-Borwein step sizes locally, and repeats each consensus step `H`
//! times per iteration.

pub mod adbb;
pub mod baselines;
pub mod error;
pub mod graph;
pub mod harness;
pub mod objective;
pub mod theory;

pub use error::{Error, Result};
