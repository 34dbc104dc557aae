//! Sparse symmetric generalized eigensolvers based on rational filtering.
//!
//! [`ddes::rf_ddes_solve`] restricts the filter to the interface variables of
//! a domain decomposition and completes the subspace with per-subdomain
//! interior information; [`krylov::rf_krylov_solve`] filters the whole pencil.

pub mod blocks;
pub mod ddes;
pub mod error;
pub mod filter;
pub mod graph;
pub mod interface;
pub mod interior;
pub mod krylov;
pub mod mesh;
pub mod mm;
pub mod oracle;
pub mod partition;
pub mod projection;
pub mod report;
pub mod result;
pub mod scalar;
pub mod schur;
pub mod skyline;
pub mod sparse;

pub use error::{Error, Phase, Result};
