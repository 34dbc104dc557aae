//! Eigenpair containers shared by both solvers.

use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseSym};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Diagnostics attached to a solve.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveInfo {
    /// Krylov or interface Lanczos iterations.
    pub mu: usize,
    pub converged: bool,
    /// Columns of the Rayleigh-Ritz basis after conditioning.
    pub dim_z: usize,
    /// Columns dropped as numerically dependent during conditioning.
    pub dropped_columns: usize,
    /// Interface size (zero for the full-pencil solver).
    pub s: usize,
    /// Interior size per subdomain.
    pub d: Vec<usize>,
    /// Every Ritz value of the projected pencil, ascending, including those
    /// outside the search interval.
    pub ritz_all: Vec<f64>,
    /// Trace of the filtered projection at each convergence check.
    pub trace_history: Vec<f64>,
    pub phase_seconds: BTreeMap<String, f64>,
}

/// Approximate eigenpairs in the original variable ordering.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EigResult {
    /// Ascending Ritz values.
    pub values: Vec<f64>,
    /// M-normalized Ritz vectors, one per value.
    pub vectors: Vec<Vec<f64>>,
    /// `‖A x − λ M x‖₂` for each pair (`x` is M-normalized).
    pub residuals: Vec<f64>,
    pub info: SolveInfo,
}

impl EigResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Builds a result from raw pairs: M-normalizes the vectors, computes the
    /// residuals and sorts by value.
    pub fn from_pairs(
        a: &SparseSym,
        m: &SparseSym,
        pairs: Vec<(f64, Vec<f64>)>,
        info: SolveInfo,
    ) -> Result<Self> {
        let mut pairs = pairs;
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = EigResult {
            info,
            ..Default::default()
        };
        for (lam, mut x) in pairs {
            let mx = m.spmv(&x)?;
            let mn = dot(&x, &mx);
            if !(mn > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let scale = 1.0 / mn.sqrt();
            x.iter_mut().for_each(|v| *v *= scale);
            out.residuals.push(residual(a, m, lam, &x)?);
            out.values.push(lam);
            out.vectors.push(x);
        }
        Ok(out)
    }
}

/// `‖A x − λ M x‖₂`.
pub fn residual(a: &SparseSym, m: &SparseSym, lam: f64, x: &[f64]) -> Result<f64> {
    let ax = a.spmv(x)?;
    let mx = m.spmv(x)?;
    let r: Vec<f64> = ax.iter().zip(&mx).map(|(p, q)| p - lam * q).collect();
    Ok(norm2(&r))
}

/// Rayleigh quotient `xᵀAx / xᵀMx`.
pub fn rayleigh_quotient(a: &SparseSym, m: &SparseSym, x: &[f64]) -> Result<f64> {
    Ok(dot(x, &a.spmv(x)?) / dot(x, &m.spmv(x)?))
}
