//! Serializable run records, reference comparisons and the accuracy grid.

use crate::blocks::DDPencil;
use crate::ddes::{complete_from_interface, interface_stage, RfDdesConfig};
use crate::error::Result;
use crate::result::EigResult;
use crate::sparse::SparseSym;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads: rayon::current_num_threads(),
        }
    }
}

/// One solver invocation: configuration, results and diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub n: usize,
    pub config: serde_json::Value,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub mu: usize,
    pub converged: bool,
    #[serde(rename = "dim_Z")]
    pub dim_z: usize,
    pub dropped_columns: usize,
    pub s: usize,
    pub d: Vec<usize>,
    pub trace_history: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_error: Option<f64>,
    pub environment: Environment,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_seconds: Option<BTreeMap<String, f64>>,
}

impl RunRecord {
    /// Wall-clock data is kept only when `timings` is set, so that records of
    /// identical runs compare byte for byte without it.
    pub fn new(
        method: &str,
        n: usize,
        config: &impl Serialize,
        res: &EigResult,
        timings: bool,
    ) -> Self {
        let info = &res.info;
        Self {
            method: method.to_string(),
            n,
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            values: res.values.clone(),
            residuals: res.residuals.clone(),
            mu: info.mu,
            converged: info.converged,
            dim_z: info.dim_z,
            dropped_columns: info.dropped_columns,
            s: info.s,
            d: info.d.clone(),
            trace_history: info.trace_history.clone(),
            max_rel_error: None,
            environment: Environment::current(),
            phase_seconds: timings.then(|| info.phase_seconds.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }
}

/// `|λ̂ − λ| / |λ|` for each reference value, matched by position when the
/// counts agree and to the nearest computed value otherwise. Missing values
/// count as infinite error.
pub fn relative_errors(computed: &[f64], reference: &[f64]) -> Vec<f64> {
    let rel = |x: f64, r: f64| {
        if r == 0.0 {
            (x - r).abs()
        } else {
            (x - r).abs() / r.abs()
        }
    };
    if computed.len() == reference.len() {
        return computed
            .iter()
            .zip(reference)
            .map(|(&x, &r)| rel(x, r))
            .collect();
    }
    reference
        .iter()
        .map(|&r| {
            computed
                .iter()
                .map(|&x| rel(x, r))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn max_relative_error(computed: &[f64], reference: &[f64]) -> f64 {
    relative_errors(computed, reference)
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub nev_b: usize,
    pub psi: usize,
    pub max_rel_error: f64,
    /// Ritz values inside the interval.
    pub found: usize,
    pub mu: usize,
    pub dim_z: usize,
    /// Relative errors per reference value.
    #[serde(skip)]
    pub errors: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Accuracy over an `nev_B × ψ` grid. The interface basis is computed once and
/// shared by every cell.
///
/// Errors compare the lowest Ritz values of the projected pencil with the
/// reference by position, whether or not they fall inside the interval: a
/// poor subspace can push the last wanted Ritz value past `β`, and dropping
/// it would hide exactly the error being measured.
pub fn accuracy_grid(
    base: &RfDdesConfig,
    dd: &DDPencil,
    a: &SparseSym,
    m: &SparseSym,
    reference: &[f64],
    nev_b: &[usize],
    psi: &[usize],
) -> Result<Vec<GridCell>> {
    if nev_b.is_empty() || psi.is_empty() {
        return Ok(Vec::new());
    }
    let stage = interface_stage(base, dd)?;
    let mut out = Vec::with_capacity(nev_b.len() * psi.len());
    for &nb in nev_b {
        for &ps in psi {
            let cfg = RfDdesConfig {
                nev_b: nb,
                psi: ps,
                nev_b_per_subdomain: None,
                ..base.clone()
            };
            let res = complete_from_interface(&cfg, dd, &stage, a, m)?;
            let lowest = &res.info.ritz_all[..reference.len().min(res.info.ritz_all.len())];
            let errors = relative_errors(lowest, reference);
            out.push(GridCell {
                nev_b: nb,
                psi: ps,
                max_rel_error: errors.iter().copied().fold(0.0, f64::max),
                found: res.len(),
                mu: res.info.mu,
                dim_z: res.info.dim_z,
                errors,
                values: res.values,
            });
        }
    }
    Ok(out)
}

pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from("nev_b,psi,max_rel_error,found,mu,dim_z\n");
    for c in cells {
        let _ = writeln!(
            out,
            "{},{},{:e},{},{},{}",
            c.nev_b, c.psi, c.max_rel_error, c.found, c.mu, c.dim_z
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_by_position_and_nearest() {
        let e = relative_errors(&[1.0, 2.2], &[1.0, 2.0]);
        assert!(e[0] == 0.0 && (e[1] - 0.1).abs() < 1e-12);
        let e = relative_errors(&[2.0], &[1.0, 2.0]);
        assert_eq!(e, vec![1.0, 0.0]);
        assert_eq!(max_relative_error(&[], &[1.0]), f64::INFINITY);
    }

    #[test]
    fn empty_grid_is_header_only() {
        assert_eq!(grid_csv(&[]).lines().count(), 1);
    }
}
