//! Shifted factorizations, Schur complements of the arrowhead pencil and the
//! filtered resolvents built from them.

use crate::blocks::DDPencil;
use crate::error::{Error, Result};
use crate::filter::RationalFilter;
use crate::skyline::{factor_complex, ComplexFactorization};
use crate::sparse::SparseSym;
use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::{c64, Mat};
use num_complex::Complex64;
use rayon::prelude::*;

/// Schur complement `S_ζ = C_ζ − Σ_j Ê_ζjᵀ B_ζj⁻¹ Ê_ζj` (plain transpose: the
/// shifted blocks are complex symmetric) together with the subdomain
/// factorizations it was formed from.
pub fn form_schur(dd: &DDPencil, zeta: Complex64) -> Result<(Mat<c64>, Vec<ComplexFactorization>)> {
    let sb = dd.shifted_blocks(zeta);
    let s = dd.s();
    let mut schur = Mat::<c64>::zeros(s, s);
    for (i, k, v) in sb.c.triplets() {
        schur[(i, k)] = v;
    }
    let facts: Vec<ComplexFactorization> =
        sb.b.par_iter()
            .map(|b| factor_complex(b, zeta))
            .collect::<Result<_>>()?;
    for (j, fact) in facts.iter().enumerate() {
        let win = dd.meta.window(j);
        if win.is_empty() || fact.n() == 0 {
            continue;
        }
        let et = sb.e_hat[j].transpose();
        let cols: Vec<Vec<c64>> = (0..win.len())
            .into_par_iter()
            .map(|k| {
                let (rows, vals) = et.row(k);
                let entries: Vec<(usize, c64)> =
                    rows.iter().copied().zip(vals.iter().copied()).collect();
                fact.forward_sparse(&entries)
            })
            .collect();
        let d = fact.n();
        let w = Mat::<c64>::from_fn(d, win.len(), |r, c| cols[c][r]);
        let dinv = fact.diag();
        let x = Mat::<c64>::from_fn(d, win.len(), |r, c| cols[c][r] / dinv[r]);
        let contrib = w.transpose() * &x;
        for (a, ga) in win.clone().enumerate() {
            for (b, gb) in win.clone().enumerate() {
                schur[(ga, gb)] -= contrib[(a, b)];
            }
        }
    }
    Ok((schur, facts))
}

/// Factored Schur complement for one quadrature node.
pub struct SchurNode {
    pub zeta: Complex64,
    pub weight: Complex64,
    lu: PartialPivLu<c64>,
    /// Subdomain factorizations, kept only on request.
    pub subdomain_facts: Option<Vec<ComplexFactorization>>,
}

/// Schur complements for every pole of a filter.
pub struct SchurSet {
    pub s: usize,
    pub nodes: Vec<SchurNode>,
}

impl SchurSet {
    /// Forms and factors `S_ζℓ` for every pole. Subdomain factors are dropped
    /// after assembly unless `keep_subdomain_facts` is set.
    pub fn build(
        dd: &DDPencil,
        filter: &RationalFilter,
        keep_subdomain_facts: bool,
    ) -> Result<Self> {
        let nodes = filter
            .poles
            .iter()
            .zip(&filter.weights)
            .map(|(&zeta, &weight)| {
                let (schur, facts) = form_schur(dd, zeta)?;
                let lu = schur.partial_piv_lu();
                Ok(SchurNode {
                    zeta,
                    weight,
                    lu,
                    subdomain_facts: keep_subdomain_facts.then_some(facts),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { s: dd.s(), nodes })
    }

    /// `Re Σ ω_ℓ S_ζℓ⁻¹ q`.
    pub fn apply(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.s {
            return Err(Error::Dimension(format!(
                "vector of length {} for s={}",
                q.len(),
                self.s
            )));
        }
        let b = Mat::<c64>::from_fn(self.s, 1, |i, _| c64::new(q[i], 0.0));
        let parts: Vec<Mat<c64>> = self.nodes.par_iter().map(|nd| nd.lu.solve(&b)).collect();
        let mut w = vec![0.0; self.s];
        for (nd, x) in self.nodes.iter().zip(&parts) {
            for (i, wi) in w.iter_mut().enumerate() {
                *wi += (nd.weight * x[(i, 0)]).re;
            }
        }
        Ok(w)
    }

    /// Explicit `Re Σ ω_ℓ S_ζℓ⁻¹` (`s × s`).
    pub fn filtered_matrix(&self) -> Mat<f64> {
        let eye = Mat::<c64>::from_fn(self.s, self.s, |i, j| {
            if i == j {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let mut out = Mat::<f64>::zeros(self.s, self.s);
        for nd in &self.nodes {
            let inv = nd.lu.solve(&eye);
            for j in 0..self.s {
                for i in 0..self.s {
                    out[(i, j)] += (nd.weight * inv[(i, j)]).re;
                }
            }
        }
        out
    }
}

/// Factorizations of `A − ζ_ℓ M` for every pole, applying the full filtered
/// resolvent `2 Re Σ ω_ℓ (A − ζ_ℓ M)⁻¹ M`.
pub struct ResolventSet {
    pub weights: Vec<Complex64>,
    pub facts: Vec<ComplexFactorization>,
    m: SparseSym,
}

impl ResolventSet {
    pub fn build(a: &SparseSym, m: &SparseSym, filter: &RationalFilter) -> Result<Self> {
        if a.n() != m.n() {
            return Err(Error::Dimension("pencil matrices differ in size".into()));
        }
        let ac = a.csr().to_complex();
        let mc = m.csr().to_complex();
        let facts = filter
            .poles
            .par_iter()
            .map(|&z| factor_complex(&ac.add_scaled(&mc, -z)?, z))
            .collect::<Result<_>>()?;
        Ok(Self {
            weights: filter.weights.clone(),
            facts,
            m: m.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mv = self.m.spmv(v)?;
        let rhs: Vec<Complex64> = mv.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let parts: Vec<Vec<Complex64>> = self.facts.par_iter().map(|f| f.solve(&rhs)).collect();
        let mut w = vec![0.0; v.len()];
        for (om, x) in self.weights.iter().zip(&parts) {
            for (wi, xi) in w.iter_mut().zip(x) {
                *wi += 2.0 * (om * xi).re;
            }
        }
        Ok(w)
    }
}
