//! Arnoldi iteration on the filtered pencil `ρ(M⁻¹A)` with a trace-based
//! stopping rule.

use crate::error::{Error, Phase, PhaseExt, Result};
use crate::filter::RationalFilter;
use crate::projection::rayleigh_ritz;
use crate::result::{EigResult, SolveInfo};
use crate::schur::ResolventSet;
use crate::sparse::{axpy, dot, norm2, SparseSym};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Stopping and iteration controls shared by the Krylov-type loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterConfig {
    /// Relative trace change tolerated between consecutive checks.
    pub tol: f64,
    pub max_iter: usize,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 1000,
            check_every: 10,
            seed: 0,
        }
    }
}

impl IterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if self.check_every == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "check_every and max_iter must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Tracks the monitored trace at check points; converged once two
/// consecutive checks agree to the relative tolerance.
#[derive(Debug, Clone, Default)]
pub(crate) struct TraceMonitor {
    pub history: Vec<f64>,
}

impl TraceMonitor {
    pub fn push(&mut self, trace: f64, tol: f64) -> bool {
        let done = match self.history.last() {
            Some(&prev) => (trace - prev).abs() <= tol * trace.abs().max(prev.abs()),
            None => false,
        };
        self.history.push(trace);
        done
    }
}

/// Gram-Schmidt of `w` against `basis`, two passes. Returns the accumulated
/// coefficients.
pub(crate) fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut h = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (hk, q) in h.iter_mut().zip(basis) {
            let c = dot(q, w);
            axpy(-c, q, w);
            *hk += c;
        }
    }
    h
}

/// Seeded unit vector orthogonal to `basis`; `None` when the basis already
/// spans the space.
pub(crate) fn random_orthogonal(
    basis: &[Vec<f64>],
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    if basis.len() >= n {
        return None;
    }
    for _ in 0..8 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let before = norm2(&v);
        orthogonalize(basis, &mut v);
        let nrm = norm2(&v);
        if nrm > 1e-8 * before {
            v.iter_mut().for_each(|x| *x /= nrm);
            return Some(v);
        }
    }
    None
}

/// Orthonormal Arnoldi basis and Hessenberg matrix.
#[derive(Debug, Clone, Default)]
pub struct ArnoldiState {
    pub q: Vec<Vec<f64>>,
    /// `h[k]` is column `k` of the Hessenberg matrix (length `k + 2`).
    pub h: Vec<Vec<f64>>,
    pub trace_history: Vec<f64>,
}

impl ArnoldiState {
    pub fn mu(&self) -> usize {
        self.h.len()
    }

    /// Leading `μ × μ` block `H_μ`.
    pub fn h_square(&self) -> Mat<f64> {
        let mu = self.mu();
        Mat::from_fn(mu, mu, |i, j| self.h[j].get(i).copied().unwrap_or(0.0))
    }

    /// Runs Arnoldi on `op` until the sum of Hessenberg eigenvalues at least
    /// `1/2` stabilizes. Returns whether the stopping rule fired.
    pub fn run(
        op: impl Fn(&[f64]) -> Result<Vec<f64>>,
        n: usize,
        cfg: &IterConfig,
    ) -> Result<(Self, bool)> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut st = ArnoldiState::default();
        let Some(q0) = random_orthogonal(&[], n, &mut rng) else {
            return Ok((st, true));
        };
        st.q.push(q0);
        let mut monitor = TraceMonitor::default();
        let max_iter = cfg.max_iter.min(n);
        let mut converged = false;
        while st.mu() < max_iter {
            let mut w = op(st.q.last().unwrap())?;
            let scale = norm2(&w);
            let mut col = orthogonalize(&st.q, &mut w);
            let beta = norm2(&w);
            let mu = st.mu() + 1;
            let at_check = mu % cfg.check_every == 0 || mu == max_iter;
            if beta > 1e-12 * scale.max(f64::MIN_POSITIVE) && beta > 0.0 {
                col.push(beta);
                w.iter_mut().for_each(|x| *x /= beta);
                st.h.push(col);
                st.q.push(w);
            } else {
                col.push(0.0);
                st.h.push(col);
                match random_orthogonal(&st.q, n, &mut rng) {
                    Some(v) => st.q.push(v),
                    None => {
                        converged = true;
                    }
                }
            }
            if at_check || converged {
                let tr = filtered_trace(&st.h_square())?;
                if monitor.push(tr, cfg.tol) || converged {
                    converged = true;
                    break;
                }
            }
        }
        st.q.truncate(st.mu());
        st.trace_history = monitor.history;
        Ok((st, converged))
    }
}

/// Eigenvalues of a square matrix as `(re, im)` pairs.
fn eigenvalues(h: &Mat<f64>) -> Result<Vec<(f64, f64)>> {
    if h.nrows() == 0 {
        return Ok(Vec::new());
    }
    let ev = h
        .eigenvalues()
        .map_err(|e| Error::Dense(format!("{e:?}")))?;
    Ok(ev.iter().map(|z| (z.re, z.im)).collect())
}

fn filtered_trace(h: &Mat<f64>) -> Result<f64> {
    Ok(eigenvalues(h)?
        .iter()
        .filter(|z| z.0 >= 0.5)
        .map(|z| z.0)
        .sum())
}

/// Filtered-Krylov eigensolver over the whole pencil.
pub fn rf_krylov_solve(
    a: &SparseSym,
    m: &SparseSym,
    filter: &RationalFilter,
    cfg: &IterConfig,
) -> Result<EigResult> {
    let n = a.n();
    if m.n() != n {
        return Err(
            Error::Dimension("pencil matrices differ in size".into()).in_phase(Phase::Ingestion)
        );
    }
    let mut info = SolveInfo::default();
    let t0 = Instant::now();
    let rs = ResolventSet::build(a, m, filter).phase(Phase::Factorization)?;
    info.phase_seconds
        .insert("factorization".into(), t0.elapsed().as_secs_f64());

    let t1 = Instant::now();
    let (st, converged) = ArnoldiState::run(|v| rs.apply(v), n, cfg).phase(Phase::Krylov)?;
    info.phase_seconds
        .insert("krylov".into(), t1.elapsed().as_secs_f64());
    info.mu = st.mu();
    info.converged = converged;
    info.trace_history = st.trace_history.clone();

    let t2 = Instant::now();
    let pairs = ritz_pairs(a, m, &st).phase(Phase::Projection)?;
    info.dim_z = st.mu();
    info.ritz_all = {
        let mut v: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let slack = (filter.beta - filter.alpha) * 1e-8;
    let kept: Vec<(f64, Vec<f64>)> = pairs
        .into_iter()
        .filter(|p| p.0 >= filter.alpha - slack && p.0 <= filter.beta + slack)
        .collect();
    let mut res = EigResult::from_pairs(a, m, kept, info).phase(Phase::Projection)?;
    res.info
        .phase_seconds
        .insert("projection".into(), t2.elapsed().as_secs_f64());
    Ok(res)
}

/// Ritz pairs for the Hessenberg eigenvalues at least `1/2`. The real-rotated
/// Ritz vectors are passed through a Rayleigh-Ritz projection rather than
/// taking one Rayleigh quotient each: the filter gives equal values to
/// eigenvalues mirrored about the interval center, so a single Hessenberg
/// eigenvector may mix two such eigenvectors.
fn ritz_pairs(a: &SparseSym, m: &SparseSym, st: &ArnoldiState) -> Result<Vec<(f64, Vec<f64>)>> {
    let h = st.h_square();
    let mu = h.nrows();
    if mu == 0 {
        return Ok(Vec::new());
    }
    let n = a.n();
    let hnorm = h.norm_max();
    let asym = (0..mu)
        .flat_map(|i| (0..mu).map(move |j| (i, j)))
        .map(|(i, j)| (h[(i, j)] - h[(j, i)]).abs())
        .fold(0.0, f64::max);
    // Each entry: filtered value and a real coefficient vector in the basis.
    let mut coeffs: Vec<(f64, Vec<f64>)> = Vec::new();
    if asym <= 1e-10 * hnorm {
        let sym = Mat::<f64>::from_fn(mu, mu, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let evd = sym
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Dense(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        for k in 0..mu {
            if s[k] >= 0.5 {
                coeffs.push((s[k], (0..mu).map(|i| u[(i, k)]).collect()));
            }
        }
    } else {
        let evd = h.eigen().map_err(|e| Error::Dense(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        for k in 0..mu {
            if s[k].re < 0.5 || s[k].im < 0.0 {
                continue;
            }
            let g: Vec<num_complex::Complex64> = (0..mu).map(|i| u[(i, k)]).collect();
            let pivot = g
                .iter()
                .copied()
                .max_by(|x, y| x.norm().total_cmp(&y.norm()))
                .unwrap();
            let phase = pivot.conj() / pivot.norm();
            coeffs.push((s[k].re, g.iter().map(|z| (z * phase).re).collect()));
        }
    }
    let xs: Vec<Vec<f64>> = coeffs
        .into_iter()
        .map(|(_, g)| {
            let mut x = vec![0.0; n];
            for (gi, q) in g.iter().zip(&st.q) {
                axpy(*gi, q, &mut x);
            }
            x
        })
        .collect();
    let rr = rayleigh_ritz(a, m, xs, |_| true)?;
    Ok(rr.values.into_iter().zip(rr.vectors).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::midpoint_filter;

    #[test]
    fn diagonal_pencil() {
        let a = SparseSym::diagonal(&(1..=10).map(|i| i as f64).collect::<Vec<_>>());
        let m = SparseSym::identity(10);
        let f = midpoint_filter(0.5, 3.5, 8).unwrap();
        let r = rf_krylov_solve(&a, &m, &f, &IterConfig::default()).unwrap();
        assert_eq!(r.len(), 3);
        for (v, e) in r.values.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() <= 1e-10, "{v}");
        }
        assert!(r.info.mu >= 3);
        assert!(r.residuals.iter().all(|&x| x < 1e-8));
    }

    #[test]
    fn empty_interval_gives_empty_result() {
        let a = SparseSym::diagonal(&[1.0, 2.0, 3.0, 4.0]);
        let m = SparseSym::identity(4);
        let f = midpoint_filter(10.0, 11.0, 4).unwrap();
        let cfg = IterConfig {
            check_every: 1,
            ..Default::default()
        };
        let r = rf_krylov_solve(&a, &m, &f, &cfg).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn monitor_requires_two_checks() {
        let mut m = TraceMonitor::default();
        assert!(!m.push(3.0, 1e-6));
        assert!(!m.push(3.5, 1e-6));
        assert!(m.push(3.5, 1e-6));
        let mut z = TraceMonitor::default();
        z.push(0.0, 1e-6);
        assert!(z.push(0.0, 1e-6));
    }

    #[test]
    fn breakdown_is_replaced() {
        // the filtered operator of a diagonal pencil maps e_1 to a multiple of e_1
        let st = ArnoldiState::run(
            |v: &[f64]| Ok(vec![v[0], 0.0, 0.0, 0.0]),
            4,
            &IterConfig {
                check_every: 1,
                max_iter: 4,
                ..Default::default()
            },
        )
        .unwrap()
        .0;
        let q = &st.q;
        for i in 0..q.len() {
            for j in 0..q.len() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((dot(&q[i], &q[j]) - e).abs() < 1e-12);
            }
        }
    }
}
