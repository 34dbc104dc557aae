//! Lanczos with full reorthogonalization on the filtered Schur operator,
//! producing an orthonormal basis of the interface components of the wanted
//! eigenvectors.

use crate::error::Result;
use crate::krylov::{orthogonalize, random_orthogonal, IterConfig, TraceMonitor};
use crate::schur::SchurSet;
use crate::sparse::{dot, norm2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InterfaceBasis {
    /// Orthonormal columns of length `s`.
    pub q: Vec<Vec<f64>>,
    /// Diagonal of `T_μ`.
    pub a: Vec<f64>,
    /// Off-diagonal of `T_μ` (`b[k]` couples `k` and `k + 1`).
    pub b: Vec<f64>,
    pub trace_history: Vec<f64>,
    pub converged: bool,
}

impl InterfaceBasis {
    pub fn mu(&self) -> usize {
        self.q.len()
    }
}

/// Runs Lanczos on `op` (an `s`-dimensional symmetric operator). The trace of
/// `T_μ` equals the sum of its eigenvalues, which is what the stopping rule
/// monitors.
pub fn lanczos(
    op: impl Fn(&[f64]) -> Result<Vec<f64>>,
    s: usize,
    cfg: &IterConfig,
) -> Result<InterfaceBasis> {
    cfg.validate()?;
    let mut basis = InterfaceBasis::default();
    if s == 0 {
        basis.converged = true;
        return Ok(basis);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut q = random_orthogonal(&[], s, &mut rng).expect("s > 0");
    let mut monitor = TraceMonitor::default();
    let max_iter = cfg.max_iter.min(s);
    let mut trace = 0.0;
    loop {
        let mut w = op(&q)?;
        if let (Some(&bprev), Some(qprev)) = (basis.b.last(), basis.q.last()) {
            for (wi, pi) in w.iter_mut().zip(qprev) {
                *wi -= bprev * pi;
            }
        }
        let alpha = dot(&w, &q);
        for (wi, qi) in w.iter_mut().zip(&q) {
            *wi -= alpha * qi;
        }
        basis.q.push(q);
        basis.a.push(alpha);
        trace += alpha;
        let scale = norm2(&w).max(alpha.abs());
        orthogonalize(&basis.q, &mut w);
        let mu = basis.mu();
        if mu % cfg.check_every == 0 || mu == max_iter {
            if monitor.push(trace, cfg.tol) {
                basis.converged = true;
                break;
            }
        }
        if mu >= max_iter {
            basis.converged = mu == s;
            break;
        }
        let beta = norm2(&w);
        if beta > 1e-12 * scale && beta > 0.0 {
            w.iter_mut().for_each(|x| *x /= beta);
            basis.b.push(beta);
            q = w;
        } else {
            match random_orthogonal(&basis.q, s, &mut rng) {
                Some(v) => {
                    basis.b.push(0.0);
                    q = v;
                }
                None => {
                    basis.converged = true;
                    break;
                }
            }
        }
    }
    basis.trace_history = monitor.history;
    Ok(basis)
}

/// Interface basis from the filtered Schur complements.
pub fn interface_lanczos(ss: &SchurSet, cfg: &IterConfig) -> Result<InterfaceBasis> {
    lanczos(|v| ss.apply(v), ss.s, cfg)
}
