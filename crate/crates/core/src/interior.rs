//! Per-subdomain interior subspaces: eigenvectors of `(B_j, M_B^(j))` nearest
//! the shift `σ` and the resolvent-expansion blocks that couple the interior
//! to the interface basis.

use crate::blocks::{DDPencil, SubdomainBlocks};
use crate::error::{Error, Result};
use crate::interface::InterfaceBasis;
use crate::krylov::random_orthogonal;
use crate::projection::dense_sym_gen_eig;
use crate::skyline::EnvelopeLdl;
use crate::sparse::{axpy, dot, SparseSym, DEFAULT_DENSE_CAP};
use faer::{Mat, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Subdomains at most this large are solved densely.
pub const DENSE_INTERIOR_MAX: usize = 200;

/// Relative residual required of each shift-invert Ritz pair.
pub const EIG_TOL: f64 = 1e-10;

fn m_dot(m: &SparseSym, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(dot(x, &m.spmv(y)?))
}

/// Factors `B − σ M_B`, translating a collapsed pivot into advice to move σ.
pub fn factor_shifted(b: &SparseSym, m_b: &SparseSym, sigma: f64) -> Result<EnvelopeLdl<f64>> {
    let k = b.csr().add_scaled(m_b.csr(), -sigma)?;
    EnvelopeLdl::factor(&k, Complex64::new(sigma, 0.0)).map_err(|e| match e {
        Error::SingularPivot { .. } => Error::InvalidArgument(format!(
            "B - σ M_B is singular for σ = {sigma}; σ is (numerically) an eigenvalue of a subdomain pencil, perturb it"
        )),
        e => e,
    })
}

fn select_nearest(vals: &[f64], sigma: f64, nev: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| {
        (vals[i] - sigma)
            .abs()
            .total_cmp(&(vals[j] - sigma).abs())
            .then(i.cmp(&j))
    });
    idx.truncate(nev);
    idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    idx
}

/// The `nev` eigenpairs of `(B, M_B)` closest to `σ`, ascending, with
/// M_B-orthonormal vectors.
pub fn smallest_eigs_b(
    b: &SparseSym,
    m_b: &SparseSym,
    sigma: f64,
    nev: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = b.n();
    if nev > d {
        return Err(Error::InvalidArgument(format!(
            "nev_B={nev} exceeds the subdomain size {d}"
        )));
    }
    if nev == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if d <= DENSE_INTERIOR_MAX || (2 * nev >= d && d <= DEFAULT_DENSE_CAP) {
        return dense_eigs(b, m_b, sigma, nev);
    }
    let fact = factor_shifted(b, m_b, sigma)?;
    shift_invert_lanczos(b, m_b, &fact, sigma, nev, seed)
}

fn dense_eigs(
    b: &SparseSym,
    m_b: &SparseSym,
    sigma: f64,
    nev: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = b.n();
    let (vals, g) = dense_sym_gen_eig(
        &b.to_dense(DEFAULT_DENSE_CAP)?,
        &m_b.to_dense(DEFAULT_DENSE_CAP)?,
    )?;
    let sel = select_nearest(&vals, sigma, nev);
    let vecs = sel
        .iter()
        .map(|&k| (0..d).map(|i| g[(i, k)]).collect())
        .collect();
    Ok((vecs, sel.iter().map(|&k| vals[k]).collect()))
}

/// Lanczos on `(B − σM_B)⁻¹ M_B` in the M_B inner product with full
/// reorthogonalization.
fn shift_invert_lanczos(
    b: &SparseSym,
    m_b: &SparseSym,
    fact: &EnvelopeLdl<f64>,
    sigma: f64,
    nev: usize,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = b.n();
    let cap = (4 * nev + 100).min(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = random_orthogonal(&[], d, &mut rng).expect("d > 0");
    let nrm = m_dot(m_b, &v, &v)?.sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut mbasis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let mv = m_b.spmv(&v)?;
        let mut w = fact.solve(&mv);
        if let (Some(&bp), Some(vp)) = (beta.last(), basis.last()) {
            axpy(-bp, vp, &mut w);
        }
        let a = dot(&w, &mv);
        axpy(-a, &v, &mut w);
        basis.push(v);
        mbasis.push(mv);
        alpha.push(a);
        for _ in 0..2 {
            for (q, mq) in basis.iter().zip(&mbasis) {
                let c = dot(mq, &w);
                axpy(-c, q, &mut w);
            }
        }
        let k = basis.len();
        let bnext = m_dot(m_b, &w, &w)?.max(0.0).sqrt();
        let check = k >= nev && (k % 10 == 0 || k == cap);
        if check || k == cap {
            let t = Mat::<f64>::from_fn(k, k, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let evd = t
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Dense(format!("{e:?}")))?;
            let theta: Vec<f64> = (0..k).map(|i| evd.S().column_vector()[i]).collect();
            let u = evd.U();
            // largest |θ| are nearest σ
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&i, &j| theta[j].abs().total_cmp(&theta[i].abs()).then(i.cmp(&j)));
            order.truncate(nev);
            let ok = order
                .iter()
                .all(|&i| (bnext * u[(k - 1, i)]).abs() <= EIG_TOL * theta[i].abs());
            if ok || k == cap {
                if !ok {
                    return Err(Error::NoConvergence(format!(
                        "shift-invert Lanczos for {nev} eigenpairs stopped at its cap of {cap} iterations"
                    )));
                }
                let mut pairs: Vec<(f64, Vec<f64>)> = order
                    .iter()
                    .map(|&i| {
                        let mut x = vec![0.0; d];
                        for (r, q) in basis.iter().enumerate() {
                            axpy(u[(r, i)], q, &mut x);
                        }
                        (sigma + 1.0 / theta[i], x)
                    })
                    .collect();
                pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
                let mut vecs = Vec::with_capacity(nev);
                let mut vals = Vec::with_capacity(nev);
                for (_, mut x) in pairs {
                    let mx = m_b.spmv(&x)?;
                    let nn = dot(&x, &mx).sqrt();
                    x.iter_mut().for_each(|e| *e /= nn);
                    vals.push(dot(&x, &b.spmv(&x)?));
                    vecs.push(x);
                }
                return Ok((vecs, vals));
            }
        }
        if bnext > 1e-14 * alpha.iter().fold(0.0f64, |m, x| m.max(x.abs())) {
            w.iter_mut().for_each(|x| *x /= bnext);
            beta.push(bnext);
            v = w;
        } else {
            let mut r = random_orthogonal(&[], d, &mut rng).expect("d > 0");
            for _ in 0..2 {
                for (q, mq) in basis.iter().zip(&mbasis) {
                    let c = dot(mq, &r);
                    axpy(-c, q, &mut r);
                }
            }
            let nn = m_dot(m_b, &r, &r)?.sqrt();
            r.iter_mut().for_each(|x| *x /= nn);
            beta.push(0.0);
            v = r;
        }
    }
}

/// `Φ_j = (Ê_j − σ M̂_E^(j)) Q_j` and `Ψ_j = M̂_E^(j) Q_j` (absent when the
/// mass coupling vanishes), with `Q_j` the rows of the interface basis in
/// subdomain `j`'s window. Columns are returned.
pub fn compute_phi_psi(
    dd: &DDPencil,
    j: usize,
    sigma: f64,
    q: &InterfaceBasis,
) -> Result<(Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> {
    let sd = &dd.subdomains[j];
    let win = dd.meta.window(j);
    let e_sigma = sd.e_hat.add_scaled(&sd.m_e_hat, -sigma)?;
    let mut phi = Vec::with_capacity(q.mu());
    let mut psi = Vec::with_capacity(q.mu());
    for col in &q.q {
        let qj = &col[win.clone()];
        phi.push(e_sigma.spmv(qj)?);
        if !dd.m_e_is_zero {
            psi.push(sd.m_e_hat.spmv(qj)?);
        }
    }
    Ok((phi, (!dd.m_e_is_zero).then_some(psi)))
}

/// Column blocks `(B_σ⁻¹ M_B)^{t−1} B_σ⁻¹ X`, `t = 1..ψ`, block-major.
pub fn resolvent_blocks(
    fact: &EnvelopeLdl<f64>,
    m_b: &SparseSym,
    x: &[Vec<f64>],
    psi: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(psi * x.len());
    let mut cur: Vec<Vec<f64>> = x.par_iter().map(|c| fact.solve(c)).collect();
    for t in 0..psi {
        out.extend(cur.iter().cloned());
        if t + 1 < psi {
            cur = cur
                .par_iter()
                .map(|c| m_b.spmv(c).map(|mc| fact.solve(&mc)))
                .collect::<Result<_>>()?;
        }
    }
    Ok(out)
}

/// Interior data of one subdomain.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteriorSubspace {
    /// M_B-orthonormal eigenvectors nearest σ.
    pub v: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    /// Columns of `Σ_j` (`ψμ` of them).
    pub sigma_blocks: Vec<Vec<f64>>,
    /// Columns of `Γ_j`; empty when the mass coupling vanishes.
    pub gamma_blocks: Vec<Vec<f64>>,
}

/// Builds the interior subspace of every subdomain (concurrently).
pub fn build_interior(
    dd: &DDPencil,
    q: &InterfaceBasis,
    sigma: f64,
    nev_b: &[usize],
    psi: usize,
    seed: u64,
) -> Result<Vec<InteriorSubspace>> {
    if nev_b.len() != dd.p() {
        return Err(Error::InvalidArgument(format!(
            "{} nev_B values for {} subdomains",
            nev_b.len(),
            dd.p()
        )));
    }
    if psi == 0 {
        return Err(Error::InvalidArgument("ψ must be at least 1".into()));
    }
    (0..dd.p())
        .into_par_iter()
        .map(|j| {
            let sd: &SubdomainBlocks = &dd.subdomains[j];
            let nev = nev_b[j].min(sd.b.n());
            let (v, delta) =
                smallest_eigs_b(&sd.b, &sd.m_b, sigma, nev, seed.wrapping_add(j as u64))?;
            if sd.b.n() == 0 || q.mu() == 0 {
                return Ok(InteriorSubspace {
                    v,
                    delta,
                    ..Default::default()
                });
            }
            let fact = factor_shifted(&sd.b, &sd.m_b, sigma)?;
            let (phi, psi_cols) = compute_phi_psi(dd, j, sigma, q)?;
            let sigma_blocks = resolvent_blocks(&fact, &sd.m_b, &phi, psi)?;
            let gamma_blocks = match psi_cols {
                Some(pc) => resolvent_blocks(&fact, &sd.m_b, &pc, psi)?,
                None => Vec::new(),
            };
            Ok(InteriorSubspace {
                v,
                delta,
                sigma_blocks,
                gamma_blocks,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_fd_laplacian;

    #[test]
    fn diagonal_nearest_shift() {
        let b = SparseSym::diagonal(&[1.0, 2.0, 3.0]);
        let m = SparseSym::identity(3);
        let (v, d) = smallest_eigs_b(&b, &m, 0.0, 2, 0).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-14 && (d[1] - 2.0).abs() < 1e-14);
        assert!((v[0][0].abs() - 1.0).abs() < 1e-14);
        let (_, d) = smallest_eigs_b(&b, &m, 2.1, 1, 0).unwrap();
        assert!((d[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense() {
        // 40x39 keeps the spectrum simple; a single-vector Lanczos run only
        // resolves one copy of a repeated eigenvalue
        let b = gen_fd_laplacian(40, 39).unwrap();
        let m = SparseSym::identity(1560);
        let (v, d) = smallest_eigs_b(&b, &m, 0.0, 50, 3).unwrap();
        let (_, dref) = dense_eigs(&b, &m, 0.0, 50).unwrap();
        for (x, y) in d.iter().zip(&dref) {
            assert!((x - y).abs() <= 1e-10 * y.abs(), "{x} {y}");
        }
        for (k, x) in v.iter().enumerate() {
            let r = crate::result::residual(&b, &m, d[k], x).unwrap();
            assert!(r <= 1e-8 * (b.norm1() + m.norm1()));
            assert!((dot(x, x) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_recursion() {
        let b = SparseSym::diagonal(&[2.0, 2.0]);
        let m = SparseSym::identity(2);
        let fact = factor_shifted(&b, &m, 0.0).unwrap();
        let blocks = resolvent_blocks(&fact, &m, &[vec![1.0, 0.0]], 3).unwrap();
        let firsts: Vec<f64> = blocks.iter().map(|c| c[0]).collect();
        assert_eq!(firsts, vec![0.5, 0.25, 0.125]);
    }

    #[test]
    fn singular_shift_is_reported() {
        let b = SparseSym::diagonal(&[1.0, 2.0]);
        let err = factor_shifted(&b, &SparseSym::identity(2), 2.0).unwrap_err();
        assert!(err.to_string().contains("perturb"));
    }
}
