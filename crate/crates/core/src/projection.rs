//! Rayleigh-Ritz extraction from an explicit basis.

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use faer::{Mat, Side};
use rayon::prelude::*;

/// Relative norm below which a column is treated as dependent on its
/// predecessors during orthonormalization.
pub const DROP_TOL: f64 = 1e-10;

/// Orthonormalizes columns in place by modified Gram-Schmidt applied twice,
/// dropping numerically dependent columns. Returns the number dropped.
pub fn orthonormalize(cols: &mut Vec<Vec<f64>>) -> usize {
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    let mut dropped = 0;
    for mut v in cols.drain(..) {
        let before = crate::sparse::norm2(&v);
        if before == 0.0 {
            dropped += 1;
            continue;
        }
        for _ in 0..2 {
            for q in &kept {
                let c = crate::sparse::dot(q, &v);
                crate::sparse::axpy(-c, q, &mut v);
            }
        }
        let after = crate::sparse::norm2(&v);
        if after <= DROP_TOL * before {
            dropped += 1;
            continue;
        }
        v.iter_mut().for_each(|x| *x /= after);
        kept.push(v);
    }
    *cols = kept;
    dropped
}

pub(crate) fn columns_to_mat(cols: &[Vec<f64>], n: usize) -> Mat<f64> {
    Mat::from_fn(n, cols.len(), |i, j| cols[j][i])
}

fn apply_columns(a: &SparseSym, cols: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    cols.par_iter().map(|c| a.spmv(c)).collect()
}

/// Dense symmetric-definite eigensolve `K g = λ N g` via Cholesky of `N`.
/// Eigenvalues ascending, eigenvectors `N`-orthonormal (columns).
pub fn dense_sym_gen_eig(k: &Mat<f64>, nmat: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let dim = k.nrows();
    if dim == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let llt = nmat
        .llt(Side::Lower)
        .map_err(|_| Error::NotPositiveDefinite)?;
    let l = llt.L();
    // C = L⁻¹ K L⁻ᵀ
    let mut x = k.to_owned();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let c = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Dense(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..dim).map(|i| evd.S().column_vector()[i]).collect();
    let mut g = evd.U().to_owned();
    l.transpose().solve_upper_triangular_in_place(g.as_mut());
    Ok((vals, g))
}

/// Ritz pairs of `(A, M)` from the span of `cols`.
pub struct RitzOutput {
    /// Every Ritz value of the projected pencil, ascending.
    pub all_values: Vec<f64>,
    /// Ritz values passing the selection, ascending.
    pub values: Vec<f64>,
    /// Ritz vectors (length `n` each), matching `values`.
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    pub dropped: usize,
}

/// Orthonormalizes `cols` and solves the projected pencil. Only Ritz vectors
/// selected by `keep` (applied to the Ritz value) are formed.
pub fn rayleigh_ritz(
    a: &SparseSym,
    m: &SparseSym,
    mut cols: Vec<Vec<f64>>,
    keep: impl Fn(f64) -> bool,
) -> Result<RitzOutput> {
    let n = a.n();
    if cols.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension(
            "basis column length differs from n".into(),
        ));
    }
    let dropped = orthonormalize(&mut cols);
    let dim = cols.len();
    if dim == 0 {
        return Ok(RitzOutput {
            all_values: Vec::new(),
            values: Vec::new(),
            vectors: Vec::new(),
            dim,
            dropped,
        });
    }
    let z = columns_to_mat(&cols, n);
    let az = columns_to_mat(&apply_columns(a, &cols)?, n);
    let mz = columns_to_mat(&apply_columns(m, &cols)?, n);
    let ka = z.transpose() * &az;
    let km = z.transpose() * &mz;
    let ka = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (ka[(i, j)] + ka[(j, i)]));
    let km = Mat::<f64>::from_fn(dim, dim, |i, j| 0.5 * (km[(i, j)] + km[(j, i)]));
    let (vals, g) = dense_sym_gen_eig(&ka, &km)?;
    let sel: Vec<usize> = (0..dim).filter(|&k| keep(vals[k])).collect();
    let gsel = Mat::<f64>::from_fn(dim, sel.len(), |i, j| g[(i, sel[j])]);
    let x = &z * &gsel;
    let vectors = (0..sel.len())
        .map(|j| (0..n).map(|i| x[(i, j)]).collect())
        .collect();
    Ok(RitzOutput {
        values: sel.iter().map(|&k| vals[k]).collect(),
        all_values: vals,
        vectors,
        dim,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::FdMesh;

    #[test]
    fn drops_dependent_columns() {
        let mut cols = vec![
            vec![1.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0; 3],
        ];
        assert_eq!(orthonormalize(&mut cols), 2);
        assert_eq!(cols.len(), 2);
        assert!(crate::sparse::dot(&cols[0], &cols[1]).abs() < 1e-15);
    }

    #[test]
    fn exact_subspace_gives_exact_values() {
        let mesh = FdMesh::new(6, 5);
        let a = mesh.matrix().unwrap();
        let m = SparseSym::identity(30);
        let modes = mesh.lowest(4);
        let cols = modes.iter().map(|md| mesh.mode_vector(md)).collect();
        let r = rayleigh_ritz(&a, &m, cols, |_| true).unwrap();
        for (v, md) in r.values.iter().zip(&modes) {
            assert!((v - md.value).abs() < 1e-12);
        }
    }

    #[test]
    fn generalized_dense() {
        let k = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let nm = Mat::<f64>::from_fn(2, 2, |i, j| if i == j { [1.0, 4.0][i] } else { 0.0 });
        let (vals, _) = dense_sym_gen_eig(&k, &nm).unwrap();
        assert!((vals[0] - 0.25).abs() < 1e-15 && (vals[1] - 1.0).abs() < 1e-15);
    }
}
