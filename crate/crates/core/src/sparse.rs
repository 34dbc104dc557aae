//! Compressed sparse row storage and the symmetric matrix type that carries
//! `A`, `M` and every block derived from them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use faer::Mat;
use num_complex::Complex64;

/// Default ceiling on the dimension of dense copies made for oracle checks.
pub const DEFAULT_DENSE_CAP: usize = 5_000;

/// Row-compressed sparse matrix. Column indices are strictly increasing
/// within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed;
    /// explicit zeros are kept so that structural patterns survive.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut trip: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(i, j, _) in &trip {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
        }
        trip.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut values: Vec<T> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in trip {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            last = Some((i, j));
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Assembles from raw CSR arrays, checking the ordering invariant.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || col_idx.len() != values.len() {
            return Err(Error::Dimension("inconsistent CSR array lengths".into()));
        }
        if row_ptr[nrows] != col_idx.len() {
            return Err(Error::Dimension(
                "row pointer does not cover all entries".into(),
            ));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Structural(format!(
                    "row pointer decreases at row {i}"
                )));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Structural(format!(
                    "row {i} columns not strictly increasing"
                )));
            }
            if cols.iter().any(|&j| j >= ncols) {
                return Err(Error::Dimension(format!(
                    "row {i} has a column out of range"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    /// Entry lookup by binary search; zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `true` when at least one stored value is nonzero.
    pub fn has_nonzero(&self) -> bool {
        self.values.iter().any(|v| !v.is_zero())
    }

    pub fn spmv(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.ncols {
            return Err(Error::Dimension(format!(
                "spmv: vector of length {} against {} columns",
                x.len(),
                self.ncols
            )));
        }
        let mut y = vec![T::zero(); self.nrows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = self * x` without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> CsrMatrix<U> {
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Entrywise `self + s * other` over the union pattern.
    pub fn add_scaled(&self, other: &CsrMatrix<T>, s: T) -> Result<CsrMatrix<T>> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("add_scaled: shapes differ".into()));
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let ja = ca.get(p).copied().unwrap_or(usize::MAX);
                let jb = cb.get(q).copied().unwrap_or(usize::MAX);
                if ja < jb {
                    col_idx.push(ja);
                    values.push(va[p]);
                    p += 1;
                } else if jb < ja {
                    col_idx.push(jb);
                    values.push(s * vb[q]);
                    q += 1;
                } else {
                    col_idx.push(ja);
                    values.push(va[p] + s * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Structural and numerical symmetry check (exact equality).
    pub fn is_symmetric(&self) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        self.triplets().all(|(i, j, v)| {
            let (cols, vals) = self.row(j);
            matches!(cols.binary_search(&i), Ok(k) if vals[k] == v)
        })
    }

    /// Rows `rows` and columns `cols` (both given as old indices) extracted
    /// into a new matrix; `col_map[old] = Some(new)` selects the columns.
    pub fn submatrix(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, T)> = Vec::new();
        for &r in rows {
            scratch.clear();
            let (cols, vals) = self.row(r);
            for (&j, &v) in cols.iter().zip(vals) {
                if let Some(nj) = col_map[j] {
                    scratch.push((nj, v));
                }
            }
            scratch.sort_by_key(|e| e.0);
            for &(j, v) in &scratch {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl<T: Scalar + faer::traits::ComplexField> CsrMatrix<T> {
    pub fn to_dense(&self) -> Mat<T> {
        let mut d = Mat::<T>::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }
}

impl CsrMatrix<f64> {
    pub fn to_complex(&self) -> CsrMatrix<Complex64> {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

/// Real symmetric sparse matrix with both triangles stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    csr: CsrMatrix<f64>,
}

impl SparseSym {
    pub fn from_csr(csr: CsrMatrix<f64>) -> Result<Self> {
        if csr.nrows() != csr.ncols() {
            return Err(Error::Unsupported(format!(
                "matrix is {}x{}, not square",
                csr.nrows(),
                csr.ncols()
            )));
        }
        if !csr.is_symmetric() {
            return Err(Error::Unsupported("matrix is not symmetric".into()));
        }
        Ok(Self { csr })
    }

    /// Builds from triplets that list the full pattern (both triangles).
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        Self::from_csr(CsrMatrix::from_triplets(n, n, triplets)?)
    }

    /// Builds from lower- (or upper-) triangle triplets, mirroring off-diagonals.
    pub fn from_triangle(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let full = triplets.into_iter().flat_map(|(i, j, v)| {
            let mirror = (i != j).then_some((j, i, v));
            std::iter::once((i, j, v)).chain(mirror)
        });
        Self::from_triplets(n, full)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            csr: CsrMatrix::identity(n),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            csr: CsrMatrix::from_raw(n, n, (0..=n).collect(), (0..n).collect(), diag.to_vec())
                .expect("diagonal pattern is valid"),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.csr.nrows()
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.csr.nnz()
    }

    #[inline]
    pub fn csr(&self) -> &CsrMatrix<f64> {
        &self.csr
    }

    pub fn into_csr(self) -> CsrMatrix<f64> {
        self.csr
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.csr.get(i, j)
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.csr.spmv(x)
    }

    pub fn is_identity(&self) -> bool {
        self.nnz() == self.n() && self.csr.triplets().all(|(i, j, v)| i == j && v == 1.0)
    }

    /// Symmetric permutation `P A Pᵀ` with `perm[new] = old`.
    pub fn permute(&self, perm: &[usize], iperm: &[usize]) -> SparseSym {
        let trip = self.csr.triplets().map(|(i, j, v)| (iperm[i], iperm[j], v));
        let csr =
            CsrMatrix::from_triplets(self.n(), self.n(), trip).expect("permutation keeps shape");
        debug_assert_eq!(perm.len(), self.n());
        SparseSym { csr }
    }

    /// Dense copy, refused above `cap`.
    pub fn to_dense(&self, cap: usize) -> Result<Mat<f64>> {
        if self.n() > cap {
            return Err(Error::DenseCap { n: self.n(), cap });
        }
        Ok(self.csr.to_dense())
    }

    /// Re-sparsifies a dense symmetric matrix, keeping exact nonzeros.
    pub fn from_dense(d: &Mat<f64>) -> Result<Self> {
        let n = d.nrows();
        let trip = (0..n)
            .flat_map(|i| (0..d.ncols()).map(move |j| (i, j)))
            .filter_map(|(i, j)| {
                let v = d[(i, j)];
                (v != 0.0).then_some((i, j, v))
            });
        Self::from_csr(CsrMatrix::from_triplets(n, d.ncols(), trip)?)
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.csr.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Induced 1-norm (max column sum, equal to max row sum by symmetry).
    pub fn norm1(&self) -> f64 {
        (0..self.n())
            .map(|i| self.csr.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Dense copies of a pencil for oracle computations.
#[derive(Debug, Clone)]
pub struct DensePencilView {
    pub a_dense: Mat<f64>,
    pub m_dense: Mat<f64>,
}

impl DensePencilView {
    pub fn new(a: &SparseSym, m: &SparseSym, cap: usize) -> Result<Self> {
        if a.n() != m.n() {
            return Err(Error::Dimension("pencil matrices differ in size".into()));
        }
        Ok(Self {
            a_dense: a.to_dense(cap)?,
            m_dense: m.to_dense(cap)?,
        })
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::gen_fd_laplacian;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let m =
            CsrMatrix::from_triplets(2, 3, [(1, 2, 1.0), (0, 1, 2.0), (1, 2, 3.0), (1, 0, 1.0)])
                .unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 4.0);
        assert_eq!(m.row(1).0, &[0, 2]);
    }

    #[test]
    fn identity_spmv_is_identity() {
        let i = SparseSym::identity(4);
        let x = vec![1.0, -2.0, 3.5, 0.25];
        assert_eq!(i.spmv(&x).unwrap(), x);
    }

    #[test]
    fn basis_vector_extracts_column() {
        let a = gen_fd_laplacian(3, 3).unwrap();
        let d = a.to_dense(DEFAULT_DENSE_CAP).unwrap();
        for j in 0..9 {
            let mut e = vec![0.0; 9];
            e[j] = 1.0;
            let col = a.spmv(&e).unwrap();
            for i in 0..9 {
                assert_eq!(col[i], d[(i, j)]);
            }
        }
    }

    #[test]
    fn stencil_row_sums() {
        // corner rows: 4 - 2 = 2, edge rows: 4 - 3 = 1, center row: 4 - 4 = 0
        let a = gen_fd_laplacian(3, 3).unwrap();
        let y = a.spmv(&[1.0; 9]).unwrap();
        assert_eq!(y, vec![2.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 2.0]);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let a = SparseSym::identity(3);
        assert!(matches!(a.spmv(&[1.0, 2.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn dense_cap_guard() {
        let a = SparseSym::identity(6_000);
        assert!(matches!(
            a.to_dense(5_000),
            Err(Error::DenseCap { n: 6000, cap: 5000 })
        ));
    }

    #[test]
    fn dense_round_trip() {
        let a = SparseSym::from_triangle(2, [(0, 0, 4.0), (1, 0, -1.0), (1, 1, 4.0)]).unwrap();
        let d = a.to_dense(10).unwrap();
        assert_eq!(d[(0, 1)], -1.0);
        assert_eq!(d[(1, 1)], 4.0);
        let back = SparseSym::from_dense(&d).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_unsymmetric() {
        let csr = CsrMatrix::from_triplets(2, 2, [(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert!(SparseSym::from_csr(csr).is_err());
    }

    #[test]
    fn transpose_and_add_scaled() {
        let a = CsrMatrix::from_triplets(2, 3, [(0, 0, 1.0), (1, 2, 2.0)]).unwrap();
        let t = a.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.get(2, 1), 2.0);
        let b = CsrMatrix::from_triplets(2, 3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let c = a.add_scaled(&b, -2.0).unwrap();
        assert_eq!(c.get(0, 1), -2.0);
        assert_eq!(c.get(1, 2), 0.0);
        assert_eq!(c.nnz(), 3);
    }
}
