//! Envelope (skyline) `L D Lᵀ` factorization of symmetric matrices, real or
//! complex symmetric, under a reverse Cuthill-McKee ordering.
//!
//! No pivoting is performed. This is safe for the matrices factored here:
//! `A − ζM` with `Im ζ ≠ 0` and `M` SPD never produces a zero pivot in exact
//! arithmetic, and real shifted blocks are rejected when a pivot collapses.

use crate::error::{Error, Result};
use crate::graph::{reverse_cuthill_mckee, Graph};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

/// Pivots smaller than this multiple of the largest entry are treated as zero.
pub const PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct EnvelopeLdl<T> {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    iperm: Vec<usize>,
    /// First stored column of each row of `L` (new ordering).
    first: Vec<usize>,
    /// `l[ptr[i]..ptr[i + 1]]` holds `L[i, first[i]..i]`.
    ptr: Vec<usize>,
    l: Vec<T>,
    d: Vec<T>,
    shift: Complex64,
}

/// Complex symmetric factorization handle used for shifted pencils.
pub type ComplexFactorization = EnvelopeLdl<Complex64>;

/// Factors a complex symmetric matrix; `shift` is recorded for diagnostics.
pub fn factor_complex(k: &CsrMatrix<Complex64>, shift: Complex64) -> Result<ComplexFactorization> {
    EnvelopeLdl::factor(k, shift)
}

#[inline]
fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    let mut acc = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        acc += a * b;
    }
    acc
}

impl<T: Scalar> EnvelopeLdl<T> {
    pub fn factor(a: &CsrMatrix<T>, shift: Complex64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "cannot factor a {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let perm = reverse_cuthill_mckee(&Graph::from_pattern(a));
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first = vec![0usize; n];
        for i in 0..n {
            let cols = a.row(perm[i]).0;
            first[i] = cols
                .iter()
                .map(|&c| iperm[c])
                .filter(|&c| c <= i)
                .min()
                .unwrap_or(i)
                .min(i);
        }
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for i in 0..n {
            ptr.push(ptr[i] + (i - first[i]));
        }
        let mut l = vec![T::zero(); ptr[n]];
        let mut d = vec![T::zero(); n];
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.modulus()));

        for i in 0..n {
            let fi = first[i];
            let (cols, vals) = a.row(perm[i]);
            let mut diag = T::zero();
            {
                let row = &mut l[ptr[i]..ptr[i + 1]];
                for (&c, &v) in cols.iter().zip(vals) {
                    let c = iperm[c];
                    if c < i {
                        row[c - fi] += v;
                    } else if c == i {
                        diag += v;
                    }
                }
            }
            // Row i of L: first the unscaled entries w_j = l_ij d_j.
            let (done, cur) = l.split_at_mut(ptr[i]);
            let row = &mut cur[..i - fi];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                if k0 < j {
                    let lj = &done[ptr[j] + (k0 - fj)..ptr[j] + (j - fj)];
                    let s = dot(&row[k0 - fi..j - fi], lj);
                    row[j - fi] -= s;
                }
            }
            for j in fi..i {
                let w = row[j - fi];
                let lij = w / d[j];
                diag -= w * lij;
                row[j - fi] = lij;
            }
            if !(diag.modulus() > PIVOT_TOL * scale) || !diag.modulus().is_finite() {
                return Err(Error::SingularPivot {
                    shift,
                    pivot: perm[i],
                    magnitude: diag.modulus(),
                });
            }
            d[i] = diag;
        }
        Ok(Self {
            n,
            perm,
            iperm,
            first,
            ptr,
            l,
            d,
            shift,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    /// Stored entries of `L` below the diagonal.
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    pub fn diag(&self) -> &[T] {
        &self.d
    }

    /// `y ← L⁻¹ y` in the factor's ordering, skipping leading zeros.
    fn forward(&self, y: &mut [T]) {
        let start = y.iter().position(|v| !v.is_zero()).unwrap_or(self.n);
        for i in start..self.n {
            let fi = self.first[i].max(start);
            if fi < i {
                let row = &self.l[self.ptr[i] + (fi - self.first[i])..self.ptr[i + 1]];
                let s = dot(row, &y[fi..i]);
                y[i] -= s;
            }
        }
    }

    /// `y ← L⁻ᵀ y` in the factor's ordering (column sweep).
    fn backward(&self, y: &mut [T]) {
        for i in (0..self.n).rev() {
            let yi = y[i];
            if yi.is_zero() {
                continue;
            }
            let fi = self.first[i];
            let row = &self.l[self.ptr[i]..self.ptr[i + 1]];
            for (yk, &lik) in y[fi..i].iter_mut().zip(row) {
                *yk -= lik * yi;
            }
        }
    }

    /// Solves `K x = b` in place (original ordering).
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n, "right-hand side length");
        let mut y: Vec<T> = self.perm.iter().map(|&o| b[o]).collect();
        self.forward(&mut y);
        for (yi, &di) in y.iter_mut().zip(&self.d) {
            *yi = *yi / di;
        }
        self.backward(&mut y);
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves for several right-hand sides (one per entry), in parallel.
    pub fn solve_many(&self, cols: &mut [Vec<T>]) {
        cols.par_iter_mut().for_each(|c| self.solve_in_place(c));
    }

    /// Half solve `L⁻¹ P b` for a sparse right-hand side given as
    /// `(original index, value)` pairs; the result is in the factor's ordering.
    /// With `K = Pᵀ L D Lᵀ P`, `bᵀ K⁻¹ c = (L⁻¹Pb)ᵀ D⁻¹ (L⁻¹Pc)`.
    pub fn forward_sparse(&self, entries: &[(usize, T)]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for &(i, v) in entries {
            y[self.iperm[i]] += v;
        }
        self.forward(&mut y);
        y
    }
}
