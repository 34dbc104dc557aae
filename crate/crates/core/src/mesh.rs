//! Test-problem generators: the 5-point finite-difference Laplacian with its
//! closed-form spectrum, and seeded random pencils on grid patterns.

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Unscaled 5-point Laplacian on an `nx` by `ny` grid with Dirichlet
/// boundaries. Unknown `(i, j)` (zero based) has index `i + nx * j`.
pub fn gen_fd_laplacian(nx: usize, ny: usize) -> Result<SparseSym> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(
            "grid dimensions must be positive".into(),
        ));
    }
    let n = nx * ny;
    let mut trip = Vec::with_capacity(5 * n);
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            if j > 0 {
                trip.push((k, k - nx, -1.0));
            }
            if i > 0 {
                trip.push((k, k - 1, -1.0));
            }
            trip.push((k, k, 4.0));
            if i + 1 < nx {
                trip.push((k, k + 1, -1.0));
            }
            if j + 1 < ny {
                trip.push((k, k + nx, -1.0));
            }
        }
    }
    SparseSym::from_triplets(n, trip)
}

/// One eigenpair label of the grid Laplacian: mode numbers `(a, b)`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdMode {
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

/// Closed-form spectral data of [`gen_fd_laplacian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FdMesh {
    pub nx: usize,
    pub ny: usize,
}

impl FdMesh {
    pub fn new(nx: usize, ny: usize) -> Self {
        Self { nx, ny }
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    pub fn matrix(&self) -> Result<SparseSym> {
        gen_fd_laplacian(self.nx, self.ny)
    }

    pub fn eigenvalue(&self, a: usize, b: usize) -> f64 {
        4.0 - 2.0 * (a as f64 * PI / (self.nx as f64 + 1.0)).cos()
            - 2.0 * (b as f64 * PI / (self.ny as f64 + 1.0)).cos()
    }

    /// All modes sorted by eigenvalue (ties broken by mode numbers).
    pub fn modes(&self) -> Vec<FdMode> {
        let mut modes: Vec<FdMode> = (1..=self.nx)
            .flat_map(|a| (1..=self.ny).map(move |b| (a, b)))
            .map(|(a, b)| FdMode {
                a,
                b,
                value: self.eigenvalue(a, b),
            })
            .collect();
        modes.sort_by(|x, y| {
            x.value
                .total_cmp(&y.value)
                .then((x.a, x.b).cmp(&(y.a, y.b)))
        });
        modes
    }

    pub fn lowest(&self, k: usize) -> Vec<FdMode> {
        let mut m = self.modes();
        m.truncate(k);
        m
    }

    /// Unit-norm eigenvector of a mode, in the generator's index order.
    pub fn mode_vector(&self, mode: &FdMode) -> Vec<f64> {
        let sa = (mode.a as f64) * PI / (self.nx as f64 + 1.0);
        let sb = (mode.b as f64) * PI / (self.ny as f64 + 1.0);
        let mut v = Vec::with_capacity(self.n());
        for j in 0..self.ny {
            for i in 0..self.nx {
                v.push(((i + 1) as f64 * sa).sin() * ((j + 1) as f64 * sb).sin());
            }
        }
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        v
    }

    /// Interval whose interior holds exactly the `k` lowest eigenvalues:
    /// `[0, (λ_k + λ_{k+1}) / 2]`. The Laplacian is positive definite, so the
    /// left end mirrors the problem tables that start intervals at zero.
    pub fn interval_for_lowest(&self, k: usize) -> (f64, f64) {
        let modes = self.modes();
        assert!(k >= 1 && k <= modes.len());
        let hi = if k < modes.len() {
            0.5 * (modes[k - 1].value + modes[k].value)
        } else {
            modes[k - 1].value * (1.0 + 1e-3)
        };
        (0.0, hi)
    }
}

/// Seeded random pencil `(A, M)` on the 5-point grid pattern plus one diagonal
/// neighbour, `A` symmetric indefinite-ish and `M` SPD by diagonal dominance.
/// Off-diagonal mass entries make the interface coupling of `M` nonzero.
pub fn random_grid_pencil(nx: usize, ny: usize, seed: u64) -> Result<(SparseSym, SparseSym)> {
    let n = nx * ny;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a_tri = Vec::new();
    let mut m_tri = Vec::new();
    let mut m_rowsum = vec![0.0f64; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            let mut nbrs = Vec::with_capacity(3);
            if i + 1 < nx {
                nbrs.push(k + 1);
            }
            if j + 1 < ny {
                nbrs.push(k + nx);
            }
            if i + 1 < nx && j + 1 < ny {
                nbrs.push(k + nx + 1);
            }
            for l in nbrs {
                let av: f64 = rng.random_range(-1.0..1.0);
                a_tri.push((l, k, av));
                let mv: f64 = rng.random_range(-0.3..0.3);
                m_tri.push((l, k, mv));
                m_rowsum[k] += mv.abs();
                m_rowsum[l] += mv.abs();
            }
        }
    }
    for (k, rs) in m_rowsum.iter().enumerate() {
        let ad: f64 = rng.random_range(-2.0..6.0);
        a_tri.push((k, k, ad));
        let md: f64 = rng.random_range(0.5..1.5);
        m_tri.push((k, k, rs + md));
    }
    Ok((
        SparseSym::from_triangle(n, a_tri)?,
        SparseSym::from_triangle(n, m_tri)?,
    ))
}
