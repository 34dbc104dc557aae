//! Arrowhead blocks of the reordered pencil and their complex shifts.

use crate::error::{Error, Result};
use crate::partition::PartitionMeta;
use crate::sparse::{CsrMatrix, SparseSym};
use num_complex::Complex64;

/// Blocks owned by one subdomain. Column indices of the coupling blocks are
/// local to the subdomain's interface window.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainBlocks {
    pub b: SparseSym,
    pub m_b: SparseSym,
    /// `d_j × s_j` coupling of `A`.
    pub e_hat: CsrMatrix<f64>,
    /// `d_j × s_j` coupling of `M`.
    pub m_e_hat: CsrMatrix<f64>,
}

/// Pencil in arrowhead form.
#[derive(Debug, Clone, PartialEq)]
pub struct DDPencil {
    pub meta: PartitionMeta,
    pub subdomains: Vec<SubdomainBlocks>,
    pub c: SparseSym,
    pub m_c: SparseSym,
    pub m_e_is_zero: bool,
}

/// Complex shifted blocks `X − ζ M_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedBlocks {
    pub zeta: Complex64,
    pub b: Vec<CsrMatrix<Complex64>>,
    pub e_hat: Vec<CsrMatrix<Complex64>>,
    pub c: CsrMatrix<Complex64>,
}

pub fn split_blocks(a: &SparseSym, m: &SparseSym, meta: &PartitionMeta) -> Result<DDPencil> {
    let n = meta.n();
    if a.n() != n || m.n() != n {
        return Err(Error::Dimension(format!(
            "pencil of size {} / {} against a partition of {n} vertices",
            a.n(),
            m.n()
        )));
    }
    let dtot = meta.d_total();
    let ap = a.permute(&meta.perm, &meta.iperm);
    let mp = m.permute(&meta.perm, &meta.iperm);

    let mut subdomains = Vec::with_capacity(meta.p);
    for j in 0..meta.p {
        let rows: Vec<usize> = meta.interior_range(j).collect();
        let win = meta.window(j);
        let interior_map = |start: usize, len: usize| {
            let mut map = vec![None; n];
            for (k, slot) in map[start..start + len].iter_mut().enumerate() {
                *slot = Some(k);
            }
            map
        };
        let b_map = interior_map(rows.first().copied().unwrap_or(0), rows.len());
        let e_map = interior_map(dtot + win.start, win.len());
        for mat in [&ap, &mp] {
            for &r in &rows {
                let (cols, vals) = mat.csr().row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    if v != 0.0 && b_map[c].is_none() && e_map[c].is_none() {
                        return Err(Error::Structural(format!(
                            "interior row {} of subdomain {j} couples to column {c} outside its window",
                            meta.perm[r]
                        )));
                    }
                }
            }
        }
        let b = SparseSym::from_csr(ap.csr().submatrix(&rows, &b_map, rows.len()))?;
        let m_b = SparseSym::from_csr(mp.csr().submatrix(&rows, &b_map, rows.len()))?;
        let e_hat = ap.csr().submatrix(&rows, &e_map, win.len());
        let m_e_hat = mp.csr().submatrix(&rows, &e_map, win.len());
        subdomains.push(SubdomainBlocks {
            b,
            m_b,
            e_hat,
            m_e_hat,
        });
    }
    let s = meta.s_total();
    let iface: Vec<usize> = (dtot..n).collect();
    let mut c_map = vec![None; n];
    for (k, slot) in c_map[dtot..].iter_mut().enumerate() {
        *slot = Some(k);
    }
    let c = SparseSym::from_csr(ap.csr().submatrix(&iface, &c_map, s))?;
    let m_c = SparseSym::from_csr(mp.csr().submatrix(&iface, &c_map, s))?;
    let m_e_is_zero = subdomains.iter().all(|sd| !sd.m_e_hat.has_nonzero());
    Ok(DDPencil {
        meta: meta.clone(),
        subdomains,
        c,
        m_c,
        m_e_is_zero,
    })
}

impl DDPencil {
    pub fn n(&self) -> usize {
        self.meta.n()
    }

    pub fn p(&self) -> usize {
        self.meta.p
    }

    pub fn s(&self) -> usize {
        self.meta.s_total()
    }

    /// Reassembles the permuted `A` (`which_m = false`) or `M` from the blocks.
    pub fn assemble(&self, which_m: bool) -> SparseSym {
        let n = self.n();
        let dtot = self.meta.d_total();
        let mut trip = Vec::new();
        for (j, sd) in self.subdomains.iter().enumerate() {
            let r0 = self.meta.interior_start(j);
            let c0 = dtot + self.meta.offsets[j];
            let (blk, cpl) = if which_m {
                (&sd.m_b, &sd.m_e_hat)
            } else {
                (&sd.b, &sd.e_hat)
            };
            trip.extend(blk.csr().triplets().map(|(i, k, v)| (r0 + i, r0 + k, v)));
            for (i, k, v) in cpl.triplets() {
                trip.push((r0 + i, c0 + k, v));
                trip.push((c0 + k, r0 + i, v));
            }
        }
        let cc = if which_m { &self.m_c } else { &self.c };
        trip.extend(cc.csr().triplets().map(|(i, k, v)| (dtot + i, dtot + k, v)));
        SparseSym::from_triplets(n, trip).expect("blocks reassemble to a symmetric matrix")
    }

    /// `B_ζ`, `Ê_ζ`, `C_ζ` for a complex shift.
    pub fn shifted_blocks(&self, zeta: Complex64) -> ShiftedBlocks {
        let shift = |x: &CsrMatrix<f64>, mx: &CsrMatrix<f64>| {
            x.to_complex()
                .add_scaled(&mx.to_complex(), -zeta)
                .expect("blocks share shapes")
        };
        ShiftedBlocks {
            zeta,
            b: self
                .subdomains
                .iter()
                .map(|sd| shift(sd.b.csr(), sd.m_b.csr()))
                .collect(),
            e_hat: self
                .subdomains
                .iter()
                .map(|sd| shift(&sd.e_hat, &sd.m_e_hat))
                .collect(),
            c: shift(self.c.csr(), self.m_c.csr()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_adjacency;
    use crate::mesh::random_grid_pencil;
    use crate::partition::{classify_and_permute, partition_graph};

    fn path_pencil() -> (SparseSym, SparseSym) {
        let a = SparseSym::from_triangle(
            4,
            [
                (0, 0, 2.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
                (3, 2, -1.0),
                (3, 3, 2.0),
            ],
        )
        .unwrap();
        (a, SparseSym::identity(4))
    }

    fn dd_for(a: &SparseSym, m: &SparseSym, p: usize, seed: u64) -> DDPencil {
        let g = build_adjacency(a, m).unwrap();
        let labels = partition_graph(&g, p, seed).unwrap();
        let meta = classify_and_permute(&g, &labels, p).unwrap();
        split_blocks(a, m, &meta).unwrap()
    }

    #[test]
    fn path_split_two_two() {
        let (a, m) = path_pencil();
        let g = build_adjacency(&a, &m).unwrap();
        let meta = classify_and_permute(&g, &[0, 0, 1, 1], 2).unwrap();
        let dd = split_blocks(&a, &m, &meta).unwrap();
        assert_eq!(dd.subdomains[0].b.n(), 1);
        assert_eq!(dd.subdomains[1].b.n(), 1);
        assert_eq!(dd.c.n(), 2);
        assert_eq!(dd.c.get(0, 1), -1.0);
        assert!(dd.m_e_is_zero);
        assert!(dd.m_c.is_identity());
    }

    #[test]
    fn single_subdomain_has_empty_interface() {
        let (a, m) = path_pencil();
        let dd = dd_for(&a, &m, 1, 0);
        assert_eq!(dd.c.n(), 0);
        assert_eq!(dd.subdomains[0].b, a);
    }

    #[test]
    fn exact_reassembly() {
        let (a, m) = random_grid_pencil(7, 6, 3).unwrap();
        let dd = dd_for(&a, &m, 3, 9);
        assert!(!dd.m_e_is_zero);
        assert_eq!(dd.assemble(false), a.permute(&dd.meta.perm, &dd.meta.iperm));
        assert_eq!(dd.assemble(true), m.permute(&dd.meta.perm, &dd.meta.iperm));
    }

    #[test]
    fn window_violation_detected() {
        let (a, m) = path_pencil();
        let g = build_adjacency(&a, &m).unwrap();
        let meta = classify_and_permute(&g, &[0, 0, 1, 1], 2).unwrap();
        let wide = SparseSym::from_triangle(
            4,
            [
                (0, 0, 1.0),
                (3, 0, 1.0),
                (1, 1, 1.0),
                (2, 2, 1.0),
                (3, 3, 1.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            split_blocks(&wide, &m, &meta),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn shifts() {
        let b = SparseSym::diagonal(&[4.0]);
        let meta = classify_and_permute(&crate::graph::Graph::from_edges(1, []), &[0], 1).unwrap();
        let dd = split_blocks(&b, &SparseSym::identity(1), &meta).unwrap();
        let sb = dd.shifted_blocks(Complex64::new(0.0, 1.0));
        assert_eq!(sb.b[0].get(0, 0), Complex64::new(4.0, -1.0));
        let z = dd.shifted_blocks(Complex64::new(0.0, 0.0));
        assert_eq!(z.b[0], b.csr().to_complex());

        let (a, m) = random_grid_pencil(4, 4, 1).unwrap();
        let dd = dd_for(&a, &m, 2, 0);
        let zeta = Complex64::new(0.3, 0.7);
        let s1 = dd.shifted_blocks(zeta);
        let s2 = dd.shifted_blocks(zeta.conj());
        for (x, y) in s1.b.iter().zip(&s2.b) {
            assert_eq!(x.map(|v| v.conj()), *y);
        }
        assert_eq!(s1.c.map(|v| v.conj()), s2.c);
    }
}
