//! End-to-end domain-decomposition eigensolver: partition, interface basis
//! from the filtered Schur complements, interior subspaces, Rayleigh-Ritz.

use crate::blocks::{split_blocks, DDPencil};
use crate::error::{Error, Phase, PhaseExt, Result};
use crate::filter::{QuadratureRule, RationalFilter};
use crate::graph::build_adjacency;
use crate::interface::{interface_lanczos, InterfaceBasis};
use crate::interior::{build_interior, InteriorSubspace};
use crate::krylov::IterConfig;
use crate::partition::{classify_and_permute, partition_graph, PartitionMeta};
use crate::projection::rayleigh_ritz;
use crate::result::{EigResult, SolveInfo};
use crate::schur::SchurSet;
use crate::sparse::SparseSym;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfDdesConfig {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub p: usize,
    pub nc: usize,
    pub rule: QuadratureRule,
    /// Interior eigenvectors per subdomain.
    pub nev_b: usize,
    /// Per-subdomain override of `nev_b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nev_b_per_subdomain: Option<Vec<usize>>,
    pub psi: usize,
    pub tol: f64,
    pub check_every: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for RfDdesConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            sigma: 0.0,
            p: 2,
            nc: 2,
            rule: QuadratureRule::Midpoint,
            nev_b: 100,
            nev_b_per_subdomain: None,
            psi: 2,
            tol: 1e-6,
            check_every: 10,
            max_iter: 1000,
            seed: 0,
        }
    }
}

impl RfDdesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha < self.beta) {
            return Err(Error::InvalidArgument(format!(
                "empty interval [{}, {}]",
                self.alpha, self.beta
            )));
        }
        if self.p == 0 || self.nc == 0 || self.psi == 0 {
            return Err(Error::InvalidArgument(
                "p, N_c and ψ must be at least 1".into(),
            ));
        }
        if let Some(v) = &self.nev_b_per_subdomain {
            if v.len() != self.p {
                return Err(Error::InvalidArgument(format!(
                    "{} nev_B overrides for p={}",
                    v.len(),
                    self.p
                )));
            }
        }
        self.iter_config().validate()
    }

    pub fn iter_config(&self) -> IterConfig {
        IterConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            check_every: self.check_every,
            seed: self.seed,
        }
    }

    pub fn filter(&self) -> Result<RationalFilter> {
        RationalFilter::new(self.alpha, self.beta, self.nc, self.rule)
    }

    fn nev_b_list(&self) -> Vec<usize> {
        self.nev_b_per_subdomain
            .clone()
            .unwrap_or_else(|| vec![self.nev_b; self.p])
    }
}

/// Partitions the pencil and splits it into arrowhead blocks.
pub fn prepare(a: &SparseSym, m: &SparseSym, p: usize, seed: u64) -> Result<DDPencil> {
    let meta = partition(a, m, p, seed).phase(Phase::Partition)?;
    split_blocks(a, m, &meta).phase(Phase::Blocks)
}

pub fn partition(a: &SparseSym, m: &SparseSym, p: usize, seed: u64) -> Result<PartitionMeta> {
    let g = build_adjacency(a, m)?;
    let labels = partition_graph(&g, p, seed)?;
    classify_and_permute(&g, &labels, p)
}

/// Columns of the Rayleigh-Ritz basis in the permuted ordering:
/// `[V | Σ-block | Γ-block]` where interior rows carry `V_j`, `−Σ_j`, `Γ_j`
/// and interface rows carry `0`, `[Q, 0]`, `0`. The `Γ` block is omitted
/// when the mass coupling vanishes.
pub fn assemble_z(
    meta: &PartitionMeta,
    interior: &[InteriorSubspace],
    q: &InterfaceBasis,
    psi: usize,
    m_e_is_zero: bool,
) -> Result<Vec<Vec<f64>>> {
    let n = meta.n();
    let dtot = meta.d_total();
    let mu = q.mu();
    if interior.len() != meta.p {
        return Err(Error::Dimension(format!(
            "{} interior subspaces for p={}",
            interior.len(),
            meta.p
        )));
    }
    let mut cols = Vec::new();
    for (j, sub) in interior.iter().enumerate() {
        let r = meta.interior_range(j);
        for v in &sub.v {
            if v.len() != r.len() {
                return Err(Error::Dimension(format!(
                    "interior vector of length {} in subdomain {j}",
                    v.len()
                )));
            }
            let mut z = vec![0.0; n];
            z[r.clone()].copy_from_slice(v);
            cols.push(z);
        }
    }
    let blocks = if m_e_is_zero { 1 } else { 2 };
    for block in 0..blocks {
        for c in 0..psi * mu {
            let mut z = vec![0.0; n];
            for (j, sub) in interior.iter().enumerate() {
                let src = if block == 0 {
                    &sub.sigma_blocks
                } else {
                    &sub.gamma_blocks
                };
                if src.is_empty() {
                    continue;
                }
                let col = src.get(c).ok_or_else(|| {
                    Error::Dimension(format!(
                        "subdomain {j} has {} expansion columns, need {}",
                        src.len(),
                        psi * mu
                    ))
                })?;
                let r = meta.interior_range(j);
                let sign = if block == 0 { -1.0 } else { 1.0 };
                for (dst, &x) in z[r].iter_mut().zip(col) {
                    *dst = sign * x;
                }
            }
            if block == 0 && c < mu {
                z[dtot..].copy_from_slice(&q.q[c]);
            }
            cols.push(z);
        }
    }
    Ok(cols)
}

/// Interface basis of a decomposed pencil together with the time spent
/// factoring and iterating. It depends only on the filter and the iteration
/// settings, so runs that vary `nev_B` or `ψ` can share it.
pub struct InterfaceStage {
    pub basis: InterfaceBasis,
    pub factor_seconds: f64,
    pub interface_seconds: f64,
}

pub fn interface_stage(cfg: &RfDdesConfig, dd: &DDPencil) -> Result<InterfaceStage> {
    cfg.validate()?;
    let filter = cfg.filter()?;
    let t = Instant::now();
    let ss = SchurSet::build(dd, &filter, false).phase(Phase::Factorization)?;
    let factor_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let basis = interface_lanczos(&ss, &cfg.iter_config()).phase(Phase::Interface)?;
    Ok(InterfaceStage {
        basis,
        factor_seconds,
        interface_seconds: t.elapsed().as_secs_f64(),
    })
}

/// Interior subspaces, projection and back-permutation for a given interface
/// basis. `a`, `m` are the original (unpermuted) matrices; residuals are
/// measured against them.
pub fn complete_from_interface(
    cfg: &RfDdesConfig,
    dd: &DDPencil,
    stage: &InterfaceStage,
    a: &SparseSym,
    m: &SparseSym,
) -> Result<EigResult> {
    cfg.validate()?;
    if dd.p() != cfg.p {
        return Err(Error::InvalidArgument(format!(
            "pencil has {} subdomains, config {}",
            dd.p(),
            cfg.p
        )));
    }
    let q = &stage.basis;
    let mut info = SolveInfo {
        s: dd.s(),
        d: dd.meta.d.clone(),
        mu: q.mu(),
        converged: q.converged,
        trace_history: q.trace_history.clone(),
        ..Default::default()
    };
    info.phase_seconds
        .insert("factorization".into(), stage.factor_seconds);
    info.phase_seconds
        .insert("interface".into(), stage.interface_seconds);

    let t = Instant::now();
    let interior = build_interior(dd, q, cfg.sigma, &cfg.nev_b_list(), cfg.psi, cfg.seed)
        .phase(Phase::Interior)?;
    info.phase_seconds
        .insert("interior".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let z = assemble_z(&dd.meta, &interior, q, cfg.psi, dd.m_e_is_zero).phase(Phase::Projection)?;
    drop(interior);
    let ap = dd.assemble(false);
    let mp = dd.assemble(true);
    let (lo, hi) = (cfg.alpha, cfg.beta);
    let rr = rayleigh_ritz(&ap, &mp, z, |v| v >= lo && v <= hi).phase(Phase::Projection)?;
    info.dim_z = rr.dim;
    info.dropped_columns = rr.dropped;
    info.ritz_all = rr.all_values;
    let iperm = &dd.meta.iperm;
    let pairs = rr
        .values
        .into_iter()
        .zip(rr.vectors)
        .map(|(lam, x)| (lam, (0..x.len()).map(|old| x[iperm[old]]).collect()))
        .collect();
    let mut res = EigResult::from_pairs(a, m, pairs, info).phase(Phase::Projection)?;
    res.info
        .phase_seconds
        .insert("projection".into(), t.elapsed().as_secs_f64());
    Ok(res)
}

/// Runs the solver on an already decomposed pencil.
pub fn rf_ddes_solve_on(
    cfg: &RfDdesConfig,
    dd: &DDPencil,
    a: &SparseSym,
    m: &SparseSym,
) -> Result<EigResult> {
    if dd.p() != cfg.p {
        return Err(Error::InvalidArgument(format!(
            "pencil has {} subdomains, config {}",
            dd.p(),
            cfg.p
        )));
    }
    let stage = interface_stage(cfg, dd)?;
    complete_from_interface(cfg, dd, &stage, a, m)
}

/// Full pipeline on the original pencil.
pub fn rf_ddes_solve(cfg: &RfDdesConfig, a: &SparseSym, m: &SparseSym) -> Result<EigResult> {
    cfg.validate()?;
    if a.n() != m.n() {
        return Err(
            Error::Dimension("pencil matrices differ in size".into()).in_phase(Phase::Ingestion)
        );
    }
    let t = Instant::now();
    let dd = prepare(a, m, cfg.p, cfg.seed)?;
    let prep = t.elapsed().as_secs_f64();
    let mut res = rf_ddes_solve_on(cfg, &dd, a, m)?;
    res.info.phase_seconds.insert("partition".into(), prep);
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{random_grid_pencil, FdMesh};

    #[test]
    fn single_subdomain_full_interior_is_exact() {
        let mesh = FdMesh::new(6, 5);
        let a = mesh.matrix().unwrap();
        let m = SparseSym::identity(30);
        let (lo, hi) = mesh.interval_for_lowest(8);
        let cfg = RfDdesConfig {
            alpha: lo,
            beta: hi,
            p: 1,
            nev_b: 30,
            psi: 1,
            ..Default::default()
        };
        let r = rf_ddes_solve(&cfg, &a, &m).unwrap();
        assert_eq!(r.info.s, 0);
        assert_eq!(r.len(), 8);
        for (v, md) in r.values.iter().zip(mesh.lowest(8)) {
            assert!((v - md.value).abs() <= 1e-10 * md.value);
        }
    }

    #[test]
    fn column_count_identity_mass() {
        let mesh = FdMesh::new(12, 10);
        let a = mesh.matrix().unwrap();
        let m = SparseSym::identity(120);
        let dd = prepare(&a, &m, 2, 0).unwrap();
        let q = InterfaceBasis {
            q: vec![vec![1.0; dd.s()]; 3],
            ..Default::default()
        };
        let interior = build_interior(&dd, &q, 0.0, &[4, 4], 1, 0).unwrap();
        let z = assemble_z(&dd.meta, &interior, &q, 1, dd.m_e_is_zero).unwrap();
        assert_eq!(z.len(), 2 * 4 + 3);
    }

    #[test]
    fn column_count_with_mass_coupling() {
        let (a, m) = random_grid_pencil(4, 4, 2).unwrap();
        let dd = prepare(&a, &m, 1, 0).unwrap();
        // p = 1 has no interface; fake a three-vector basis of an empty interface
        let q = InterfaceBasis {
            q: vec![Vec::new(); 3],
            ..Default::default()
        };
        let interior = vec![InteriorSubspace {
            v: vec![vec![0.0; 16]; 2],
            sigma_blocks: vec![vec![1.0; 16]; 6],
            gamma_blocks: vec![vec![1.0; 16]; 6],
            ..Default::default()
        }];
        let z = assemble_z(&dd.meta, &interior, &q, 2, false).unwrap();
        assert_eq!(z.len(), 2 + 2 * 2 * 3);
    }

    #[test]
    fn back_permutation_residuals() {
        let (a, m) = random_grid_pencil(6, 6, 4).unwrap();
        let cfg = RfDdesConfig {
            alpha: -1.0,
            beta: 1.5,
            p: 2,
            nc: 8,
            nev_b: 10,
            psi: 3,
            ..Default::default()
        };
        let r = rf_ddes_solve(&cfg, &a, &m).unwrap();
        let dd = prepare(&a, &m, 2, 0).unwrap();
        let ap = dd.assemble(false);
        let mp = dd.assemble(true);
        for (lam, x) in r.values.iter().zip(&r.vectors) {
            let xp: Vec<f64> = dd.meta.perm.iter().map(|&old| x[old]).collect();
            let rp = crate::result::residual(&ap, &mp, *lam, &xp).unwrap();
            let ro = crate::result::residual(&a, &m, *lam, x).unwrap();
            assert!((rp - ro).abs() <= 1e-14 * (1.0 + ro));
        }
    }
}
