use proptest::prelude::*;
use rfddes::ddes::{rf_ddes_solve, RfDdesConfig};
use rfddes::filter::{QuadratureRule, RationalFilter};
use rfddes::krylov::{rf_krylov_solve, IterConfig};
use rfddes::mesh::{random_grid_pencil, FdMesh};
use rfddes::mm::{read_matrix_market, write_matrix_market_to};
use rfddes::oracle::dense_gen_eig;
use rfddes::sparse::SparseSym;

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Interval around the `k` lowest eigenvalues of a sorted spectrum.
fn lowest_interval(v: &[f64], k: usize) -> (f64, f64) {
    (v[0] - 0.5 * (v[1] - v[0]), 0.5 * (v[k - 1] + v[k]))
}

fn check_against_reference(
    m: &SparseSym,
    values: &[f64],
    vectors: &[Vec<f64>],
    expect: &[f64],
    tol: f64,
) {
    assert_eq!(values.len(), expect.len());
    for (x, r) in values.iter().zip(expect) {
        assert!((x - r).abs() <= tol * r.abs().max(1.0), "{x} vs {r}");
    }
    for (i, x) in vectors.iter().enumerate() {
        for y in &vectors[..i] {
            assert!(dot(x, &m.spmv(y).unwrap()).abs() < 1e-8);
        }
        assert!((dot(x, &m.spmv(x).unwrap()) - 1.0).abs() < 1e-8);
    }
}

#[test]
fn ddes_on_mesh_matches_analytic_values() {
    let mesh = FdMesh::new(40, 30);
    let a = mesh.matrix().unwrap();
    let m = SparseSym::identity(a.n());
    let (alpha, beta) = mesh.interval_for_lowest(15);
    let cfg = RfDdesConfig {
        alpha,
        beta,
        nc: 8,
        p: 4,
        nev_b: 40,
        psi: 3,
        ..Default::default()
    };
    let res = rf_ddes_solve(&cfg, &a, &m).unwrap();
    let expect: Vec<f64> = mesh.lowest(15).iter().map(|md| md.value).collect();
    check_against_reference(&m, &res.values, &res.vectors, &expect, 1e-6);
    assert!(res.info.converged);
    assert_eq!(res.info.d.iter().sum::<usize>() + res.info.s, a.n());
}

#[test]
fn krylov_matches_dense_reference() {
    let (a, m) = random_grid_pencil(12, 9, 4).unwrap();
    let r = dense_gen_eig(&a, &m).unwrap();
    let (lo, hi) = lowest_interval(&r.values, 7);
    let filter = RationalFilter::new(lo, hi, 6, QuadratureRule::GaussLegendre).unwrap();
    let res = rf_krylov_solve(&a, &m, &filter, &IterConfig::default()).unwrap();
    check_against_reference(&m, &res.values, &res.vectors, &r.values[..7], 1e-10);
    assert!(res.residuals.iter().all(|&x| x < 1e-8));
}

#[test]
fn interval_with_no_eigenvalues_gives_empty_result() {
    let mesh = FdMesh::new(10, 10);
    let a = mesh.matrix().unwrap();
    let m = SparseSym::identity(a.n());
    let cfg = RfDdesConfig {
        alpha: -3.0,
        beta: -1.0,
        nev_b: 10,
        ..Default::default()
    };
    assert!(rf_ddes_solve(&cfg, &a, &m).unwrap().is_empty());
}

#[test]
fn invalid_configuration_is_rejected() {
    let a = FdMesh::new(4, 4).matrix().unwrap();
    let m = SparseSym::identity(16);
    let cfg = RfDdesConfig {
        alpha: 1.0,
        beta: 0.0,
        ..Default::default()
    };
    assert!(rf_ddes_solve(&cfg, &a, &m).is_err());
    let cfg = RfDdesConfig {
        check_every: 0,
        ..Default::default()
    };
    assert!(rf_ddes_solve(&cfg, &a, &m).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// With a sharp filter and a rich interior subspace the decomposition
    /// solver reproduces the dense spectrum for any partition count.
    #[test]
    fn ddes_matches_dense_on_random_pencils(seed in 0u64..1000, nx in 5usize..10, ny in 4usize..8, p in 1usize..4) {
        let (a, m) = random_grid_pencil(nx, ny, seed).unwrap();
        let r = dense_gen_eig(&a, &m).unwrap();
        let k = 4;
        let (alpha, beta) = lowest_interval(&r.values, k);
        let cfg = RfDdesConfig { alpha, beta, p, nc: 8, nev_b: 200, psi: 3, seed, ..Default::default() };
        let res = rf_ddes_solve(&cfg, &a, &m).unwrap();
        prop_assert_eq!(res.len(), k);
        for (x, y) in res.values.iter().zip(&r.values) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn ritz_values_stay_above_eigenvalues(seed in 0u64..1000) {
        let (a, m) = random_grid_pencil(8, 6, seed).unwrap();
        let r = dense_gen_eig(&a, &m).unwrap();
        let (alpha, beta) = lowest_interval(&r.values, 6);
        let cfg = RfDdesConfig { alpha, beta, nc: 2, nev_b: 2, psi: 1, seed, ..Default::default() };
        let res = rf_ddes_solve(&cfg, &a, &m).unwrap();
        for (x, y) in res.info.ritz_all.iter().zip(&r.values) {
            prop_assert!(*x >= y - 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn matrix_market_round_trip(nx in 1usize..7, ny in 1usize..7, seed in 0u64..100) {
        let (a, _) = random_grid_pencil(nx, ny, seed).unwrap();
        let mut buf = Vec::new();
        write_matrix_market_to(&mut buf, &a).unwrap();
        let b = read_matrix_market(&buf[..]).unwrap();
        prop_assert_eq!(a.n(), b.n());
        for i in 0..a.n() {
            for j in 0..a.n() {
                prop_assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }
}
