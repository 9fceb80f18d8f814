use fbse_core::degeneracy::*;
use fbse_core::exact::*;
use fbse_core::linalg::{self, C64};
use fbse_core::model::{builtin_flatband3, obc_hamiltonian, ParamSet};
use fbse_core::Error;
use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn obc(g1: f64, g2: f64, n: usize) -> linalg::CMatrix {
    obc_hamiltonian(&builtin_flatband3(), &ParamSet::reference(g1, g2), n).unwrap()
}

// rank by plain rational Gaussian elimination, independent of the Bareiss path
fn rank_oracle(m: &RationalMatrix) -> usize {
    let mut a: Vec<Vec<BigRational>> = (0..m.rows).map(|i| (0..m.cols).map(|j| m.get(i, j).clone()).collect()).collect();
    let mut r = 0;
    for c in 0..m.cols {
        let Some(p) = (r..m.rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in 0..m.rows {
            if i != r && !a[i][c].is_zero() {
                let f = &a[i][c] / &a[r][c];
                for j in c..m.cols {
                    let v = &f * &a[r][j];
                    a[i][j] -= v;
                }
            }
        }
        r += 1;
    }
    r
}

fn reference_rational() -> RationalParams {
    RationalParams::new(ratio(-53, 50), ratio(-3, 10), ratio(1, 2), ratio(8, 25))
}

#[test]
fn null_dim_reference() {
    assert_eq!(exact_null_dim(&reference_rational(), 6).unwrap(), 6);
}

#[test]
fn null_dim_special_locus() {
    let one = ratio(1, 1);
    let p = RationalParams::new(one.clone(), one.clone(), one.clone(), one);
    assert_eq!(exact_null_dim(&p, 4).unwrap(), 5);
}

#[test]
fn null_dim_matches_blocks_on_edge_case() {
    for (t1, t2) in [(ratio(1, 1), ratio(-3, 10)), (ratio(-53, 50), ratio(2, 7)), (ratio(3, 4), ratio(1, 1))] {
        let p = RationalParams::new(t1.clone(), t2, t1, BigRational::zero());
        for n in [3, 5] {
            let h = obc_exact(&p, n).unwrap();
            let a: Vec<usize> = (0..n).map(|c| 3 * c).collect();
            let bc: Vec<usize> = (0..3 * n).filter(|i| i % 3 != 0).collect();
            let x = h.select(&a, &bc);
            let y = h.select(&bc, &a);
            let want = (bc.len() - rank_oracle(&x)) + (a.len() - rank_oracle(&y));
            assert_eq!(exact_null_dim(&p, n).unwrap(), want);
            assert_eq!(block_null_dim(&p, n).unwrap(), want);
        }
    }
}

#[test]
fn random_draws_have_n_zero_modes() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let p = random_rational_params(&mut rng);
        assert!(!on_special_locus(&p));
        let h = obc_exact(&p, 6).unwrap();
        assert_eq!(h.nullity(), 6, "{p:?}");
        assert_eq!(rank_oracle(&h) + h.nullity(), 18);
    }
}

#[test]
fn exact_agrees_with_numeric_geometric() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..50 {
        let p = random_rational_params(&mut rng);
        let n = 2 + k % 7;
        let [t1, t2, g1, g2] = p.to_f64();
        let h = obc_hamiltonian(&builtin_flatband3(), &ParamSet::new(t1, t2, g1, g2), n).unwrap();
        let geo = linalg::null_space(&h, fbse_core::flatband::NULL_TOL).unwrap().ncols();
        assert_eq!(geo, exact_null_dim(&p, n).unwrap(), "{p:?} N={n}");
    }
}

#[test]
fn jordan_locus_n4() {
    let one = ratio(1, 1);
    let p = RationalParams::new(one.clone(), one.clone(), one.clone(), one);
    let r = jordan_special_case(&p, 4).unwrap();
    assert_eq!((r.zero.algebraic, r.zero.geometric), (6, 5));
    assert_eq!((r.plus.algebraic, r.plus.geometric), (3, 1));
    assert_eq!((r.minus.algebraic, r.minus.geometric), (3, 1));
    assert_eq!(r.zero_long_chains(), 1);
    // numeric cross-check of the eigenvalue multiset
    let h = obc_hamiltonian(&builtin_flatband3(), &ParamSet::new(1.0, 1.0, 1.0, 1.0), 4).unwrap();
    let ev = linalg::eigenvalues(&h).unwrap();
    let near = |x: f64| ev.iter().filter(|e| (*e - C64::new(x, 0.0)).norm() < 1e-3).count();
    assert_eq!((near(0.0), near(1.0), near(-1.0)), (6, 3, 3));
}

#[test]
fn jordan_locus_sizes() {
    for (a, b) in [(ratio(3, 2), ratio(-2, 5)), (ratio(-53, 50), ratio(-3, 10))] {
        let p = RationalParams::new(a.clone(), b.clone(), a, b);
        for n in [3, 5, 6] {
            let r = jordan_special_case(&p, n).unwrap();
            assert_eq!((r.zero.algebraic, r.zero.geometric), (n + 2, n + 1));
            assert_eq!((r.plus.algebraic, r.plus.geometric), (n - 1, 1));
            assert_eq!((r.minus.algebraic, r.minus.geometric), (n - 1, 1));
        }
    }
    assert!(matches!(jordan_special_case(&reference_rational(), 4), Err(Error::Precondition(_))));
}

#[test]
fn multiplicity_region_one() {
    let r = multiplicities_at_zero(&obc(0.62, 0.32, 12), 3, ZERO_CLUSTER_TOL).unwrap();
    assert_eq!((r.algebraic_zero, r.geometric_zero, r.is_ep, r.cells), (12, 12, false, 12));
}

#[test]
fn multiplicity_hermitian() {
    for n in [8, 12] {
        let r = multiplicities_at_zero(&obc(0.0, 0.0, n), 3, ZERO_CLUSTER_TOL).unwrap();
        assert_eq!(r.algebraic_zero, r.geometric_zero);
        assert!(!r.is_ep);
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn ep_scan_line() {
    let g2 = grid(0.0, 2.0, 401);
    let scan = obc_ep_scan(&ParamSet::reference(0.5, 0.0), &[0.5], &g2, 12).unwrap();
    assert!(scan.unresolved.is_empty(), "{:?}", scan.unresolved);
    assert!(!scan.loci.is_empty());
    for l in &scan.loci {
        assert!(l.gamma2 > 0.64 && l.gamma2 < 1.30, "{}", l.gamma2);
        assert_eq!((l.report.algebraic_zero, l.report.geometric_zero), (14, 12));
        let h = obc(0.5, l.gamma2, 12);
        let mut mags: Vec<f64> = linalg::eigenvalues(&h).unwrap().iter().map(|e| e.norm()).collect();
        mags.sort_by(f64::total_cmp);
        assert!(mags[13] < 1e-3 && mags[14] > 1e-2);
    }
    assert_eq!(scan.cells.iter().filter(|c| c.is_ep).count(), scan.loci.len());
}

#[test]
fn ep_count_grows_with_size() {
    let g2 = grid(0.6, 1.35, 301);
    let counts: Vec<usize> = [8, 12, 16]
        .iter()
        .map(|&n| obc_ep_scan(&ParamSet::reference(0.5, 0.0), &[0.5], &g2, n).unwrap().loci.len())
        .collect();
    assert!(counts[0] < counts[1] && counts[1] < counts[2], "{counts:?}");
}

#[test]
fn ep_scan_hermitian_axis() {
    let scan = obc_ep_scan(&ParamSet::reference(0.0, 0.0), &[0.0], &grid(0.0, 0.0, 1), 10);
    assert!(matches!(scan, Err(Error::Config(_))) || scan.unwrap().loci.is_empty());
    let scan = obc_ep_scan(&ParamSet::reference(0.0, 0.0), &[0.0], &[0.0, 1e-3], 10).unwrap();
    assert!(scan.loci.is_empty());
    assert!(scan.cells.iter().all(|c| c.min_abs_e > 0.1));
}

#[test]
fn rotation_at_table_points() {
    for (g1, g2) in [(0.62, 0.32), (0.9, 0.32), (1.5, 0.66)] {
        let h = obc(g1, g2, 12);
        let chain = rotate_spectrum(&h).unwrap();
        let e3 = linalg::eigenvalues(&chain.h3).unwrap();
        let rot: Vec<C64> = linalg::eigenvalues(&h).unwrap().iter().map(|e| e * C64::new(0.0, 1.0)).collect();
        assert!(multiset_distance(&e3, &rot) < 1e-10, "{}", multiset_distance(&e3, &rot));
        assert!(chain.h3.col_iter().all(|c| c.iter().all(|z| z.im.abs() < 1e-14)));
        assert!(chain.h2.col_iter().all(|c| c.iter().all(|z| z.im.abs() < 1e-14)));
        // zero modes map to zero modes
        let k = linalg::null_space(&h, 1e-10).unwrap().ncols();
        assert_eq!(linalg::null_space(&chain.h3, 1e-10).unwrap().ncols(), k);
    }
}

#[test]
fn transform_matrices() {
    let n = 18;
    let u1 = u1_matrix(n);
    let id = linalg::sub(&(linalg::adjoint(&u1) * &u1), &linalg::identity(2 * n));
    assert!(linalg::max_abs(&id) < 1e-14);
    let u2 = u2_matrix(n).unwrap();
    for i in 0..2 * n {
        let ones = (0..2 * n).filter(|&j| u2[(i, j)] == C64::new(1.0, 0.0)).count();
        let zeros = (0..2 * n).filter(|&j| u2[(i, j)] == C64::new(0.0, 0.0)).count();
        assert_eq!((ones, zeros), (1, 2 * n - 1));
    }
    assert!(linalg::max_abs(&linalg::sub(&(&u2 * &u2), &linalg::identity(2 * n))) == 0.0);
}

#[test]
fn rotation_rejects_complex_input() {
    let mut h = obc(0.5, 0.32, 4);
    h[(0, 1)] = C64::new(0.0, 1.0);
    assert!(matches!(rotate_spectrum(&h), Err(Error::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bareiss_matches_gauss(entries in prop::collection::vec((-4i64..5, 1i64..4), 30), rows in 2usize..6) {
        let cols = 30 / rows;
        let m = RationalMatrix::from_fn(rows, cols, |i, j| { let (a, b) = entries[i * cols + j]; ratio(a * (i as i64 % 2), b) + ratio(a, b) });
        prop_assert_eq!(m.rank(), rank_oracle(&m));
    }

    #[test]
    fn rank_nullity(seed in 0u64..10_000, n in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = obc_exact(&random_rational_params(&mut rng), n).unwrap();
        prop_assert_eq!(h.rank() + h.nullity(), 3 * n);
        prop_assert_eq!(rank_oracle(&h), h.rank());
    }

    #[test]
    fn flagged_eps_merge_pairwise(g1 in 0.2f64..1.0) {
        let g2 = grid(0.0, 2.0, 121);
        let scan = obc_ep_scan(&ParamSet::reference(g1, 0.0), &[g1], &g2, 8).unwrap();
        for l in &scan.loci {
            prop_assert_eq!(l.report.algebraic_zero - l.report.geometric_zero, 2);
        }
    }
}
