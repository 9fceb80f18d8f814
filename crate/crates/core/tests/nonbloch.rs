use std::f64::consts::PI;

use fbse_core::linalg::{self, C64};
use fbse_core::model::{builtin_flatband3, nonbloch_hamiltonian, ParamSet};
use fbse_core::nonbloch::*;
use fbse_core::Error;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn h_beta(p: &ParamSet, beta: C64) -> linalg::CMatrix {
    nonbloch_hamiltonian(&builtin_flatband3(), p, beta).unwrap()
}

// smallest |λ - e| over the eigenvalues of H(β)
fn eig_distance(p: &ParamSet, beta: C64, e: C64) -> f64 {
    linalg::eigenvalues(&h_beta(p, beta))
        .unwrap()
        .iter()
        .map(|l| (l - e).norm())
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn zero_energy_roots_substitute_back() {
    let p = ParamSet::reference(0.5, 1.0);
    let (b1, b2) = beta_roots(&p, c(0.0, 0.0)).unwrap();
    for b in [b1, b2] {
        assert!((b.re + 0.05726).abs() < 1e-5 && (b.im.abs() - 0.59640).abs() < 1e-5, "{b}");
        assert!(linalg::determinant(&h_beta(&p, b)).norm() < 1e-12);
    }
    assert!((b1.im + b2.im).abs() < 1e-14);
}

#[test]
fn roots_at_band_energies() {
    let p = ParamSet::reference(0.5, 0.32);
    for e in [c(0.3, 0.1), c(-1.2, 0.4), c(0.0, 2.0)] {
        let (b1, b2) = beta_roots(&p, e).unwrap();
        assert!(b1.norm() <= b2.norm());
        for b in [b1, b2] {
            assert!(eig_distance(&p, b, e) < 1e-9 * (1.0 + e.norm()), "{e} {b}");
        }
    }
}

#[test]
fn hermitian_bloch_limit() {
    let p = ParamSet::reference(0.0, 0.0);
    let spec = builtin_flatband3();
    for k in [0.3, 1.1, 2.5] {
        let h = fbse_core::model::bloch_hamiltonian(&spec, &p, k).unwrap();
        let e = linalg::hermitian_eigen(&h).unwrap().0;
        let top = e.iter().cloned().fold(f64::MIN, f64::max);
        let (b1, b2) = beta_roots(&p, c(top, 0.0)).unwrap();
        assert!((b1.norm() - 1.0).abs() < 1e-9 && (b2.norm() - 1.0).abs() < 1e-9);
    }
    assert!((gbz_radius(&p).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn degenerate_quadratic_rejected() {
    let p = ParamSet::new(0.4, -0.3, 0.4, 0.1);
    assert!(matches!(beta_roots(&p, c(0.1, 0.0)), Err(Error::Domain(_))));
    let p = ParamSet::new(-1.0, 0.0, 0.5, 0.1);
    assert!(matches!(beta_roots(&p, c(0.1, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn gbz_samples_on_circle() {
    let p = ParamSet::reference(0.5, 0.32);
    let g = gbz_dispersive(&p, 40).unwrap();
    assert!((g.radius - (0.56f64 / 1.56).sqrt()).abs() < 1e-14);
    assert!((g.radius * g.reciprocal - 1.0).abs() < 1e-15);
    assert!(g.flatband_all_plane);
    assert_eq!(g.samples.len(), 80);
    for s in g.samples.iter().filter(|s| s.matched) {
        assert!((s.beta1.norm() - s.beta2.norm()).abs() < 1e-8);
        assert!((s.beta1.norm() - g.radius).abs() < 1e-6);
    }
    assert!(g.samples.iter().all(|s| s.matched));
    assert!(gbz_dispersive(&p, 10).is_err());
}

#[test]
fn hermitian_gbz_is_unit_circle() {
    let g = gbz_dispersive(&ParamSet::reference(0.0, 0.0), 20).unwrap();
    assert!((g.radius - 1.0).abs() < 1e-15);
    assert!(g.samples.iter().all(|s| (s.beta1.norm() - 1.0).abs() < 1e-6));
}

#[test]
fn skin_decay_matches_radius() {
    let p = ParamSet::reference(0.5, 0.32);
    let ratio = skin_decay_ratio(&p, 40).unwrap();
    let r = gbz_radius(&p).unwrap();
    assert!((ratio * r - 1.0).abs() < 0.02, "ratio {ratio}, radius {r}");
}

fn window_oracle(g1: f64) -> (f64, f64) {
    // discriminant of the zero-energy quadratic changes sign where (γ2²)² terms balance
    let (t1, t2) = (-1.06f64, -0.3f64);
    let four_p2p0 = 4.0 * (t1 - g1) * t2 * t2 * (t1 + g1);
    let a = t1 * t1 - g1 * g1 + 2.0 * t2 * t2;
    ((a - four_p2p0.sqrt()).sqrt(), (a + four_p2p0.sqrt()).sqrt())
}

#[test]
fn ep3_window_sweep() {
    let (lo, hi) = window_oracle(0.5);
    assert!((lo - 0.70200).abs() < 1e-5 && (hi - 1.27059).abs() < 1e-5);
    let (alo, ahi) = ep3_gamma2_window(-1.06, -0.3, 0.5).unwrap();
    assert!((alo - lo).abs() < 1e-12 && (ahi - hi).abs() < 1e-12);
    let mut present = Vec::new();
    for j in 0..=2000 {
        let g2 = j as f64 * 1e-3;
        let recs = ep3_locations(&ParamSet::reference(0.5, g2)).unwrap();
        let ep3 = recs.iter().filter(|r| r.order == 3 && r.rank_sequence == [2, 1, 0] && r.on_gbz).count();
        if ep3 > 0 {
            assert_eq!(ep3, 2, "gamma2 {g2}");
            present.push(g2);
        }
    }
    let first = present[0];
    let last = *present.last().unwrap();
    assert!((first - lo).abs() < 1e-3 && (last - hi).abs() < 1e-3, "{first} {last}");
    assert_eq!(present.len(), ((last - first) / 1e-3).round() as usize + 1);
}

#[test]
fn ep3_examples() {
    let recs = ep3_locations(&ParamSet::reference(0.5, 1.0)).unwrap();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert!((r.beta.norm() - 0.59914).abs() < 1e-5);
        assert_eq!(r.rank_sequence, vec![2, 1, 0]);
        let h = h_beta(&ParamSet::reference(0.5, 1.0), r.beta);
        let h3 = &(&h * &h) * &h;
        assert!(linalg::max_abs(&h3) < 1e-12 && linalg::max_abs(&(&h * &h)) > 1e-3);
    }
    assert!(ep3_locations(&ParamSet::reference(0.5, 0.32)).unwrap().is_empty());
}

#[test]
fn ep3_zipper() {
    let (lo, hi) = window_oracle(0.5);
    let steps = 400;
    let mut prev: Option<C64> = None;
    let mut gaps = Vec::new();
    for j in 1..steps {
        let g2 = lo + (hi - lo) * j as f64 / steps as f64;
        let p = ParamSet::reference(0.5, g2);
        let recs = ep3_locations(&p).unwrap();
        assert_eq!(recs.len(), 2);
        let upper = recs.iter().map(|r| r.beta).find(|b| b.im > 0.0).unwrap();
        assert!((upper.norm() - gbz_radius(&p).unwrap()).abs() < 1e-8);
        if let Some(b) = prev {
            assert!((upper - b).norm() < 0.05, "jump at {g2}");
        }
        prev = Some(upper);
        gaps.push((recs[0].beta - recs[1].beta).norm());
    }
    // the pair meets on the real axis at both ends
    let mid = gaps[gaps.len() / 2];
    assert!(gaps[0] < 0.2 * mid && *gaps.last().unwrap() < 0.2 * mid);
    for g2 in [lo + 1e-9, hi - 1e-9] {
        let recs = ep3_locations(&ParamSet::reference(0.5, g2)).unwrap();
        assert_eq!(recs.len(), 2);
        assert!((recs[0].beta - recs[1].beta).norm() < 1e-3);
    }
}

#[test]
fn zero_mode_contract() {
    let p = ParamSet::reference(0.5, 0.32);
    for beta in [c(0.5, 0.2), c(-1.3, 0.7), C64::from_polar(0.59914, 2.0)] {
        let m = nonbloch_zero_mode(&p, beta).unwrap();
        let (r, l) = zero_mode_residuals(&p, beta, &m).unwrap();
        assert!(r < 1e-12 && l < 1e-12, "{r} {l}");
        assert!((linalg::norm(&m.rev) - 1.0).abs() < 1e-14);
        assert!((linalg::inner(&m.lev, &m.rev) - 1.0).norm() < 1e-12);
    }
}

#[test]
fn hermitian_zero_mode_is_self_dual() {
    let p = ParamSet::reference(0.0, 0.0);
    let m = nonbloch_zero_mode(&p, C64::from_polar(1.0, 0.7)).unwrap();
    let ov = linalg::inner(&linalg::normalized(&m.lev), &m.rev);
    assert!((ov.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn zero_mode_at_ep_is_self_orthogonal() {
    let p = ParamSet::reference(0.5, 1.0);
    let (b, _) = beta_roots(&p, c(0.0, 0.0)).unwrap();
    assert!(matches!(nonbloch_zero_mode(&p, b), Err(Error::SelfOrthogonal { .. })));
    assert!(matches!(
        quantum_distance(&p, b, 0.0, 0.0, 1.0, DistanceKind::RR),
        Err(Error::Domain(_))
    ));
}

#[test]
fn nilpotency_at_ep() {
    let p = ParamSet::reference(0.5, 1.0);
    let (b, _) = beta_roots(&p, c(0.0, 0.0)).unwrap();
    assert_eq!(nilpotency_rank_sequence(&h_beta(&p, b), 1e-8).unwrap(), vec![2, 1, 0]);
    // generic β has a nonzero dispersive pair
    assert!(matches!(
        nilpotency_rank_sequence(&h_beta(&p, c(1.0, 0.0)), 1e-8),
        Err(Error::Precondition(_))
    ));
}

fn ep_beta() -> (ParamSet, C64) {
    let p = ParamSet::reference(0.5, 1.0);
    let (b, _) = beta_roots(&p, c(0.0, 0.0)).unwrap();
    (p, b)
}

#[test]
fn identical_points_have_zero_distance() {
    let (p, b) = ep_beta();
    for kind in [DistanceKind::RR, DistanceKind::LR] {
        assert!(quantum_distance(&p, b, 1e-3, 0.4, 0.0, kind).unwrap() < 1e-6);
    }
}

#[test]
fn rr_distance_vanishes_near_ep() {
    let (p, b) = ep_beta();
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&db| quantum_distance(&p, b, db, 0.0, PI / 2.0, DistanceKind::RR).unwrap())
        .collect();
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
    assert!(d[2] < 1e-2);
}

#[test]
fn rr_isotropic_lr_finite() {
    let (p, b) = ep_beta();
    let rr: Vec<f64> = (0..36)
        .map(|j| quantum_distance(&p, b, 1e-4, j as f64 * PI / 18.0, PI / 2.0, DistanceKind::RR).unwrap())
        .collect();
    let mean = rr.iter().sum::<f64>() / 36.0;
    let spread = rr.iter().cloned().fold(f64::MIN, f64::max) - rr.iter().cloned().fold(f64::MAX, f64::min);
    assert!(mean < 1e-2 && spread < 0.01 * mean, "{mean} {spread}");
    let lr: Vec<f64> = (0..36)
        .map(|j| quantum_distance(&p, b, 1e-4, 0.0, j as f64 * PI / 18.0, DistanceKind::LR).unwrap())
        .collect();
    let max = lr.iter().cloned().fold(f64::MIN, f64::max);
    let nonzero_min = lr[1..].iter().cloned().fold(f64::MAX, f64::min);
    assert!(max > 0.05 && (max - nonzero_min) > 0.1 * max);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vieta_product(g1 in 0.0f64..2.0, g2 in 0.0f64..2.0, er in -2.0f64..2.0, ei in -2.0f64..2.0) {
        let p = ParamSet::reference(g1, g2);
        let (b1, b2) = beta_roots(&p, c(er, ei)).unwrap();
        let want = (p.t1 + p.gamma1) / (p.t1 - p.gamma1);
        prop_assert!((b1 * b2 - want).norm() < 1e-10 * (1.0 + want.abs()));
    }

    #[test]
    fn flat_band_fills_beta_plane(r in 0.1f64..10.0, phi in 0.0f64..(2.0 * PI), g1 in 0.0f64..2.0, g2 in 0.0f64..2.0) {
        let p = ParamSet::reference(g1, g2);
        let d = linalg::determinant(&h_beta(&p, C64::from_polar(r, phi)));
        prop_assert!(d.norm() < 1e-12 * (1.0 + r) * (1.0 + r), "det {d}");
    }

    #[test]
    fn distances_ignore_global_phases(a in 0.0f64..(2.0 * PI), b in 0.0f64..(2.0 * PI), th in 0.0f64..(2.0 * PI)) {
        let (p, bep) = ep_beta();
        let m1 = nonbloch_zero_mode(&p, bep + C64::from_polar(1e-3, th)).unwrap();
        let m2 = nonbloch_zero_mode(&p, bep + C64::from_polar(1e-3, th + 1.0)).unwrap();
        let rot = |v: &[C64], ph: f64| v.iter().map(|x| x * C64::from_polar(1.0, ph)).collect::<Vec<_>>();
        let rr = state_distance(&m2.rev, &m1.rev);
        let lr = state_distance(&m2.lev, &m1.rev);
        // squared distances are well conditioned; the square root amplifies roundoff near zero
        let sq = |x: f64| x * x;
        prop_assert!((sq(state_distance(&rot(&m2.rev, a), &rot(&m1.rev, b))) - sq(rr)).abs() < 1e-12 * (1.0 + sq(rr)));
        prop_assert!((sq(state_distance(&rot(&m2.lev, a), &rot(&m1.rev, b))) - sq(lr)).abs() < 1e-12 * (1.0 + sq(lr)));
        let direct = quantum_distance(&p, bep, 1e-3, th, 1.0, DistanceKind::LR).unwrap();
        prop_assert!((direct - lr).abs() < 1e-12);
    }
}
