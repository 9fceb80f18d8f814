//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use fbse_core::degeneracy::{jordan_special_case, multiset_distance, random_rational_params, rotate_spectrum, u2_matrix};
use fbse_core::exact::{exact_null_dim, ratio, RationalParams};
use fbse_core::flatband::{cls_basis, span_distance, NULL_TOL};
use fbse_core::linalg::{self, C64};
use fbse_core::model::{builtin_flatband3, obc_hamiltonian, ParamSet};
use fbse_core::nonbloch::{beta_roots, ep3_locations, gbz_radius, quantum_distance, skin_decay_ratio, DistanceKind};
use fbse_core::response::{chi, chi_map, green_response, max_green_scaling, GreenProbe, DEFAULT_ETA};
use fbse_core::spectra::{hermitian_delta, region_classify, Region};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

const TABLE: [(f64, f64, Region); 3] = [(0.62, 0.32, Region::I), (0.9, 0.32, Region::II), (1.5, 0.66, Region::III)];

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let got: Vec<Region> = TABLE.iter().map(|&(a, b, _)| region_classify(&ParamSet::reference(a, b)).region).collect();
    let secs = t.elapsed().as_secs_f64();
    let ok = got.iter().zip(&TABLE).all(|(g, w)| *g == w.2) && secs < 1.0;
    (ok, format!("regions {got:?}, {secs:.3}s"))
}

fn chi_at(g1: f64, g2: f64) -> f64 {
    let h = obc_hamiltonian(&builtin_flatband3(), &ParamSet::reference(g1, g2), 20).unwrap();
    chi(&green_response(&h, &GreenProbe::default()).unwrap()).unwrap()
}

fn criterion_2() -> Outcome {
    let (a, b, c) = (chi_at(0.9, 0.32), chi_at(0.62, 0.32), chi_at(1.5, 0.66));
    let points = a > 0.9 && b < 0.1 && c < 0.1;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let grid: Vec<f64> = (0..41).map(|i| i as f64 * 0.05).collect();
    let base = ParamSet::reference(0.0, 0.0);
    let t = Instant::now();
    let map = pool
        .install(|| chi_map(&builtin_flatband3(), &base, &grid, &grid, 20, &GreenProbe::default()))
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let (lo, hi) = {
        let (d0, dpi) = (hermitian_delta(&base, 0.0), hermitian_delta(&base, PI));
        (d0.min(dpi).sqrt(), d0.max(dpi).sqrt())
    };
    let (mut agree, mut total) = (0, 0);
    for (i, g1) in grid.iter().enumerate() {
        for (j, g2) in grid.iter().enumerate() {
            let r = (g1 * g1 + g2 * g2).sqrt();
            if (r - lo).abs() < 0.05 || (r - hi).abs() < 0.05 || (g2 - 0.3).abs() < 1e-9 {
                continue;
            }
            total += 1;
            let in_ii = region_classify(&base.with_gammas(*g1, *g2)).region == Region::II;
            if (map.chi[i][j] > 0.8) == in_ii {
                agree += 1;
            }
        }
    }
    let frac = agree as f64 / total as f64;
    (
        points && frac > 0.95 && secs < 120.0,
        format!("chi = {a:.4}, {b:.4}, {c:.4}; agreement {agree}/{total} = {frac:.4}; map {secs:.1}s single-threaded"),
    )
}

fn criterion_3() -> Outcome {
    let sizes: Vec<usize> = (8..=24).collect();
    let fit = |g1, g2| max_green_scaling(&builtin_flatband3(), &ParamSet::reference(g1, g2), &sizes, DEFAULT_ETA).unwrap().fit;
    let (ii, i, iii) = (fit(0.9, 0.32), fit(0.62, 0.32), fit(1.5, 0.66));
    (
        ii.slope > 0.1 && ii.r_squared > 0.99 && i.slope.abs() < 0.05 && iii.slope.abs() < 0.05,
        format!(
            "slopes II {:.4} (R^2 {:.6}), I {:.2e}, III {:.2e}",
            ii.slope, ii.r_squared, i.slope, iii.slope
        ),
    )
}

fn criterion_4() -> Outcome {
    let p = ParamSet::reference(0.5, 0.32);
    let ratio = skin_decay_ratio(&p, 40).unwrap();
    let want = (0.56f64 / 1.56).sqrt();
    // growth towards the right edge equals the reciprocal radius
    let rel = (ratio * want - 1.0).abs();
    let radius = gbz_radius(&p).unwrap();
    (
        rel < 0.02 && (radius - want).abs() < 1e-12,
        format!("per-cell growth {ratio:.5}, 1/{want:.5} = {:.5}, deviation {:.2e}", 1.0 / want, rel),
    )
}

fn criterion_5() -> Outcome {
    let mut present = Vec::new();
    for j in 0..=20000 {
        let g2 = j as f64 * 1e-4;
        let recs = ep3_locations(&ParamSet::reference(0.5, g2)).unwrap();
        if recs.iter().any(|r| r.order == 3 && r.rank_sequence == [2, 1, 0] && r.on_gbz) {
            present.push(j);
        }
    }
    let contiguous = present.windows(2).all(|w| w[1] == w[0] + 1);
    let (lo, hi) = (present[0] as f64 * 1e-4, *present.last().unwrap() as f64 * 1e-4);
    (
        contiguous && (lo - 0.70200).abs() < 1e-3 && (hi - 1.27059).abs() < 1e-3,
        format!("EP3 present for gamma2 in [{lo:.4}, {hi:.4}], contiguous {contiguous}"),
    )
}

fn criterion_6() -> Outcome {
    let p = ParamSet::reference(0.5, 1.0);
    let (bep, _) = beta_roots(&p, C64::new(0.0, 0.0)).unwrap();
    let rr: Vec<f64> = (0..36)
        .map(|j| quantum_distance(&p, bep, 1e-4, j as f64 * PI / 18.0, PI / 2.0, DistanceKind::RR).unwrap())
        .collect();
    let mean = rr.iter().sum::<f64>() / rr.len() as f64;
    let spread = rr.iter().cloned().fold(f64::MIN, f64::max) - rr.iter().cloned().fold(f64::MAX, f64::min);
    let lr: Vec<f64> = (0..36)
        .map(|j| quantum_distance(&p, bep, 1e-4, 0.0, j as f64 * PI / 18.0, DistanceKind::LR).unwrap())
        .collect();
    let max = lr.iter().cloned().fold(f64::MIN, f64::max);
    let min = lr.iter().cloned().fold(f64::MAX, f64::min);
    (
        mean < 1e-2 && spread < 0.01 * mean && max > 0.05 && max - min > 0.1 * max,
        format!("d_RR mean {mean:.3e}, spread/mean {:.2e}; d_LR in [{min:.3}, {max:.3}]", spread / mean),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let generic = (0..50).all(|_| exact_null_dim(&random_rational_params(&mut rng), 6).unwrap() == 6);
    let one = ratio(1, 1);
    let locus = RationalParams::new(one.clone(), one.clone(), one.clone(), one);
    let special = exact_null_dim(&locus, 4).unwrap();
    let mut jordan_ok = true;
    let mut detail = String::new();
    for (a, b) in [(ratio(1, 1), ratio(1, 1)), (ratio(-53, 50), ratio(-3, 10))] {
        let n = 4;
        let r = jordan_special_case(&RationalParams::new(a.clone(), b.clone(), a, b), n).unwrap();
        let got = [
            (r.zero.algebraic, r.zero.geometric),
            (r.plus.algebraic, r.plus.geometric),
            (r.minus.algebraic, r.minus.geometric),
        ];
        jordan_ok &= got == [(n + 2, n + 1), (n - 1, 1), (n - 1, 1)];
        detail = format!("{got:?}");
    }
    (
        generic && special == 5 && jordan_ok,
        format!("50 draws give N = 6: {generic}; locus N = 4 gives {special}; Jordan (alg, geo) {detail}"),
    )
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    let mut real = true;
    for &(g1, g2, _) in &TABLE {
        let h = obc_hamiltonian(&builtin_flatband3(), &ParamSet::reference(g1, g2), 12).unwrap();
        let chain = rotate_spectrum(&h).unwrap();
        let rot: Vec<C64> = linalg::eigenvalues(&h).unwrap().iter().map(|e| e * C64::new(0.0, 1.0)).collect();
        worst = worst.max(multiset_distance(&linalg::eigenvalues(&chain.h3).unwrap(), &rot));
        real &= chain.h3.col_iter().all(|c| c.iter().all(|z| z.im == 0.0));
    }
    let perm = u2_matrix(36).is_ok();
    (worst < 1e-10 && perm && real, format!("max multiset distance {worst:.2e}, U2 permutation {perm}, H3 real {real}"))
}

fn criterion_9() -> Outcome {
    let p = ParamSet::reference(0.5, 0.32);
    let h = obc_hamiltonian(&builtin_flatband3(), &p, 20).unwrap();
    let cls = cls_basis(&p, 20).unwrap();
    let mut max_res = 0.0f64;
    let mut max_support = 0;
    for j in 0..cls.ncols() {
        let v = linalg::normalized(&linalg::column(&cls, j));
        max_res = max_res.max(linalg::norm(&linalg::matvec(&h, &v)));
        max_support = max_support.max(v.iter().filter(|x| x.norm() > 0.0).count());
    }
    let kernel = linalg::null_space(&h, NULL_TOL).unwrap();
    let diff = span_distance(&cls, &kernel).unwrap();
    (
        max_res < 1e-12 && max_support <= 3 && diff < 1e-8 && cls.ncols() == 20,
        format!("max residual {max_res:.2e}, max support {max_support}, projector difference {diff:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 region classification", criterion_1),
        ("2 phase map", criterion_2),
        ("3 Green scaling", criterion_3),
        ("4 GBZ decay", criterion_4),
        ("5 EP3 window", criterion_5),
        ("6 quantum distances", criterion_6),
        ("7 exact multiplicities", criterion_7),
        ("8 spectral rotation", criterion_8),
        ("9 compact localized states", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (ok, detail) = f();
        println!("criterion {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
