//! Band structures, open-chain spectra and point-gap tests.

use std::cmp::Ordering;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, column, inner, matvec, CMatrix, C64};
use crate::model::{nonbloch_from_blocks, ModelSpec, ParamSet};

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    K(f64),
    Index(usize),
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<C64>,
    pub provenance: Vec<Provenance>,
    /// Right eigenvectors as unit-norm columns aligned with `values`.
    pub vectors: Option<CMatrix>,
    /// Index pairs with (numerically) equal eigenvalues and parallel eigenvectors.
    pub defective_pairs: Vec<(usize, usize)>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn count_near(&self, e: C64, tol: f64) -> usize {
        self.values.iter().filter(|v| (**v - e).norm() < tol).count()
    }
}

pub fn lex_cmp(a: &C64, b: &C64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// All eigenvalues, ordered by (real, imaginary) part; vectors are kept when requested.
pub fn eig_general(h: &CMatrix, with_vectors: bool) -> Result<Spectrum> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", n, h.ncols())));
    }
    if !with_vectors {
        let mut values = linalg::eigenvalues(h)?;
        values.sort_by(lex_cmp);
        return Ok(Spectrum {
            provenance: (0..n).map(Provenance::Index).collect(),
            values,
            vectors: None,
            defective_pairs: Vec::new(),
        });
    }
    let (vals, vecs) = linalg::eigen(h)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(&vals[a], &vals[b]));
    let values: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    let scale = linalg::max_abs(h).max(1.0);
    for j in 0..n {
        let v = column(&vectors, j);
        let hv = matvec(h, &v);
        let res: f64 = hv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - values[j] * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if !(res < 1e-8 * scale) {
            return Err(Error::Numerical(format!(
                "eigenpair {j} has residual {res:e} (eigenvalue {})",
                values[j]
            )));
        }
    }
    let mut defective_pairs = Vec::new();
    let cols: Vec<Vec<C64>> = (0..n).map(|j| column(&vectors, j)).collect();
    for a in 0..n {
        for b in a + 1..n {
            if (values[a] - values[b]).norm() < 1e-6 * scale
                && inner(&cols[a], &cols[b]).norm() > 1.0 - 1e-8
            {
                defective_pairs.push((a, b));
            }
        }
    }
    Ok(Spectrum {
        provenance: (0..n).map(Provenance::Index).collect(),
        values,
        vectors: Some(vectors),
        defective_pairs,
    })
}

/// Bands sampled on `k_m = 2πm/K`, m = 0..K, after continuity tracking.
#[derive(Clone, Debug)]
pub struct TrackedBands {
    pub ks: Vec<f64>,
    /// `bands[b][m]` is band `b` at `ks[m]`.
    pub bands: Vec<Vec<C64>>,
    /// Band that band `b` continues into after one full period.
    pub wrap: Vec<usize>,
}

impl TrackedBands {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// max over samples of |E - mean| for one band.
    pub fn spread(&self, b: usize) -> f64 {
        let vals = &self.bands[b];
        let mean: C64 = vals.iter().sum::<C64>() / vals.len() as f64;
        vals.iter().map(|v| (v - mean).norm()).fold(0.0, f64::max)
    }

    /// Closed loops in the complex plane: bands chained through `wrap` cycles.
    pub fn loops(&self) -> Vec<(Vec<usize>, Vec<C64>)> {
        let mut seen = vec![false; self.band_count()];
        let mut out = Vec::new();
        for start in 0..self.band_count() {
            if seen[start] {
                continue;
            }
            let mut members = Vec::new();
            let mut pts = Vec::new();
            let mut b = start;
            while !seen[b] {
                seen[b] = true;
                members.push(b);
                pts.extend_from_slice(&self.bands[b]);
                b = self.wrap[b];
            }
            out.push((members, pts));
        }
        out
    }
}

/// Greedy nearest-neighbour assignment of `next` eigenpairs to `prev` ones.
/// Returns `perm` with `perm[b]` = index in `next` continuing band `b`.
fn match_step(
    prev_vals: &[C64],
    prev_vecs: &[Vec<C64>],
    next_vals: &[C64],
    next_vecs: &[Vec<C64>],
) -> Vec<usize> {
    let n = prev_vals.len();
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for _ in 0..n {
        let mut best = f64::INFINITY;
        for a in (0..n).filter(|&a| perm[a] == usize::MAX) {
            for b in (0..n).filter(|&b| !used[b]) {
                best = best.min((prev_vals[a] - next_vals[b]).norm());
            }
        }
        let mut cands = Vec::new();
        for a in (0..n).filter(|&a| perm[a] == usize::MAX) {
            for b in (0..n).filter(|&b| !used[b]) {
                if (prev_vals[a] - next_vals[b]).norm() <= best + 1e-12 {
                    cands.push((a, b));
                }
            }
        }
        let (a, b) = if cands.len() == 1 {
            cands[0]
        } else {
            log::debug!("band tracking tie among {} candidates, using eigenvector overlap", cands.len());
            *cands
                .iter()
                .max_by(|x, y| {
                    let ox = inner(&prev_vecs[x.0], &next_vecs[x.1]).norm();
                    let oy = inner(&prev_vecs[y.0], &next_vecs[y.1]).norm();
                    ox.total_cmp(&oy)
                })
                .unwrap()
        };
        perm[a] = b;
        used[b] = true;
    }
    perm
}

/// PBC bands on a uniform grid of `k_count` points with continuity tracking.
pub fn pbc_bands(spec: &ModelSpec, p: &ParamSet, k_count: usize) -> Result<TrackedBands> {
    if k_count < 64 {
        return Err(Error::Domain(format!("k_count must be at least 64, got {k_count}")));
    }
    let blocks = spec.bind(p)?;
    let ks: Vec<f64> = (0..k_count).map(|m| 2.0 * PI * m as f64 / k_count as f64).collect();
    let raw: Vec<(Vec<C64>, Vec<Vec<C64>>)> = ks
        .par_iter()
        .map(|&k| {
            let h = nonbloch_from_blocks(&blocks, C64::from_polar(1.0, k))?;
            let s = eig_general(&h, true)?;
            let v = s.vectors.as_ref().unwrap();
            let cols = (0..v.ncols()).map(|j| column(v, j)).collect();
            Ok((s.values, cols))
        })
        .collect::<Result<_>>()?;
    let nb = spec.bands;
    let mut bands = vec![Vec::with_capacity(k_count); nb];
    // current[b] = index within raw[m] that band b occupies
    let mut current: Vec<usize> = (0..nb).collect();
    for b in 0..nb {
        bands[b].push(raw[0].0[b]);
    }
    for m in 1..k_count {
        let prev_vals: Vec<C64> = current.iter().map(|&i| raw[m - 1].0[i]).collect();
        let prev_vecs: Vec<Vec<C64>> = current.iter().map(|&i| raw[m - 1].1[i].clone()).collect();
        let perm = match_step(&prev_vals, &prev_vecs, &raw[m].0, &raw[m].1);
        current = perm;
        for b in 0..nb {
            bands[b].push(raw[m].0[current[b]]);
        }
    }
    let last_vals: Vec<C64> = current.iter().map(|&i| raw[k_count - 1].0[i]).collect();
    let last_vecs: Vec<Vec<C64>> = current.iter().map(|&i| raw[k_count - 1].1[i].clone()).collect();
    // band b at k=0 occupies raw index b
    let wrap = match_step(&last_vals, &last_vecs, &raw[0].0, &raw[0].1);
    Ok(TrackedBands { ks, bands, wrap })
}

/// `Δ(k) = t1² + 2t2² + 2 t1 t2 cos k`
pub fn hermitian_delta(p: &ParamSet, k: f64) -> f64 {
    p.t1 * p.t1 + 2.0 * p.t2 * p.t2 + 2.0 * p.t1 * p.t2 * k.cos()
}

/// `f(k)`, the square of the dispersive energies of the built-in model.
pub fn dispersive_energy_squared(p: &ParamSet, k: f64) -> C64 {
    C64::new(
        hermitian_delta(p, k) - (p.gamma1 * p.gamma1 + p.gamma2 * p.gamma2),
        -2.0 * p.gamma1 * p.t2 * k.sin(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Region {
    I,
    II,
    III,
    Boundary,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionLabel {
    pub region: Region,
    /// (lower, upper) thresholds on γ1² + γ2².
    pub thresholds: (f64, f64),
}

/// Region of the built-in model from the sign pattern of `f(0)` and `f(π)`.
pub fn region_classify(p: &ParamSet) -> RegionLabel {
    let (d0, dpi) = (hermitian_delta(p, 0.0), hermitian_delta(p, PI));
    let (lo, hi) = (d0.min(dpi), d0.max(dpi));
    let g = p.gamma1 * p.gamma1 + p.gamma2 * p.gamma2;
    let eq = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let region = if eq(g, lo) || eq(g, hi) {
        Region::Boundary
    } else if g < lo {
        Region::I
    } else if g < hi {
        Region::II
    } else {
        Region::III
    };
    RegionLabel {
        region,
        thresholds: (lo, hi),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PointGap {
    pub enclosed: bool,
    pub winding: i64,
}

/// Winding of the closed polygon `pts` around `e`.
pub fn polygon_winding(pts: &[C64], e: C64) -> i64 {
    let n = pts.len();
    let mut total = 0.0;
    for j in 0..n {
        let a = pts[j] - e;
        let b = pts[(j + 1) % n] - e;
        total += (b / a).arg();
    }
    (total / (2.0 * PI)).round() as i64
}

/// Total winding of the non-flat band loops around `e_ref`. Bands whose spread is
/// below `flat_tol` are dropped before the test.
pub fn pointgap_encloses(bands: &TrackedBands, e_ref: C64, flat_tol: f64) -> Result<PointGap> {
    let mut winding = 0;
    for (members, pts) in bands.loops() {
        if members.iter().all(|&b| bands.spread(b) < flat_tol) {
            continue;
        }
        if let Some(close) = pts.iter().find(|z| (**z - e_ref).norm() < 1e-9) {
            log::debug!("sample {close} lies on the reference energy");
            return Err(Error::OnCurve {
                re: e_ref.re,
                im: e_ref.im,
                tol: 1e-9,
            });
        }
        winding += polygon_winding(&pts, e_ref);
    }
    Ok(PointGap {
        enclosed: winding != 0,
        winding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let h = linalg::from_diag(&[C64::new(1.0, 0.0), C64::new(0.0, 2.0), C64::new(-3.0, 0.0)]);
        let s = eig_general(&h, true).unwrap();
        assert_eq!(s.values, vec![C64::new(-3.0, 0.0), C64::new(0.0, 2.0), C64::new(1.0, 0.0)]);
        assert!(s.defective_pairs.is_empty());
    }

    #[test]
    fn jordan_block_flagged() {
        let h = linalg::from_real(2, 2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
        let s = eig_general(&h, true).unwrap();
        assert!(s.values.iter().all(|v| v.norm() < 1e-12));
        assert_eq!(s.defective_pairs, vec![(0, 1)]);
    }

    #[test]
    fn delta_values() {
        let p = ParamSet::reference(0.0, 0.0);
        assert!((dispersive_energy_squared(&p, 0.0).re - 1.9396).abs() < 1e-12);
        assert!((dispersive_energy_squared(&p, PI).re - 0.6676).abs() < 1e-12);
    }

    #[test]
    fn polygon_winding_circle() {
        let pts: Vec<C64> = (0..100).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / 100.0)).collect();
        assert_eq!(polygon_winding(&pts, C64::new(0.0, 0.0)), 1);
        assert_eq!(polygon_winding(&pts, C64::new(2.0, 0.0)), 0);
        let rev: Vec<C64> = pts.iter().rev().copied().collect();
        assert_eq!(polygon_winding(&rev, C64::new(0.1, 0.0)), -1);
    }
}
