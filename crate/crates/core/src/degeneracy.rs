//! Zero-energy multiplicities, the t1 = γ1, t2 = γ2 Jordan structure, open-chain EP scans and
//! the 90° spectral rotation.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{obc_exact, ratio, RationalMatrix, RationalParams};
use crate::linalg::{self, CMatrix, C64};
use crate::model::{builtin_flatband3, obc_hamiltonian, ParamSet};

/// Default zero-cluster tolerance relative to `‖H‖₂`.
pub const ZERO_CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityReport {
    pub algebraic_zero: usize,
    pub geometric_zero: usize,
    pub is_ep: bool,
    pub cells: usize,
    pub warning: Option<String>,
}

/// Eigenvalue count with `|E| < tol·‖H‖` against `dim ker H`.
pub fn multiplicities_at_zero(h: &CMatrix, bands: usize, tol: f64) -> Result<MultiplicityReport> {
    let scale = linalg::spectral_norm(h)?;
    let cut = tol * scale;
    let ev = linalg::eigenvalues(h)?;
    let algebraic = ev.iter().filter(|e| e.norm() < cut).count();
    let geometric = linalg::null_space(h, crate::flatband::NULL_TOL)?.ncols();
    let straddling = ev.iter().filter(|e| e.norm() > cut / 10.0 && e.norm() < cut * 10.0).count();
    let mut warning = None;
    if straddling > 0 {
        warning = Some(format!(
            "{straddling} eigenvalue(s) within a factor 10 of the zero-cluster cut {cut:.3e}; count is tolerance-sensitive"
        ));
    }
    if geometric > algebraic {
        let msg = format!("geometric {geometric} exceeds algebraic {algebraic} at tol {tol:e}");
        warning = Some(warning.map_or(msg.clone(), |w| format!("{w}; {msg}")));
    }
    Ok(MultiplicityReport {
        algebraic_zero: algebraic,
        geometric_zero: geometric,
        is_ep: algebraic > geometric,
        cells: h.nrows() / bands,
        warning,
    })
}

/// Algebraic and geometric multiplicity of one eigenvalue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenBlock {
    pub eigenvalue: BigRational,
    pub algebraic: usize,
    pub geometric: usize,
    /// `dim ker (H−λ)^k` for `k = 1, 2, ...` until it stabilizes
    pub kernel_dims: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanReport {
    pub cells: usize,
    pub zero: EigenBlock,
    pub plus: EigenBlock,
    pub minus: EigenBlock,
}

impl JordanReport {
    /// Number of Jordan chains of length ≥ 2 at zero.
    pub fn zero_long_chains(&self) -> usize {
        self.zero.kernel_dims.get(1).copied().unwrap_or(self.zero.geometric) - self.zero.geometric
    }
}

fn eigen_block(h: &RationalMatrix, lambda: &BigRational) -> Result<EigenBlock> {
    let shifted = h.shifted(lambda);
    let mut dims = vec![shifted.nullity()];
    let mut pw = shifted.clone();
    while dims.len() < h.rows {
        pw = pw.mul(&shifted)?;
        let d = pw.nullity();
        if d == *dims.last().unwrap() {
            break;
        }
        dims.push(d);
    }
    Ok(EigenBlock {
        eigenvalue: lambda.clone(),
        algebraic: *dims.last().unwrap(),
        geometric: dims[0],
        kernel_dims: dims,
    })
}

/// Exact generalized-eigenspace structure at `λ ∈ {0, t2, −t2}` on the locus `t1 = γ1, t2 = γ2`.
pub fn jordan_special_case(p: &RationalParams, cells: usize) -> Result<JordanReport> {
    if p.t1 != p.gamma1 || p.t2 != p.gamma2 {
        return Err(Error::Precondition("Jordan structure needs t1 = gamma1 and t2 = gamma2".into()));
    }
    if p.t2.is_zero() {
        return Err(Error::Precondition("t2 = 0 merges all three eigenvalues".into()));
    }
    let h = obc_exact(p, cells)?;
    let report = JordanReport {
        cells,
        zero: eigen_block(&h, &BigRational::zero())?,
        plus: eigen_block(&h, &p.t2)?,
        minus: eigen_block(&h, &-p.t2.clone())?,
    };
    let total = report.zero.algebraic + report.plus.algebraic + report.minus.algebraic;
    if total != 3 * cells {
        return Err(Error::DegeneracyAnomaly {
            expected: 3 * cells,
            found: total,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct ScanCell {
    pub gamma1: f64,
    pub gamma2: f64,
    /// smallest `|E|` over the dispersive eigenvalues
    pub min_abs_e: f64,
    pub is_ep: bool,
}

#[derive(Clone, Debug)]
pub struct EpLocus {
    pub gamma1: f64,
    pub gamma2: f64,
    pub report: MultiplicityReport,
}

#[derive(Clone, Debug)]
pub struct EpScan {
    pub cells: Vec<ScanCell>,
    pub loci: Vec<EpLocus>,
    /// bracketing intervals whose refined point failed the multiplicity check
    pub unresolved: Vec<(f64, f64, f64)>,
}

/// Tolerance for the multiplicity recheck at a refined crossing; the flat/dispersive EP3
/// splits a numerical zero by `ε^{1/3}`.
pub const EP_RECHECK_TOL: f64 = 1e-4;

fn dispersive_min(h: &CMatrix, cells: usize) -> Result<f64> {
    let mut mags: Vec<f64> = linalg::eigenvalues(h)?.iter().map(|e| e.norm()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags[cells])
}

/// `det(X·Y)` of the chiral blocks; a dispersive pair crosses zero where it changes sign.
fn chiral_det(h: &CMatrix, bands: usize) -> f64 {
    let cells = h.nrows() / bands;
    let a: Vec<usize> = (0..cells).map(|c| c * bands).collect();
    let bc: Vec<usize> = (0..h.nrows()).filter(|i| i % bands != 0).collect();
    let x = linalg::select(h, &a, &bc);
    let y = linalg::select(h, &bc, &a);
    linalg::determinant(&(&x * &y)).re
}

fn increasing(g: &[f64], name: &str) -> Result<()> {
    if g.is_empty() || g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config(format!("{name} grid must be non-empty and increasing")));
    }
    Ok(())
}

/// Scan `(γ1, γ2)` for open-chain EPs where a dispersive pair meets the flat band.
pub fn obc_ep_scan(base: &ParamSet, gamma1: &[f64], gamma2: &[f64], cells: usize) -> Result<EpScan> {
    if cells < 8 {
        return Err(Error::Domain(format!("EP scan needs at least 8 cells, got {cells}")));
    }
    increasing(gamma1, "gamma1")?;
    increasing(gamma2, "gamma2")?;
    let spec = builtin_flatband3();
    let rows: Vec<(Vec<ScanCell>, Vec<EpLocus>, Vec<(f64, f64, f64)>)> = gamma1
        .par_iter()
        .map(|&g1| -> Result<_> {
            let mut row = Vec::with_capacity(gamma2.len());
            let mut dets = Vec::with_capacity(gamma2.len());
            for &g2 in gamma2 {
                let h = obc_hamiltonian(&spec, &base.with_gammas(g1, g2), cells)?;
                dets.push(chiral_det(&h, 3));
                row.push(ScanCell {
                    gamma1: g1,
                    gamma2: g2,
                    min_abs_e: dispersive_min(&h, cells)?,
                    is_ep: false,
                });
            }
            let mut loci = Vec::new();
            let mut unresolved = Vec::new();
            for j in 0..gamma2.len().saturating_sub(1) {
                if dets[j] == 0.0 || dets[j].signum() == dets[j + 1].signum() {
                    continue;
                }
                let det_at = |g2: f64| -> Result<f64> {
                    Ok(chiral_det(&obc_hamiltonian(&spec, &base.with_gammas(g1, g2), cells)?, 3))
                };
                let (mut lo, mut hi) = (gamma2[j], gamma2[j + 1]);
                let s_lo = dets[j].signum();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let d = det_at(mid)?;
                    if d == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if d.signum() == s_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let g2 = 0.5 * (lo + hi);
                let h = obc_hamiltonian(&spec, &base.with_gammas(g1, g2), cells)?;
                let report = multiplicities_at_zero(&h, 3, EP_RECHECK_TOL)?;
                if report.is_ep {
                    let k = if (g2 - gamma2[j]).abs() <= (gamma2[j + 1] - g2).abs() { j } else { j + 1 };
                    row[k].is_ep = true;
                    loci.push(EpLocus {
                        gamma1: g1,
                        gamma2: g2,
                        report,
                    });
                } else {
                    log::warn!("sign change near ({g1}, {g2}) failed the multiplicity recheck");
                    unresolved.push((g1, gamma2[j], gamma2[j + 1]));
                }
            }
            Ok((row, loci, unresolved))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = EpScan {
        cells: Vec::new(),
        loci: Vec::new(),
        unresolved: Vec::new(),
    };
    for (r, l, u) in rows {
        out.cells.extend(r);
        out.loci.extend(l);
        out.unresolved.extend(u);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RotationChain {
    pub u1: CMatrix,
    pub u2: CMatrix,
    pub h1: CMatrix,
    pub h2: CMatrix,
    pub h2bar: CMatrix,
    pub h3: CMatrix,
}

/// `U1 = (1/√2)[[−i, −1], [i, −1]] ⊗ I_n`
pub fn u1_matrix(n: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let k = [[C64::new(0.0, -s), C64::new(-s, 0.0)], [C64::new(0.0, s), C64::new(-s, 0.0)]];
    let mut u = linalg::zeros(2 * n, 2 * n);
    for (a, row) in k.iter().enumerate() {
        for (b, &v) in row.iter().enumerate() {
            for i in 0..n {
                u[(a * n + i, b * n + i)] = v;
            }
        }
    }
    u
}

/// Shuffle matrix on `2n` sites, 1-based: `a_nn = 1` for `n mod 3 ≠ 1`, and `a_mn = 1` for
/// `min(m, n) mod 3 = 1` with `|m − n| = n_half`.
pub fn u2_matrix(n: usize) -> Result<CMatrix> {
    let dim = 2 * n;
    let mut u = linalg::zeros(dim, dim);
    for m in 1..=dim {
        for k in 1..=dim {
            let hit = if m == k { k % 3 != 1 } else { m.min(k) % 3 == 1 && m.abs_diff(k) == n };
            if hit {
                u[(m - 1, k - 1)] = C64::new(1.0, 0.0);
            }
        }
    }
    for i in 0..dim {
        let rs: f64 = (0..dim).map(|j| u[(i, j)].re).sum();
        let cs: f64 = (0..dim).map(|j| u[(j, i)].re).sum();
        if rs != 1.0 || cs != 1.0 {
            return Err(Error::Numerical(format!("shuffle matrix is not a permutation at index {}", i + 1)));
        }
    }
    Ok(u)
}

/// `H1 = iH`, `H2 = U1†(H1 ⊕ −H1)U1`, `H̄2 = U2† H2 U2 = H3 ⊕ −H3`.
pub fn rotate_spectrum(h: &CMatrix) -> Result<RotationChain> {
    let n = h.nrows();
    if n % 3 != 0 {
        return Err(Error::Precondition("rotation needs three orbitals per cell".into()));
    }
    if h.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).any(|z| z.im != 0.0) {
        return Err(Error::Precondition("rotation needs a real Hamiltonian".into()));
    }
    let h1 = linalg::scale(h, C64::new(0.0, 1.0));
    let mut dsum = linalg::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            dsum[(i, j)] = h1[(i, j)];
            dsum[(n + i, n + j)] = -h1[(i, j)];
        }
    }
    let u1 = u1_matrix(n);
    let h2c = linalg::adjoint(&u1) * &dsum * &u1;
    let scale = linalg::max_abs(h).max(1.0);
    let mut h2 = linalg::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in 0..2 * n {
            let z = h2c[(i, j)];
            if z.im.abs() > 1e-14 * scale {
                return Err(Error::Numerical(format!("H2 is not real at ({i}, {j}): {z}")));
            }
            h2[(i, j)] = C64::new(z.re, 0.0);
        }
    }
    let u2 = u2_matrix(n)?;
    let h2bar = linalg::adjoint(&u2) * &h2 * &u2;
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            off = off.max(h2bar[(i, n + j)].norm()).max(h2bar[(n + i, j)].norm());
        }
    }
    if off > 1e-12 {
        return Err(Error::Numerical(format!("shuffle left off-diagonal blocks of size {off:e}")));
    }
    let h3 = linalg::select(&h2bar, &(0..n).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>());
    Ok(RotationChain {
        u1,
        u2,
        h1,
        h2,
        h2bar,
        h3,
    })
}

/// Largest distance after greedily pairing each `a` with its nearest unused `b`.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

/// `t2 = 0`, `|t1| = |γ1|` or `|t2| = |γ2|`: block ranks can drop there.
pub fn on_special_locus(p: &RationalParams) -> bool {
    p.t2.is_zero() || p.t1.abs() == p.gamma1.abs() || p.t2.abs() == p.gamma2.abs()
}

/// Random rationals `n/d` with `|n/d| <= 2` and `d <= 64`, redrawn while on a special locus.
pub fn random_rational_params(rng: &mut impl Rng) -> RationalParams {
    let mut draw = || {
        let d: i64 = rng.gen_range(1..=64);
        let n: i64 = rng.gen_range(-2 * d..=2 * d);
        ratio(n, d)
    };
    loop {
        let p = RationalParams::new(draw(), draw(), draw(), draw());
        if !on_special_locus(&p) {
            return p;
        }
    }
}
