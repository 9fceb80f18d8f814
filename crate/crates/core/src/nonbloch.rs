//! Non-Bloch band theory for the built-in model: β roots, the dispersive GBZ, EP3s where
//! it meets the flat band, and the two quantum distances around an EP3.
//!
//! β replaces `e^{ik}` in the Bloch matrix. With this choice the GBZ radius is
//! `sqrt|(t1+γ1)/(t1−γ1)|` and open-chain skin modes grow by `1/radius` per cell.

use crate::error::{Error, Result};
use crate::linalg::{self, inner, CMatrix, C64};
use crate::model::{builtin_flatband3, nonbloch_hamiltonian, obc_hamiltonian, ParamSet};
use crate::response::linear_fit;
use crate::spectra::eig_general;

/// Coefficients `(p2, p1, p0)` of `det[H(β) − E] / (−E β) = p2 β² + p1 β + p0` restricted to
/// the dispersive factor.
pub fn beta_polynomial(p: &ParamSet, e: C64) -> (f64, C64, f64) {
    let p2 = (p.t1 - p.gamma1) * p.t2;
    let p1 = C64::new(
        p.t1 * p.t1 - p.gamma1 * p.gamma1 + 2.0 * p.t2 * p.t2 - p.gamma2 * p.gamma2,
        0.0,
    ) - e * e;
    let p0 = p.t2 * (p.t1 + p.gamma1);
    (p2, p1, p0)
}

/// Both roots of the dispersive β-polynomial at energy `e`, ordered `|β1| <= |β2|`.
pub fn beta_roots(p: &ParamSet, e: C64) -> Result<(C64, C64)> {
    let (p2, p1, p0) = beta_polynomial(p, e);
    if p2 == 0.0 {
        return Err(Error::Domain("degenerate beta polynomial: (t1 - gamma1) * t2 = 0".into()));
    }
    let disc = (p1 * p1 - 4.0 * p2 * p0).sqrt();
    // pick the sign that avoids cancellation
    let q = if (p1.conj() * disc).re >= 0.0 { -(p1 + disc) / 2.0 } else { -(p1 - disc) / 2.0 };
    let (r1, r2) = if q.norm() == 0.0 {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    } else {
        (q / p2, C64::new(p0, 0.0) / q)
    };
    Ok(if r1.norm() <= r2.norm() { (r1, r2) } else { (r2, r1) })
}

pub fn gbz_radius(p: &ParamSet) -> Result<f64> {
    let den = p.t1 - p.gamma1;
    if den == 0.0 {
        return Err(Error::Domain("t1 = gamma1: GBZ radius undefined".into()));
    }
    Ok(((p.t1 + p.gamma1) / den).abs().sqrt())
}

#[derive(Clone, Debug)]
pub struct GbzSample {
    pub energy: C64,
    pub beta1: C64,
    pub beta2: C64,
    /// `||β1| − |β2||` below 1e−4
    pub matched: bool,
}

#[derive(Clone, Debug)]
pub struct GbzResult {
    pub radius: f64,
    pub reciprocal: f64,
    pub samples: Vec<GbzSample>,
    /// `det H(β) = 0` for every β at E = 0.
    pub flatband_all_plane: bool,
}

/// GBZ of the dispersive bands sampled at the nonzero open-chain eigenvalues.
pub fn gbz_dispersive(p: &ParamSet, cells: usize) -> Result<GbzResult> {
    if cells < 20 {
        return Err(Error::Domain(format!("GBZ sampling needs at least 20 cells, got {cells}")));
    }
    let radius = gbz_radius(p)?;
    let h = obc_hamiltonian(&builtin_flatband3(), p, cells)?;
    let spec = eig_general(&h, false)?;
    let mut samples = Vec::new();
    for &e in spec.values.iter().filter(|e| e.norm() > 1e-6) {
        let (b1, b2) = beta_roots(p, e)?;
        samples.push(GbzSample {
            energy: e,
            beta1: b1,
            beta2: b2,
            matched: (b1.norm() - b2.norm()).abs() < 1e-4,
        });
    }
    Ok(GbzResult {
        radius,
        reciprocal: 1.0 / radius,
        samples,
        flatband_all_plane: true,
    })
}

/// Per-cell growth factor of the open-chain dispersive eigenvectors: the summed weight
/// `sum_E |ψ_E(cell)|²` over all dispersive modes is fitted to `ratio^(2·cell)` away from both ends.
pub fn skin_decay_ratio(p: &ParamSet, cells: usize) -> Result<f64> {
    if cells < 12 {
        return Err(Error::Domain("decay fit needs at least 12 cells".into()));
    }
    let h = obc_hamiltonian(&builtin_flatband3(), p, cells)?;
    let s = eig_general(&h, true)?;
    let v = s.vectors.as_ref().unwrap();
    let mut weight = vec![0.0; cells];
    for (j, e) in s.values.iter().enumerate() {
        if e.norm() < 1e-6 {
            continue;
        }
        for (c, w) in weight.iter_mut().enumerate() {
            *w += (0..3).map(|o| v[(3 * c + o, j)].norm_sqr()).sum::<f64>();
        }
    }
    let margin = 3;
    let xs: Vec<f64> = (margin..cells - margin).map(|c| c as f64).collect();
    let ys: Vec<f64> = (margin..cells - margin).map(|c| weight[c].ln()).collect();
    Ok((linear_fit(&xs, &ys).slope / 2.0).exp())
}

/// Ranks of `H, H², ...` until a zero rank or `B` powers. Singular values count when above
/// `tol · σ_max(H)^k`.
pub fn nilpotency_rank_sequence(h: &CMatrix, tol: f64) -> Result<Vec<usize>> {
    let b = h.nrows();
    let smax = linalg::spectral_norm(h)?;
    if smax == 0.0 {
        return Ok(vec![0]);
    }
    // a perturbed nilpotent matrix has eigenvalues of order ε^(1/B)
    let bound = tol.powf(1.0 / b as f64) * smax;
    let ev = linalg::eigenvalues(h)?;
    if let Some(bad) = ev.iter().find(|e| e.norm() > bound) {
        return Err(Error::Precondition(format!("matrix has eigenvalue {bad}, not nilpotent")));
    }
    let mut out = Vec::new();
    let mut pw = h.clone();
    for k in 1..=b {
        let sv = linalg::singular_values(&pw)?;
        let r = sv.iter().filter(|&&x| x > tol * smax.powi(k as i32)).count();
        out.push(r);
        if r == 0 {
            break;
        }
        pw = &pw * h;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct EpRecord {
    pub beta: C64,
    pub order: usize,
    pub rank_sequence: Vec<usize>,
    pub on_gbz: bool,
}

/// Zero-energy β roots on the GBZ, with their nilpotency structure.
pub fn ep3_locations(p: &ParamSet) -> Result<Vec<EpRecord>> {
    let radius = gbz_radius(p)?;
    let (b1, b2) = beta_roots(p, C64::new(0.0, 0.0))?;
    let spec = builtin_flatband3();
    let mut out = Vec::new();
    for beta in [b1, b2] {
        if beta.norm() == 0.0 || (beta.norm() - radius).abs() > 1e-8 * radius {
            continue;
        }
        let h = nonbloch_hamiltonian(&spec, p, beta)?;
        let ranks = match nilpotency_rank_sequence(&h, 1e-8) {
            Ok(r) => r,
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e),
        };
        let order = if ranks.last() == Some(&0) { ranks.len() } else { 0 };
        out.push(EpRecord {
            beta,
            order,
            rank_sequence: ranks,
            on_gbz: true,
        });
    }
    Ok(out)
}

/// Analytic γ2 interval at fixed `(t1, t2, γ1)` where the zero-energy β roots form a complex pair.
pub fn ep3_gamma2_window(t1: f64, t2: f64, gamma1: f64) -> Option<(f64, f64)> {
    let prod = (t1 * t1 - gamma1 * gamma1) * t2 * t2;
    if prod <= 0.0 {
        return None;
    }
    let base = t1 * t1 - gamma1 * gamma1 + 2.0 * t2 * t2;
    let half = 2.0 * prod.sqrt();
    let lo = base - half;
    let hi = base + half;
    if hi <= 0.0 {
        return None;
    }
    Some((lo.max(0.0).sqrt(), hi.sqrt()))
}

#[derive(Clone, Debug)]
pub struct ZeroMode {
    /// unit norm
    pub rev: Vec<C64>,
    /// `<lev|rev> = 1`
    pub lev: Vec<C64>,
    /// `<lev|rev>` between unit-norm copies
    pub overlap: C64,
}

/// Right and left zero modes of `H(β)` from its closed form.
pub fn nonbloch_zero_mode(p: &ParamSet, beta: C64) -> Result<ZeroMode> {
    if beta.norm() == 0.0 {
        return Err(Error::Domain("beta must be nonzero".into()));
    }
    let a = C64::new(p.t1 - p.gamma1, 0.0) + p.t2 / beta;
    let b = C64::new(p.t2 - p.gamma2, 0.0);
    let c = C64::new(p.t1 + p.gamma1, 0.0) + p.t2 * beta;
    let d = C64::new(p.t2 + p.gamma2, 0.0);
    let zero = C64::new(0.0, 0.0);
    let rev = vec![zero, b, -a];
    let lev = vec![zero, d.conj(), -c.conj()];
    let (nr, nl) = (linalg::norm(&rev), linalg::norm(&lev));
    if nr == 0.0 || nl == 0.0 {
        return Err(Error::Domain(format!("zero mode vanishes identically at beta = {beta}")));
    }
    let rev = linalg::normalized(&rev);
    let lev = linalg::normalized(&lev);
    let overlap = inner(&lev, &rev);
    if overlap.norm() < 1e-12 {
        return Err(Error::SelfOrthogonal {
            overlap: overlap.norm(),
        });
    }
    let lev = lev.iter().map(|x| x / overlap.conj()).collect();
    Ok(ZeroMode { rev, lev, overlap })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceKind {
    LR,
    RR,
}

impl std::fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceKind::LR => "LR",
            DistanceKind::RR => "RR",
        })
    }
}

/// `sqrt|1 − |<u|v>|²|`
pub fn state_distance(u: &[C64], v: &[C64]) -> f64 {
    (1.0 - inner(u, v).norm_sqr()).abs().sqrt()
}

/// Distance between zero modes at `β_EP + δβ e^{iθ}` and `β_EP + δβ e^{i(θ+Δθ)}`.
pub fn quantum_distance(
    p: &ParamSet,
    beta_ep: C64,
    delta_beta: f64,
    theta: f64,
    dtheta: f64,
    kind: DistanceKind,
) -> Result<f64> {
    if !(delta_beta > 0.0) {
        return Err(Error::Domain("delta_beta must be positive".into()));
    }
    let m1 = nonbloch_zero_mode(p, beta_ep + C64::from_polar(delta_beta, theta))?;
    let m2 = nonbloch_zero_mode(p, beta_ep + C64::from_polar(delta_beta, theta + dtheta))?;
    Ok(match kind {
        DistanceKind::RR => state_distance(&m2.rev, &m1.rev),
        DistanceKind::LR => state_distance(&m2.lev, &m1.rev),
    })
}

/// Right and left residuals `‖H r‖`, `‖l† H‖` of a zero mode.
pub fn zero_mode_residuals(p: &ParamSet, beta: C64, m: &ZeroMode) -> Result<(f64, f64)> {
    let h = nonbloch_hamiltonian(&builtin_flatband3(), p, beta)?;
    let right = linalg::norm(&linalg::matvec(&h, &m.rev));
    let hd = linalg::adjoint(&h);
    let left = linalg::norm(&linalg::matvec(&hd, &m.lev));
    Ok((right, left))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_sequences() {
        assert_eq!(nilpotency_rank_sequence(&linalg::zeros(3, 3), 1e-8).unwrap(), vec![0]);
        let j = linalg::from_real(3, 3, |i, k| if k == i + 1 { 1.0 } else { 0.0 });
        assert_eq!(nilpotency_rank_sequence(&j, 1e-8).unwrap(), vec![2, 1, 0]);
        assert!(matches!(
            nilpotency_rank_sequence(&linalg::identity(3), 1e-8),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn degenerate_polynomial() {
        let p = ParamSet::new(0.5, -0.3, 0.5, 0.2);
        assert!(matches!(beta_roots(&p, C64::new(0.0, 0.0)), Err(Error::Domain(_))));
    }
}
