//! Open-chain Green's-function response at the flat-band energy.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::model::{obc_hamiltonian, ModelSpec, ParamSet};
use crate::spectra::hermitian_delta;

pub const DEFAULT_ETA: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    Direct,
    Projector,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenProbe {
    pub energy: C64,
    /// 0-based index into the cell-major site ordering.
    pub source_site: usize,
    pub method: GreenMethod,
}

impl GreenProbe {
    /// `E = iη`, source on the C site of the first cell.
    pub fn flat_band(eta: f64, method: GreenMethod) -> Self {
        GreenProbe {
            energy: C64::new(0.0, eta),
            source_site: 2,
            method,
        }
    }
}

impl Default for GreenProbe {
    fn default() -> Self {
        GreenProbe::flat_band(DEFAULT_ETA, GreenMethod::Direct)
    }
}

/// Oblique projector onto `ker H` along the range of `H`, `R (L†R)^{-1} L†`.
pub fn flat_band_projector(h: &CMatrix, tol: f64) -> Result<CMatrix> {
    let r = linalg::null_space(h, tol)?;
    let l = linalg::null_space(&linalg::adjoint(h), tol)?;
    if r.ncols() != l.ncols() || r.ncols() == 0 {
        return Err(Error::Numerical(format!(
            "left/right zero-mode counts differ ({} vs {})",
            l.ncols(),
            r.ncols()
        )));
    }
    let g = linalg::adjoint(&l) * &r;
    let ginv = linalg::inverse(&g)
        .map_err(|_| Error::Numerical("flat-band left/right subspaces orthogonal".into()))?;
    Ok(&r * ginv * linalg::adjoint(&l))
}

/// `(E - H)^{-1} |s>` normalized to unit 2-norm.
pub fn green_response(h: &CMatrix, probe: &GreenProbe) -> Result<Vec<C64>> {
    let n = h.nrows();
    if probe.source_site >= n {
        return Err(Error::Domain(format!("source site {} outside 0..{n}", probe.source_site)));
    }
    if probe.energy.norm() == 0.0 {
        return Err(Error::Domain("E = 0 sits on the flat band; use a nonzero eta".into()));
    }
    let raw: Vec<C64> = match probe.method {
        GreenMethod::Direct => {
            let mut a = linalg::scale(h, C64::new(-1.0, 0.0));
            for i in 0..n {
                a[(i, i)] += probe.energy;
            }
            let mut s = linalg::zeros(n, 1);
            s[(probe.source_site, 0)] = C64::new(1.0, 0.0);
            let x = linalg::solve(&a, &s).map_err(|e| match e {
                Error::Domain(_) => Error::Domain(format!(
                    "E - H is singular at E = {}; use a nonzero eta",
                    probe.energy
                )),
                other => other,
            })?;
            linalg::column(&x, 0)
        }
        GreenMethod::Projector => {
            let p = flat_band_projector(h, 1e-10)?;
            (0..n).map(|i| p[(i, probe.source_site)] / probe.energy).collect()
        }
    };
    let nrm = linalg::norm(&raw);
    if !(nrm.is_finite() && nrm > 0.0) {
        return Err(Error::Numerical(format!("response norm is {nrm}")));
    }
    Ok(raw.iter().map(|x| x / nrm).collect())
}

/// Response center `sum_n (n / M) |R_n|²` with 1-based `n` over `M` sites.
pub fn chi(r: &[C64]) -> Result<f64> {
    let total: f64 = r.iter().map(|x| x.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("response is not normalized (sum |R|^2 = {total})")));
    }
    let m = r.len() as f64;
    Ok(r.iter().enumerate().map(|(n, x)| (n + 1) as f64 / m * x.norm_sqr()).sum())
}

#[derive(Clone, Debug)]
pub struct ChiMap {
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    /// `chi[i][j]` at `(gamma1[i], gamma2[j])`; NaN where the solve failed.
    pub chi: Vec<Vec<f64>>,
    /// Curves `γ1² + γ2² = threshold` sampled on the γ1 grid.
    pub boundaries: Vec<Vec<(f64, f64)>>,
}

pub fn chi_map(
    spec: &ModelSpec,
    base: &ParamSet,
    gamma1: &[f64],
    gamma2: &[f64],
    cells: usize,
    probe: &GreenProbe,
) -> Result<ChiMap> {
    if cells < 8 {
        return Err(Error::Domain(format!("chi map needs at least 8 cells, got {cells}")));
    }
    for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
        if g.is_empty() || g.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config(format!("{name} grid must be non-empty and increasing")));
        }
    }
    let cells_idx: Vec<(usize, usize)> =
        (0..gamma1.len()).flat_map(|i| (0..gamma2.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = cells_idx
        .par_iter()
        .map(|&(i, j)| {
            let p = base.with_gammas(gamma1[i], gamma2[j]);
            let out = obc_hamiltonian(spec, &p, cells)
                .and_then(|h| green_response(&h, probe))
                .and_then(|r| chi(&r));
            match out {
                Ok(x) => x,
                Err(e) => {
                    log::warn!("chi map cell ({}, {}) failed: {e}", gamma1[i], gamma2[j]);
                    f64::NAN
                }
            }
        })
        .collect();
    let chi = values.chunks(gamma2.len()).map(<[f64]>::to_vec).collect();
    let (d0, dpi) = (hermitian_delta(base, 0.0), hermitian_delta(base, std::f64::consts::PI));
    let boundaries = [dpi.min(d0), dpi.max(d0)]
        .iter()
        .map(|&th| {
            gamma1
                .iter()
                .filter(|g| g.powi(2) <= th)
                .map(|&g| (g, (th - g * g).sqrt()))
                .collect()
        })
        .collect();
    Ok(ChiMap {
        gamma1: gamma1.to_vec(),
        gamma2: gamma2.to_vec(),
        chi,
        boundaries,
    })
}

#[derive(Clone, Debug)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Clone, Debug)]
pub struct GreenScaling {
    pub cells: Vec<usize>,
    /// natural log of `max_{mn} |G_mn(iη)|`
    pub log_max_g: Vec<f64>,
    pub fit: LinearFit,
}

/// Largest Green's-function entry from the flat-band projector, `max|P| / η`, across sizes.
pub fn max_green_scaling(spec: &ModelSpec, p: &ParamSet, cells: &[usize], eta: f64) -> Result<GreenScaling> {
    if cells.len() < 4 || cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("size list must be strictly increasing with at least 4 entries".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::Domain("eta must be positive".into()));
    }
    let log_max_g = cells
        .par_iter()
        .map(|&n| {
            let h = obc_hamiltonian(spec, p, n)?;
            let proj = flat_band_projector(&h, 1e-10)?;
            let m = linalg::max_abs(&proj);
            if !m.is_finite() {
                return Err(Error::Numerical(format!("projector overflow at N = {n}")));
            }
            Ok(m.ln() - eta.ln())
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = cells.iter().map(|&n| n as f64).collect();
    Ok(GreenScaling {
        cells: cells.to_vec(),
        fit: linear_fit(&xs, &log_max_g),
        log_max_g,
    })
}

/// Unit vector on `site` of length `n`.
pub fn site_vector(n: usize, site: usize) -> Vec<C64> {
    let mut v = vec![ZERO; n];
    v[site] = C64::new(1.0, 0.0);
    v
}
