//! Zero-energy subspace of open chains: localized right modes, their biorthogonal left
//! partners, and the compact localized states of the built-in model.

use crate::error::{Error, Result};
use crate::linalg::{self, column, inner, CMatrix, C64, ZERO};
use crate::model::{builtin_flatband3, obc_hamiltonian, ParamSet};

/// Relative singular-value threshold used for the numerical null space.
pub const NULL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationReport {
    /// 1-based site coordinate weighted by |v_n|².
    pub center_of_mass: f64,
    pub participation_ratio: f64,
    /// 1-based
    pub argmax_site: usize,
    pub max_abs: f64,
}

pub fn localization_report(v: &[C64]) -> Result<LocalizationReport> {
    let w: Vec<f64> = v.iter().map(|x| x.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("localization of a zero vector".into()));
    }
    let com = w.iter().enumerate().map(|(n, x)| (n + 1) as f64 * x).sum::<f64>() / total;
    let pr = total * total / w.iter().map(|x| x * x).sum::<f64>();
    let (arg, max) = v
        .iter()
        .map(|x| x.norm())
        .enumerate()
        .fold((0, -1.0), |acc, (n, x)| if x > acc.1 { (n, x) } else { acc });
    Ok(LocalizationReport {
        center_of_mass: com,
        participation_ratio: pr,
        argmax_site: arg + 1,
        max_abs: max,
    })
}

#[derive(Clone, Debug)]
pub struct ModeBasis {
    pub revs: CMatrix,
    /// `levs[:, m]† revs[:, n] = δ_mn`
    pub levs: CMatrix,
    pub rev_reports: Vec<LocalizationReport>,
    pub lev_reports: Vec<LocalizationReport>,
}

impl ModeBasis {
    pub fn len(&self) -> usize {
        self.revs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.revs.ncols() == 0
    }

    /// `sum_n |rev_n><lev_n|`
    pub fn projector(&self) -> CMatrix {
        &self.revs * linalg::adjoint(&self.levs)
    }
}

/// Basis of the column span of `v` in which each vector ends as early as possible
/// (column echelon form from the last row upward). Returns `(last_index, vector)` pairs.
fn compact_basis(v: &CMatrix, tol: f64) -> Vec<(usize, Vec<C64>)> {
    let (n, k) = (v.nrows(), v.ncols());
    // rows of `work` are basis vectors, eliminated from the last site backwards
    let mut work: Vec<Vec<C64>> = (0..k).map(|j| column(v, j)).collect();
    let scale = linalg::max_abs(v).max(f64::MIN_POSITIVE);
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut out = Vec::with_capacity(k);
    for site in (0..n).rev() {
        if remaining.is_empty() {
            break;
        }
        let (pos, &piv) = remaining
            .iter()
            .enumerate()
            .max_by(|a, b| work[*a.1][site].norm().total_cmp(&work[*b.1][site].norm()))
            .unwrap();
        if work[piv][site].norm() <= tol * scale {
            continue;
        }
        remaining.remove(pos);
        let pv = work[piv].clone();
        for &r in &remaining {
            let f = work[r][site] / pv[site];
            for (x, y) in work[r].iter_mut().zip(&pv) {
                *x -= f * y;
            }
            work[r][site] = ZERO;
        }
        out.push((site, pv));
    }
    out
}

/// Gram-Schmidt in the given order, gauge-fixed (largest entry real positive), then
/// sorted by center of mass.
fn orthonormalize_ordered(dim: usize, states: Vec<Vec<C64>>) -> Result<CMatrix> {
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(states.len());
    for mut x in states {
        for _ in 0..2 {
            for u in &q {
                let c = inner(u, &x);
                for (a, b) in x.iter_mut().zip(u) {
                    *a -= c * b;
                }
            }
        }
        let nrm = linalg::norm(&x);
        let big = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(ZERO);
        if !(nrm > 0.0) || big.norm() == 0.0 {
            return Err(Error::Numerical("zero-mode states are linearly dependent".into()));
        }
        let phase = big.conj() / (big.norm() * nrm);
        q.push(x.iter().map(|z| z * phase).collect());
    }
    let mut keyed: Vec<(f64, Vec<C64>)> = q
        .into_iter()
        .map(|x| Ok((localization_report(&x)?.center_of_mass, x)))
        .collect::<Result<_>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cols: Vec<Vec<C64>> = keyed.into_iter().map(|(_, x)| x).collect();
    Ok(linalg::from_columns(dim, &cols))
}

/// Orthonormal basis of `ker H` with `expected` columns: a QR factorization of the
/// compact (echelon) null-space basis taken left to right, so the first `j` columns span
/// every zero mode ending at or before the `j`-th pivot site. Columns are ordered by
/// center of mass.
pub fn flatband_revs(h: &CMatrix, expected: usize, tol: f64) -> Result<CMatrix> {
    let v = linalg::null_space(h, tol)?;
    if v.ncols() != expected {
        return Err(Error::DegeneracyAnomaly {
            expected,
            found: v.ncols(),
        });
    }
    let mut compact = compact_basis(&v, 1e-9);
    if compact.len() != expected {
        return Err(Error::Numerical(format!(
            "echelon reduction of the zero-mode space lost rank ({} of {expected})",
            compact.len()
        )));
    }
    compact.sort_by_key(|(last, _)| *last);
    orthonormalize_ordered(h.nrows(), compact.into_iter().map(|(_, x)| x).collect())
}

/// Same contract as [`flatband_revs`], but orthonormalizes the caller's zero modes
/// (columns of `states`, left to right) after checking they span `ker H`.
pub fn flatband_revs_from(h: &CMatrix, states: &CMatrix, tol: f64) -> Result<CMatrix> {
    let v = linalg::null_space(h, tol)?;
    if v.ncols() != states.ncols() {
        return Err(Error::DegeneracyAnomaly {
            expected: states.ncols(),
            found: v.ncols(),
        });
    }
    let gap = span_distance(&v, states)?;
    if gap > 1e-8 {
        return Err(Error::Numerical(format!("supplied states miss the zero-mode space by {gap:e}")));
    }
    orthonormalize_ordered(h.nrows(), (0..states.ncols()).map(|j| column(states, j)).collect())
}

/// Left zero modes paired with `revs`: `levs = L ((L† revs)^{-1})†` for a basis `L` of `ker H†`.
pub fn biorthogonal_levs(revs: &CMatrix, h: &CMatrix, tol: f64) -> Result<CMatrix> {
    let l = linalg::null_space(&linalg::adjoint(h), tol)?;
    if l.ncols() != revs.ncols() {
        return Err(Error::DegeneracyAnomaly {
            expected: revs.ncols(),
            found: l.ncols(),
        });
    }
    let g = linalg::adjoint(&l) * revs;
    let ginv = linalg::inverse(&g)
        .map_err(|_| Error::Numerical("flat-band left/right subspaces orthogonal".into()))?;
    Ok(&l * linalg::adjoint(&ginv))
}

pub fn mode_basis(h: &CMatrix, expected: usize, tol: f64) -> Result<ModeBasis> {
    mode_basis_with(h, flatband_revs(h, expected, tol)?, tol)
}

/// Pairs the given orthonormal right zero modes with biorthogonal left ones.
pub fn mode_basis_with(h: &CMatrix, revs: CMatrix, tol: f64) -> Result<ModeBasis> {
    let levs = biorthogonal_levs(&revs, h, tol)?;
    let reports = |m: &CMatrix| -> Result<Vec<LocalizationReport>> {
        (0..m.ncols()).map(|j| localization_report(&column(m, j))).collect()
    };
    Ok(ModeBasis {
        rev_reports: reports(&revs)?,
        lev_reports: reports(&levs)?,
        revs,
        levs,
    })
}

/// Mode basis of the built-in open chain from the orthonormalized compact states, or
/// the generic echelon construction when `t2 + γ2 = 0`.
pub fn builtin_mode_basis(p: &ParamSet, cells: usize) -> Result<ModeBasis> {
    let h = obc_hamiltonian(&builtin_flatband3(), p, cells)?;
    let revs = match cls_basis(p, cells) {
        Ok(cls) => flatband_revs_from(&h, &cls, NULL_TOL)?,
        Err(Error::Precondition(_)) => flatband_revs(&h, cells, NULL_TOL)?,
        Err(e) => return Err(e),
    };
    mode_basis_with(&h, revs, NULL_TOL)
}

/// Max deviation of `levs† revs` from the identity.
pub fn biorthogonality_error(basis: &ModeBasis) -> f64 {
    let g = linalg::adjoint(&basis.levs) * &basis.revs;
    linalg::max_abs(&linalg::sub(&g, &linalg::identity(g.nrows())))
}

/// Compact localized zero modes of the built-in open chain, one per cell.
///
/// State `n` lives on `B_n`, `C_n`, `C_{n+1}` with amplitudes
/// `1, -(t1+γ1)/(t2+γ2), -t2/(t2+γ2)`; the last state drops `C_{n+1}`.
pub fn cls_basis(p: &ParamSet, cells: usize) -> Result<CMatrix> {
    let d = p.t2 + p.gamma2;
    if d == 0.0 {
        return Err(Error::Precondition(
            "unidirectional C-coupling (t2 + gamma2 = 0): CLS support degenerates".into(),
        ));
    }
    let h = obc_hamiltonian(&builtin_flatband3(), p, cells)?;
    let dim = 3 * cells;
    let mut out = linalg::zeros(dim, cells);
    let c_here = C64::new(-(p.t1 + p.gamma1) / d, 0.0);
    let c_next = C64::new(-p.t2 / d, 0.0);
    for n in 0..cells {
        out[(3 * n + 1, n)] = C64::new(1.0, 0.0);
        out[(3 * n + 2, n)] = c_here;
        if n + 1 < cells {
            out[(3 * (n + 1) + 2, n)] = c_next;
        }
    }
    let scale = linalg::max_abs(&h).max(1.0) * (1.0 + c_here.norm() + c_next.norm());
    for n in 0..cells {
        let res = linalg::norm(&linalg::matvec(&h, &column(&out, n)));
        if res > 1e-12 * scale {
            return Err(Error::Numerical(format!("compact state {n} has residual {res:e}")));
        }
    }
    Ok(out)
}

/// `‖P_a − P_b‖_max` for the orthogonal projectors onto the column spans of `a` and `b`.
pub fn span_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let proj = |m: &CMatrix| -> Result<CMatrix> {
        let gram = linalg::adjoint(m) * m;
        Ok(m * linalg::inverse(&gram)? * linalg::adjoint(m))
    };
    Ok(linalg::max_abs(&linalg::sub(&proj(a)?, &proj(b)?)))
}

/// `<u|v>` magnitudes between all pairs of columns.
pub fn gram_abs(m: &CMatrix) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<C64>> = (0..m.ncols()).map(|j| column(m, j)).collect();
    cols.iter().map(|u| cols.iter().map(|v| inner(u, v).norm()).collect()).collect()
}
