//! Thin dense complex linear-algebra layer over `faer`.
//!
//! Everything downstream works with [`CMatrix`] (a `faer::Mat<Complex64>`) and
//! goes through the helpers here, so the decomposition backend stays in one place.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn from_real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMatrix {
    Mat::from_fn(rows, cols, |i, j| C64::new(f(i, j), 0.0))
}

pub fn from_diag(values: &[C64]) -> CMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.adjoint().to_owned()
}

pub fn transpose(a: &CMatrix) -> CMatrix {
    a.transpose().to_owned()
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b
}

pub fn scale(a: &CMatrix, s: C64) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn sub(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a - b
}

/// `a - shift * I`
pub fn shifted(a: &CMatrix, shift: C64) -> CMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        if i == j {
            a[(i, j)] - shift
        } else {
            a[(i, j)]
        }
    })
}

pub fn max_abs(a: &CMatrix) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn frobenius(a: &CMatrix) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn is_finite(a: &CMatrix) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

pub fn column(a: &CMatrix, j: usize) -> Vec<C64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn from_columns(rows: usize, cols: &[Vec<C64>]) -> CMatrix {
    Mat::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

pub fn matvec(a: &CMatrix, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect()
}

/// `<u|v>` with the conjugate on `u`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[C64]) -> Vec<C64> {
    let n = norm(v);
    v.iter().map(|x| x / n).collect()
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> Result<usize> {
    let s = singular_values(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&x| x > rel_tol * smax).count())
}

/// Orthonormal basis (as columns) of the right null space `{x : A x = 0}`,
/// using singular values below `rel_tol * sigma_max`.
pub fn null_space(a: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(identity(n));
    }
    let svd = a
        .svd()
        .map_err(|e| Error::Numerical(format!("singular value decomposition failed: {e:?}")))?;
    let s = svd.S();
    let k = a.nrows().min(n);
    let smax = if k > 0 { s[0].re } else { 0.0 };
    let rank = if smax == 0.0 {
        0
    } else {
        (0..k).filter(|&i| s[i].re > rel_tol * smax).count()
    };
    let v = svd.V();
    Ok(Mat::from_fn(n, n - rank, |i, j| v[(i, rank + j)]))
}

/// Eigen-decomposition of a general complex matrix. Eigenvectors are unit-norm columns.
pub fn eigen(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    if !is_finite(a) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let n = a.nrows();
    let evd = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigenvalue iteration did not converge: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let mut vecs = u.to_owned();
    for j in 0..n {
        let nrm: f64 = (0..n).map(|i| vecs[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        if nrm > 0.0 {
            for i in 0..n {
                vecs[(i, j)] /= nrm;
            }
        }
    }
    Ok((values, vecs))
}

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if !is_finite(a) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue iteration did not converge: {e:?}")))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let n = a.nrows();
    let s = evd.S();
    Ok(((0..n).map(|i| s[i].re).collect(), evd.U().to_owned()))
}

/// Solves `A X = B` by partially pivoted LU. Fails on an exactly zero or non-finite pivot;
/// ill-conditioned systems are solved as-is since non-normal resolvents are legitimately tiny-pivoted.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !is_finite(a) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let n = a.nrows();
    if (0..n).any(|i| u[(i, i)].norm() == 0.0) {
        return Err(Error::Domain("linear system is singular".into()));
    }
    let x = lu.solve(b);
    if !is_finite(&x) {
        return Err(Error::Numerical("linear solve produced non-finite values".into()));
    }
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &identity(a.nrows()))
}

pub fn determinant(a: &CMatrix) -> C64 {
    a.determinant()
}

/// Submatrix with the given row and column index lists.
pub fn select(a: &CMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    Mat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}

pub fn matrix_power(a: &CMatrix, k: usize) -> CMatrix {
    let mut out = identity(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}
