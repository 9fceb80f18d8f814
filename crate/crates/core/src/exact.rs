//! Exact rational matrices. Ranks use fraction-free (Bareiss) elimination on integer rows.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::expr::{rational_from_f64, Coef};
use crate::model::{builtin_flatband3, ModelSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigRational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigRational::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> BigRational) -> Self {
        let data = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| f(i, j)).collect();
        RationalMatrix { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigRational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: &BigRational) {
        self.data[i * self.cols + j] += v;
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]).clone())
    }

    pub fn mul(&self, o: &RationalMatrix) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Domain(format!(
                "shape mismatch {}x{} * {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        out.data[i * o.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `self − λ·I`
    pub fn shifted(&self, lambda: &BigRational) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m.data[i * self.cols + i] -= lambda;
        }
        m
    }

    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = Self::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.data.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Integer rows with denominators cleared; row scaling does not change the rank.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                let lcm = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                row.iter().map(|x| x.numer() * (&lcm / x.denom())).collect()
            })
            .collect()
    }

    pub fn rank(&self) -> usize {
        let mut a = self.integer_rows();
        let (m, n) = (self.rows, self.cols);
        let mut prev = BigInt::one();
        let mut r = 0;
        for c in 0..n {
            if r == m {
                break;
            }
            let Some(piv) = (r..m).find(|&i| !a[i][c].is_zero()) else {
                continue;
            };
            a.swap(r, piv);
            for i in r + 1..m {
                for j in c + 1..n {
                    let v = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                    // Bareiss: the division is exact
                    a[i][j] = v / &prev;
                }
                a[i][c] = BigInt::zero();
            }
            prev = a[r][c].clone();
            r += 1;
        }
        r
    }

    pub fn nullity(&self) -> usize {
        self.cols - self.rank()
    }
}

/// Exact real parameters of the built-in model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalParams {
    pub t1: BigRational,
    pub t2: BigRational,
    pub gamma1: BigRational,
    pub gamma2: BigRational,
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl RationalParams {
    pub fn new(t1: BigRational, t2: BigRational, gamma1: BigRational, gamma2: BigRational) -> Self {
        RationalParams { t1, t2, gamma1, gamma2 }
    }

    /// Rationals equal to the shortest decimal form of each float, so `-1.06` becomes `-53/50`.
    pub fn from_f64(t1: f64, t2: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let conv = |x: f64, name: &str| {
            rational_from_f64(x).ok_or_else(|| Error::Domain(format!("{name} = {x} is not finite")))
        };
        Ok(RationalParams {
            t1: conv(t1, "t1")?,
            t2: conv(t2, "t2")?,
            gamma1: conv(gamma1, "gamma1")?,
            gamma2: conv(gamma2, "gamma2")?,
        })
    }

    pub fn get(&self, name: &str) -> Option<BigRational> {
        match name {
            "t1" => Some(self.t1.clone()),
            "t2" => Some(self.t2.clone()),
            "gamma1" => Some(self.gamma1.clone()),
            "gamma2" => Some(self.gamma2.clone()),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> [f64; 4] {
        use num_traits::ToPrimitive;
        [&self.t1, &self.t2, &self.gamma1, &self.gamma2].map(|x| x.to_f64().unwrap_or(f64::NAN))
    }
}

fn real_block(block: &[Vec<Coef>], label: &str) -> Result<Vec<Vec<BigRational>>> {
    block
        .iter()
        .map(|row| {
            row.iter()
                .map(|c| {
                    if c.im.is_zero() {
                        Ok(c.re.clone())
                    } else {
                        Err(Error::Domain(format!("{label} has a complex entry; exact path is real-only")))
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact open-chain matrix, assembled exactly as the floating-point path.
pub fn obc_exact_for(spec: &ModelSpec, p: &RationalParams, cells: usize) -> Result<RationalMatrix> {
    if cells < 2 {
        return Err(Error::Domain(format!("open chain needs at least 2 cells, got {cells}")));
    }
    let [h0, tp, tm] = spec.bind_exact(&|name| p.get(name))?;
    let (h0, tp, tm) = (real_block(&h0, "H0")?, real_block(&tp, "Tplus")?, real_block(&tm, "Tminus")?);
    let nb = spec.bands;
    let mut m = RationalMatrix::zeros(nb * cells, nb * cells);
    let mut put = |ci: usize, cj: usize, blk: &Vec<Vec<BigRational>>| {
        for r in 0..nb {
            for s in 0..nb {
                if !blk[s][r].is_zero() {
                    m.add_at(ci * nb + r, cj * nb + s, &blk[s][r]);
                }
            }
        }
    };
    for c in 0..cells {
        put(c, c, &h0);
    }
    for c in 0..cells - 1 {
        put(c, c + 1, &tm);
        put(c + 1, c, &tp);
    }
    Ok(m)
}

pub fn obc_exact(p: &RationalParams, cells: usize) -> Result<RationalMatrix> {
    obc_exact_for(&builtin_flatband3(), p, cells)
}

/// `dim ker H_OBC` in exact arithmetic.
pub fn exact_null_dim(p: &RationalParams, cells: usize) -> Result<usize> {
    Ok(obc_exact(p, cells)?.nullity())
}

/// Off-diagonal blocks of the chiral split: `X` couples A rows to B/C columns, `Y` the reverse.
pub fn chiral_blocks(h: &RationalMatrix, bands: usize) -> (RationalMatrix, RationalMatrix) {
    let cells = h.rows / bands;
    let a: Vec<usize> = (0..cells).map(|c| c * bands).collect();
    let bc: Vec<usize> = (0..h.rows).filter(|i| i % bands != 0).collect();
    (h.select(&a, &bc), h.select(&bc, &a))
}

/// `dim ker X + dim ker Y`, valid when the A–A and B/C–B/C blocks vanish.
pub fn block_null_dim(p: &RationalParams, cells: usize) -> Result<usize> {
    let h = obc_exact(p, cells)?;
    let (x, y) = chiral_blocks(&h, 3);
    Ok(x.nullity() + y.nullity())
}
