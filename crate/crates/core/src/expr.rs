//! Affine expressions over named real parameters with exact rational coefficients.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*' factor) | ('/' number))*
//! factor := number | 'i' | identifier
//! number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]
//! ```
//!
//! Each term may reference at most one parameter. `i` is the imaginary unit.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact complex rational coefficient `re + i*im`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Coef {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coef {
    pub fn real(re: BigRational) -> Self {
        Coef {
            re,
            im: BigRational::zero(),
        }
    }

    fn one() -> Self {
        Coef::real(BigRational::one())
    }

    fn i() -> Self {
        Coef {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn mul(&self, o: &Coef) -> Coef {
        Coef {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    fn add_assign(&mut self, o: &Coef) {
        self.re += &o.re;
        self.im += &o.im;
    }

    fn neg(&self) -> Coef {
        Coef {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// `constant + sum_j coef_j * param_j`
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct AffineExpr {
    pub constant: Coef,
    /// Keyed by parameter name; zero coefficients are never stored.
    pub terms: BTreeMap<String, Coef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

impl AffineExpr {
    pub fn zero() -> Self {
        AffineExpr::default()
    }

    pub fn constant(value: BigRational) -> Self {
        AffineExpr {
            constant: Coef::real(value),
            terms: BTreeMap::new(),
        }
    }

    pub fn param(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_string(), Coef::one());
        AffineExpr {
            constant: Coef::default(),
            terms,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn params(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// `self + sign * other`
    pub fn combine(mut self, other: &AffineExpr, sign: i32) -> Self {
        let flip = |c: &Coef| if sign < 0 { c.neg() } else { c.clone() };
        self.constant.add_assign(&flip(&other.constant));
        for (name, c) in &other.terms {
            let entry = self.terms.entry(name.clone()).or_default();
            entry.add_assign(&flip(c));
        }
        self.terms.retain(|_, c| !c.is_zero());
        self
    }

    /// Numeric value; `lookup` returns `None` for unbound names, which are reported back.
    pub fn eval(&self, lookup: impl Fn(&str) -> Option<f64>) -> Result<Complex64, String> {
        let mut acc = self.constant.to_c64();
        for (name, c) in &self.terms {
            let v = lookup(name).ok_or_else(|| name.clone())?;
            acc += c.to_c64() * v;
        }
        Ok(acc)
    }

    /// Exact value for real rational parameters.
    pub fn eval_exact(
        &self,
        lookup: impl Fn(&str) -> Option<BigRational>,
    ) -> Result<Coef, String> {
        let mut acc = self.constant.clone();
        for (name, c) in &self.terms {
            let v = lookup(name).ok_or_else(|| name.clone())?;
            acc.add_assign(&c.mul(&Coef::real(v)));
        }
        Ok(acc)
    }

    pub fn parse(src: &str) -> Result<Self, ExprError> {
        Parser::new(src).parse_expr()
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Emits `(sign, magnitude-term)` pieces for one coefficient times an optional name.
fn pieces(c: &Coef, name: Option<&str>) -> Vec<(bool, String)> {
    let mut out = Vec::new();
    for (part, imag) in [(&c.re, false), (&c.im, true)] {
        if part.is_zero() {
            continue;
        }
        let neg = part.is_negative();
        let mag = part.abs();
        let mut factors: Vec<String> = Vec::new();
        if !mag.is_one() || (name.is_none() && !imag) {
            factors.push(fmt_rational(&mag));
        }
        if imag {
            factors.push("i".into());
        }
        if let Some(n) = name {
            factors.push(n.to_string());
        }
        out.push((neg, factors.join("*")));
    }
    out
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut all = pieces(&self.constant, None);
        for (name, c) in &self.terms {
            all.extend(pieces(c, Some(name)));
        }
        if all.is_empty() {
            return write!(f, "0");
        }
        for (idx, (neg, body)) in all.iter().enumerate() {
            match (idx, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => write!(f, "{body}")?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}

/// Exact rational from a decimal literal such as `1.06`, `3e-2`, or `7`.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(p) => (&s[..p], s[p + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(p) => (&mantissa[..p], &mantissa[p + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    Some(if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    })
}

/// Exact rational from an `f64`, via its shortest round-trip decimal representation.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let s = format!("{:e}", x.abs());
    let r = parse_decimal(&s)?;
    Some(if x < 0.0 { -r } else { r })
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn parse_expr(mut self) -> Result<AffineExpr, ExprError> {
        self.skip_ws();
        if self.peek().is_none() {
            return Err(self.err("empty expression"));
        }
        let mut acc = AffineExpr::zero();
        let mut sign = 1;
        if let Some(c @ ('+' | '-')) = self.peek() {
            sign = if c == '-' { -1 } else { 1 };
            self.pos += 1;
        }
        loop {
            let t = self.parse_term()?;
            acc = acc.combine(&t, sign);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => sign = 1,
                Some('-') => sign = -1,
                Some(c) => return Err(self.err(format!("unexpected character '{c}'"))),
            }
            self.pos += 1;
        }
        Ok(acc)
    }

    fn parse_term(&mut self) -> Result<AffineExpr, ExprError> {
        let mut coef = Coef::one();
        let mut name: Option<String> = None;
        let mut absorb = |f: Factor, p: &Parser| -> Result<(), ExprError> {
            match f {
                Factor::Number(r) => coef = coef.mul(&Coef::real(r)),
                Factor::Imag => coef = coef.mul(&Coef::i()),
                Factor::Name(n) => {
                    if name.is_some() {
                        return Err(p.err("a term may contain at most one parameter (affine only)"));
                    }
                    name = Some(n);
                }
            }
            Ok(())
        };
        let f = self.parse_factor()?;
        absorb(f, self)?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let f = self.parse_factor()?;
                    absorb(f, self)?;
                }
                Some('/') => {
                    self.pos += 1;
                    match self.parse_factor()? {
                        Factor::Number(r) if !r.is_zero() => {
                            absorb(Factor::Number(BigRational::one() / r), self)?
                        }
                        Factor::Number(_) => return Err(self.err("division by zero")),
                        _ => return Err(self.err("only numeric divisors are allowed")),
                    }
                }
                _ => break,
            }
        }
        Ok(match name {
            Some(n) => {
                let mut terms = BTreeMap::new();
                if !coef.is_zero() {
                    terms.insert(n, coef);
                }
                AffineExpr {
                    constant: Coef::default(),
                    terms,
                }
            }
            None => AffineExpr {
                constant: coef,
                terms: BTreeMap::new(),
            },
        })
    }

    fn parse_factor(&mut self) -> Result<Factor, ExprError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let bytes = self.src.as_bytes();
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut e = end + 1;
                    if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                        e += 1;
                    }
                    if e < bytes.len() && bytes[e].is_ascii_digit() {
                        while e < bytes.len() && bytes[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let lit = &self.src[start..end];
                self.pos = end;
                parse_decimal(lit)
                    .map(Factor::Number)
                    .ok_or_else(|| ExprError {
                        offset: start,
                        message: format!("invalid number '{lit}'"),
                    })
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let rest = &self.src[self.pos..];
                let len = rest
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .unwrap_or(rest.len());
                let ident = &rest[..len];
                self.pos += len;
                if ident == "i" {
                    Ok(Factor::Imag)
                } else {
                    Ok(Factor::Name(ident.to_string()))
                }
            }
            Some(c) => Err(self.err(format!("unexpected character '{c}'"))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

enum Factor {
    Number(BigRational),
    Imag,
    Name(String),
}
