//! Lattice models as data, and the Bloch / non-Bloch / ring / open-chain matrices built from them.
//!
//! Real-space convention: a site row `r` of cell `n` carries the amplitude equation
//! for that site, so the intra-cell block is `H0^T`, the block coupling cell `n` to
//! cell `n+1` is `Tminus^T` and the block coupling `n+1` to `n` is `Tplus^T`. The
//! ring spectrum is the union of Bloch spectra (transposition keeps eigenvalues), and
//! for the built-in model the inter-cell entries sit at `[(n,B),(n+1,A)]` and `[(n+1,A),(n,B)]`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{AffineExpr, Coef};
use crate::linalg::{zeros, CMatrix, C64};

/// Concrete parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub t1: f64,
    pub t2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl ParamSet {
    pub fn new(t1: f64, t2: f64, gamma1: f64, gamma2: f64) -> Self {
        ParamSet {
            t1,
            t2,
            gamma1,
            gamma2,
            extras: BTreeMap::new(),
        }
    }

    /// `t1 = -1.06`, `t2 = -0.3` with the given non-reciprocal strengths.
    pub fn reference(gamma1: f64, gamma2: f64) -> Self {
        ParamSet::new(-1.06, -0.3, gamma1, gamma2)
    }

    pub fn with_gammas(&self, gamma1: f64, gamma2: f64) -> Self {
        ParamSet {
            gamma1,
            gamma2,
            ..self.clone()
        }
    }

    pub fn with_extra(mut self, name: &str, value: f64) -> Self {
        self.extras.insert(name.to_string(), value);
        self
    }

    /// Every declared parameter at its default value; the four standard names fall back to 0.
    pub fn from_defaults(spec: &ModelSpec) -> Self {
        let mut p = ParamSet::new(0.0, 0.0, 0.0, 0.0);
        for d in &spec.params {
            p.set(&d.name, d.default);
        }
        p
    }

    pub fn set(&mut self, name: &str, value: f64) {
        match name {
            "t1" => self.t1 = value,
            "t2" => self.t2 = value,
            "gamma1" => self.gamma1 = value,
            "gamma2" => self.gamma2 = value,
            _ => {
                self.extras.insert(name.to_string(), value);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "t1" => Some(self.t1),
            "t2" => Some(self.t2),
            "gamma1" => Some(self.gamma1),
            "gamma2" => Some(self.gamma2),
            _ => self.extras.get(name).copied(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [("t1", self.t1), ("t2", self.t2), ("gamma1", self.gamma1), ("gamma2", self.gamma2)];
        for (n, v) in all.into_iter().chain(self.extras.iter().map(|(k, v)| (k.as_str(), *v))) {
            if !v.is_finite() {
                return Err(Error::Config(format!("parameter {n} is not finite ({v})")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub name: String,
    pub default: f64,
}

pub type Block = Vec<Vec<AffineExpr>>;

/// One unit cell of a 1D nearest-cell lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub bands: usize,
    pub params: Vec<ParamDecl>,
    pub h0: Block,
    /// multiplies `e^{ik}`
    pub tplus: Block,
    /// multiplies `e^{-ik}`
    pub tminus: Block,
}

/// Numeric blocks after binding a [`ParamSet`].
#[derive(Clone, Debug)]
pub struct BoundBlocks {
    pub h0: CMatrix,
    pub tplus: CMatrix,
    pub tminus: CMatrix,
}

impl BoundBlocks {
    pub fn bands(&self) -> usize {
        self.h0.nrows()
    }
}

fn block_from(rows: &[&[&str]]) -> Block {
    rows.iter()
        .map(|r| r.iter().map(|s| AffineExpr::parse(s).expect("builtin expression")).collect())
        .collect()
}

/// Three-band flat-band chain with sites (A, B, C) per cell.
pub fn builtin_flatband3() -> ModelSpec {
    let decl = |name: &str, default: f64| ParamDecl {
        name: name.into(),
        default,
    };
    ModelSpec {
        bands: 3,
        params: vec![
            decl("t1", -1.06),
            decl("t2", -0.3),
            decl("gamma1", 0.5),
            decl("gamma2", 0.32),
        ],
        h0: block_from(&[
            &["0", "t1 - gamma1", "t2 - gamma2"],
            &["t1 + gamma1", "0", "0"],
            &["t2 + gamma2", "0", "0"],
        ]),
        tplus: block_from(&[&["0", "0", "0"], &["t2", "0", "0"], &["0", "0", "0"]]),
        tminus: block_from(&[&["0", "t2", "0"], &["0", "0", "0"], &["0", "0", "0"]]),
    }
}

impl ModelSpec {
    pub fn blocks(&self) -> [(&'static str, &Block); 3] {
        [("H0", &self.h0), ("Tplus", &self.tplus), ("Tminus", &self.tminus)]
    }

    pub fn is_builtin_flatband3(&self) -> bool {
        *self == builtin_flatband3()
    }

    fn validate(&self) -> Result<()> {
        if self.bands == 0 {
            return Err(Error::parse("bands", "must be a positive integer"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, d) in self.params.iter().enumerate() {
            let ok_ident = d.name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && d.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && d.name != "i";
            if !ok_ident {
                return Err(Error::parse(format!("params[{i}].name"), format!("invalid parameter name '{}'", d.name)));
            }
            if !d.default.is_finite() {
                return Err(Error::parse(format!("params[{i}].default"), "default must be finite"));
            }
            if !seen.insert(d.name.as_str()) {
                return Err(Error::parse(format!("params[{i}].name"), format!("duplicate parameter '{}'", d.name)));
            }
        }
        for (label, block) in self.blocks() {
            if block.len() != self.bands {
                return Err(Error::parse(
                    label,
                    format!("expected {} rows, found {}", self.bands, block.len()),
                ));
            }
            for (r, row) in block.iter().enumerate() {
                if row.len() != self.bands {
                    return Err(Error::parse(
                        format!("{label}[{r}]"),
                        format!("expected {} columns, found {}", self.bands, row.len()),
                    ));
                }
                for (c, e) in row.iter().enumerate() {
                    if let Some(unknown) = e.params().find(|n| !seen.contains(n)) {
                        return Err(Error::parse(
                            format!("{label}[{r}][{c}]"),
                            format!("unknown parameter name '{unknown}'"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn bind(&self, p: &ParamSet) -> Result<BoundBlocks> {
        p.validate()?;
        let b = self.bands;
        let eval = |label: &str, block: &Block| -> Result<CMatrix> {
            let mut m = zeros(b, b);
            for (r, row) in block.iter().enumerate() {
                for (c, e) in row.iter().enumerate() {
                    m[(r, c)] = e.eval(|n| p.get(n)).map_err(|name| {
                        Error::Config(format!("parameter '{name}' used in {label}[{r}][{c}] is not bound"))
                    })?;
                }
            }
            Ok(m)
        };
        Ok(BoundBlocks {
            h0: eval("H0", &self.h0)?,
            tplus: eval("Tplus", &self.tplus)?,
            tminus: eval("Tminus", &self.tminus)?,
        })
    }

    /// Exact evaluation of the three blocks for rational parameter values.
    pub fn bind_exact(
        &self,
        lookup: &dyn Fn(&str) -> Option<BigRational>,
    ) -> Result<[Vec<Vec<Coef>>; 3]> {
        let eval = |label: &str, block: &Block| -> Result<Vec<Vec<Coef>>> {
            block
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, e)| {
                            e.eval_exact(lookup).map_err(|name| {
                                Error::Config(format!("parameter '{name}' used in {label}[{r}][{c}] is not bound"))
                            })
                        })
                        .collect()
                })
                .collect()
        };
        Ok([eval("H0", &self.h0)?, eval("Tplus", &self.tplus)?, eval("Tminus", &self.tminus)?])
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            bands: self.bands,
            params: self.params.clone(),
            h0: render(&self.h0),
            tplus: render(&self.tplus),
            tminus: render(&self.tminus),
        };
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }
}

fn render(block: &Block) -> Vec<Vec<String>> {
    block.iter().map(|r| r.iter().map(|e| e.to_string()).collect()).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    bands: usize,
    params: Vec<ParamDecl>,
    #[serde(rename = "H0")]
    h0: Vec<Vec<String>>,
    #[serde(rename = "Tplus")]
    tplus: Vec<Vec<String>>,
    #[serde(rename = "Tminus")]
    tminus: Vec<Vec<String>>,
}

/// Parses and validates a JSON model document.
pub fn load_model_spec(text: &str) -> Result<ModelSpec> {
    let doc: ModelDocument = serde_json::from_str(text)
        .map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
    let parse_block = |label: &str, rows: &[Vec<String>]| -> Result<Block> {
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, s)| {
                        AffineExpr::parse(s).map_err(|e| {
                            Error::parse(format!("{label}[{r}][{c}] offset {}", e.offset), e.message)
                        })
                    })
                    .collect()
            })
            .collect()
    };
    let spec = ModelSpec {
        bands: doc.bands,
        params: doc.params,
        h0: parse_block("H0", &doc.h0)?,
        tplus: parse_block("Tplus", &doc.tplus)?,
        tminus: parse_block("Tminus", &doc.tminus)?,
    };
    spec.validate()?;
    Ok(spec)
}

/// `H(β) = H0 + Tplus β + Tminus / β` on bound blocks.
pub fn nonbloch_from_blocks(b: &BoundBlocks, beta: C64) -> Result<CMatrix> {
    if beta.norm() == 0.0 || !beta.re.is_finite() || !beta.im.is_finite() {
        return Err(Error::Domain(format!("beta must be finite and nonzero, got {beta}")));
    }
    let inv = beta.inv();
    let n = b.bands();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        b.h0[(i, j)] + b.tplus[(i, j)] * beta + b.tminus[(i, j)] * inv
    }))
}

pub fn bloch_hamiltonian(spec: &ModelSpec, p: &ParamSet, k: f64) -> Result<CMatrix> {
    if !k.is_finite() {
        return Err(Error::Domain(format!("k must be finite, got {k}")));
    }
    nonbloch_from_blocks(&spec.bind(p)?, C64::from_polar(1.0, k))
}

pub fn nonbloch_hamiltonian(spec: &ModelSpec, p: &ParamSet, beta: C64) -> Result<CMatrix> {
    nonbloch_from_blocks(&spec.bind(p)?, beta)
}

/// Real-space assembly on bound blocks; `periodic` adds the wrap-around blocks.
pub fn real_space_from_blocks(b: &BoundBlocks, cells: usize, periodic: bool) -> CMatrix {
    let nb = b.bands();
    let mut m = zeros(nb * cells, nb * cells);
    let mut put = |ci: usize, cj: usize, blk: &CMatrix| {
        for r in 0..nb {
            for s in 0..nb {
                m[(ci * nb + r, cj * nb + s)] += blk[(s, r)];
            }
        }
    };
    for c in 0..cells {
        put(c, c, &b.h0);
    }
    for c in 0..cells.saturating_sub(1) {
        put(c, c + 1, &b.tminus);
        put(c + 1, c, &b.tplus);
    }
    if periodic {
        put(cells - 1, 0, &b.tminus);
        put(0, cells - 1, &b.tplus);
    }
    m
}

pub fn obc_hamiltonian(spec: &ModelSpec, p: &ParamSet, cells: usize) -> Result<CMatrix> {
    if cells < 2 {
        return Err(Error::Domain(format!("open chain needs at least 2 cells, got {cells}")));
    }
    Ok(real_space_from_blocks(&spec.bind(p)?, cells, false))
}

pub fn pbc_ring_hamiltonian(spec: &ModelSpec, p: &ParamSet, cells: usize) -> Result<CMatrix> {
    if cells < 3 {
        return Err(Error::Domain(format!("ring needs at least 3 cells, got {cells}")));
    }
    Ok(real_space_from_blocks(&spec.bind(p)?, cells, true))
}

/// Row index of `orbital` in `cell` (both 0-based) in the cell-major site ordering.
pub fn site_index(bands: usize, cell: usize, orbital: usize) -> usize {
    cell * bands + orbital
}
