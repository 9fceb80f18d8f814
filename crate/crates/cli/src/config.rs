use std::collections::BTreeMap;
use std::path::PathBuf;

use fbse_core::model::{builtin_flatband3, load_model_spec, ModelSpec, ParamSet};
use fbse_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    PhaseMap,
    Response,
    Scaling,
    Modes,
    Gbz,
    EpScan,
    Qdist,
    Transform,
    EmitModel,
    JordanLocus,
    Multiplicity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::PhaseMap => "phase-map",
            Command::Response => "response",
            Command::Scaling => "scaling",
            Command::Modes => "modes",
            Command::Gbz => "gbz",
            Command::EpScan => "ep-scan",
            Command::Qdist => "qdist",
            Command::Transform => "transform",
            Command::EmitModel => "emit-model",
            Command::JordanLocus => "jordan-locus",
            Command::Multiplicity => "multiplicity",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Projector,
}

/// `min:max:n` sampling of one axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64)
            .collect()
    }

    fn parse(s: &str) -> Result<Axis> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("axis '{s}' is not min:max:n"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let a = Axis { min, max, n };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.n == 0 || (self.n > 1 && !(self.max > self.min)) {
            return Err(Error::Config(format!("invalid axis {}:{}:{}", self.min, self.max, self.n)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub gamma1: Axis,
    pub gamma2: Axis,
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `g1min:g1max:n,g2min:g2max:n`
    fn from_str(s: &str) -> Result<Grid> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| Error::Config(format!("grid '{s}' needs two comma-separated axes")))?;
        Ok(Grid {
            gamma1: Axis::parse(a)?,
            gamma2: Axis::parse(b)?,
        })
    }
}

/// Everything a run depends on. Saved in `manifest.json`; feeding it back reproduces the outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    /// `builtin` or a path to a model-spec JSON file
    pub model: String,
    pub params: BTreeMap<String, f64>,
    pub cells: usize,
    pub kpoints: usize,
    pub grid: Option<Grid>,
    pub eta: f64,
    pub method: Method,
    pub source_site: usize,
    pub sizes: Vec<usize>,
    pub delta_beta: Vec<f64>,
    pub dtheta_points: usize,
    pub draws: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn is_builtin(&self) -> bool {
        self.model == "builtin"
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        if self.is_builtin() {
            return Ok(builtin_flatband3());
        }
        let text = std::fs::read_to_string(&self.model)
            .map_err(|e| Error::Config(format!("cannot read model file {}: {e}", self.model)))?;
        load_model_spec(&text)
    }

    pub fn param_set(&self) -> Result<ParamSet> {
        let mut p = ParamSet::new(0.0, 0.0, 0.0, 0.0);
        for (k, v) in &self.params {
            p.set(k, *v);
        }
        p.validate()?;
        Ok(p)
    }

    pub fn require_builtin(&self) -> Result<()> {
        if self.is_builtin() {
            Ok(())
        } else {
            Err(Error::Config(format!("{} works on the built-in model only", self.command.name())))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kpoints < 64 {
            return Err(Error::Config(format!("kpoints must be at least 64, got {}", self.kpoints)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if let Some(g) = &self.grid {
            g.gamma1.validate()?;
            g.gamma2.validate()?;
        }
        if self.delta_beta.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::Config("delta-beta values must be positive".into()));
        }
        if self.dtheta_points == 0 {
            return Err(Error::Config("dtheta-points must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        #[derive(Deserialize)]
        struct Wrapped {
            config: RunConfig,
        }
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        // accept a bare config or a manifest that embeds one
        let cfg = if value.get("config").is_some() {
            serde_json::from_value::<Wrapped>(value).map(|w| w.config)
        } else {
            serde_json::from_value::<RunConfig>(value)
        };
        let cfg = cfg.map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Per-command defaults for the cell count and γ grid.
pub fn default_cells(cmd: Command) -> usize {
    match cmd {
        Command::Gbz => 40,
        Command::EpScan | Command::Multiplicity | Command::Transform => 12,
        Command::JordanLocus => 4,
        _ => 20,
    }
}

pub fn default_grid(cmd: Command) -> Option<Grid> {
    let axis = |min, max, n| Axis { min, max, n };
    match cmd {
        Command::PhaseMap => Some(Grid {
            gamma1: axis(0.0, 2.0, 41),
            gamma2: axis(0.0, 2.0, 41),
        }),
        Command::EpScan => Some(Grid {
            gamma1: axis(0.5, 0.5, 1),
            gamma2: axis(0.0, 2.0, 2001),
        }),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0:2:41,0.5:1:3".parse().unwrap();
        assert_eq!(g.gamma1.values().len(), 41);
        assert_eq!(g.gamma2.values(), vec![0.5, 0.75, 1.0]);
        assert_eq!("0.5:0.5:1,0:1:2".parse::<Grid>().unwrap().gamma1.values(), vec![0.5]);
        assert!("0:2:41".parse::<Grid>().is_err());
        assert!("0:2:x,0:1:2".parse::<Grid>().is_err());
        assert!("2:0:5,0:1:2".parse::<Grid>().is_err());
    }
}
