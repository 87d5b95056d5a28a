//! JSON experiment configuration (`"schema": 1`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{QuadratureSpec, TheoremId};
use crate::error::{Error, Result};
use crate::grid::{BlockIndex, Grid};
use crate::moduli::{LpMetric, McFunctionMulti, McFunctionUni, PowerTerm};
use crate::spline::DerivOrder;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SAMPLES: usize = 9;
pub const DEFAULT_AXIOM_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaConfig {
    /// `sum_i min(K_i t_i^{a_i}, C_i)`; caps are optional.
    PowerSum {
        weights: Vec<f64>,
        exponents: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        caps: Option<Vec<Option<f64>>>,
    },
    /// Univariate `min(K t^a, C)`.
    Power {
        weight: f64,
        exponent: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cap: Option<f64>,
    },
}

/// A validated majorant, either per-axis or radial.
#[derive(Debug, Clone, PartialEq)]
pub enum Omega {
    Multi(McFunctionMulti),
    Uni(McFunctionUni),
}

impl OmegaConfig {
    pub fn build(&self) -> Result<Omega> {
        match self {
            OmegaConfig::PowerSum { weights, exponents, caps } => {
                if weights.len() != exponents.len() {
                    return Err(Error::Config(format!(
                        "omega: {} weights but {} exponents",
                        weights.len(),
                        exponents.len()
                    )));
                }
                let caps = match caps {
                    Some(c) if c.len() != weights.len() => {
                        return Err(Error::Config(format!(
                            "omega: {} caps for {} axes",
                            c.len(),
                            weights.len()
                        )))
                    }
                    Some(c) => c.clone(),
                    None => vec![None; weights.len()],
                };
                let terms = weights
                    .iter()
                    .zip(exponents)
                    .zip(caps)
                    .map(|((&k, &a), c)| PowerTerm::new(k, a, c))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Omega::Multi(McFunctionMulti::new(terms)?))
            }
            OmegaConfig::Power { weight, exponent, cap } => {
                Ok(Omega::Uni(McFunctionUni::new(PowerTerm::new(*weight, *exponent, *cap)?)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSource {
    /// The extremal function of the configured theorem.
    #[default]
    Extremal,
    Preset { name: String },
    /// `deriv` is required when `r` is non-zero unless the finite-difference
    /// fallback is enabled.
    Expr {
        expr: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        deriv: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_axiom_samples() -> usize {
    DEFAULT_AXIOM_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub theorem: TheoremId,
    pub m: Vec<usize>,
    pub omega: OmegaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<u8>>,
    #[serde(default)]
    pub function: FunctionSource,
    /// Lattice points per axis per block; odd and at least 3.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Support block of the T1/T2 extremal bump. Defaults to the origin block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<Vec<usize>>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_axiom_samples")]
    pub axiom_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the required fields.
    pub fn new(theorem: TheoremId, m: Vec<usize>, omega: OmegaConfig) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            theorem,
            m,
            omega,
            p: None,
            r: None,
            function: FunctionSource::Extremal,
            samples: DEFAULT_SAMPLES,
            block: None,
            quadrature: QuadratureSpec::default(),
            axiom_samples: DEFAULT_AXIOM_SAMPLES,
            out: None,
            format: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema {}; expected {SCHEMA_VERSION}",
                cfg.schema
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(&self.m)
    }

    pub fn order(&self) -> Result<DerivOrder> {
        match &self.r {
            None => Ok(DerivOrder::zero(self.m.len())),
            Some(r) if r.len() != self.m.len() => Err(Error::Config(format!(
                "r has {} entries but m has {}",
                r.len(),
                self.m.len()
            ))),
            Some(r) => DerivOrder::new(r),
        }
    }

    pub fn metric(&self) -> Result<LpMetric> {
        match self.p {
            Some(p) => LpMetric::new(p),
            None => Err(Error::Config(format!("theorem {} needs p", self.theorem))),
        }
    }

    pub fn block_index(&self) -> Option<BlockIndex> {
        self.block.clone().map(BlockIndex)
    }

    /// Checks cross-field consistency. Parameter ranges are left to the
    /// owning modules.
    pub fn validate(&self) -> Result<()> {
        if self.samples < 3 || self.samples % 2 == 0 {
            return Err(Error::Config(format!(
                "samples must be odd and at least 3, got {}",
                self.samples
            )));
        }
        let r = self.order()?;
        let needs_uni = matches!(self.theorem, TheoremId::T2 | TheoremId::T5);
        match (&self.omega, needs_uni) {
            (OmegaConfig::PowerSum { .. }, true) => {
                return Err(Error::Config(format!(
                    "theorem {} needs omega kind \"power\"",
                    self.theorem
                )))
            }
            (OmegaConfig::Power { .. }, false) => {
                return Err(Error::Config(format!(
                    "theorem {} needs omega kind \"power-sum\"",
                    self.theorem
                )))
            }
            _ => {}
        }
        if needs_uni {
            self.metric()?;
        }
        if matches!(self.theorem, TheoremId::T1 | TheoremId::T2) && !r.is_zero() {
            return Err(Error::Config(format!(
                "theorem {} is for r = 0; use {} for derivatives",
                self.theorem,
                if needs_uni { "T5" } else { "T4" }
            )));
        }
        if self.block.is_some() && !r.is_zero() {
            return Err(Error::Config("block only applies to r = 0 extremals".into()));
        }
        self.quadrature.validate()
    }
}
