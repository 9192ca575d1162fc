//! Scenario files: marginals, target correlation and run parameters in TOML.
//!
//! ```toml
//! horizon = 1.0
//! periods = 7
//! n_paths = 100000
//! seed = 20240501
//! correlation = [[1.0, 0.7], [0.7, 1.0]]
//!
//! [[marginals]]
//! type = "negative_binomial"
//! mean = 5.0
//! variance = 30.0
//!
//! [[marginals]]
//! type = "poisson"
//! mean = 5.0
//! ```
//!
//! Marginal `mean`/`variance` are those of the count at the horizon;
//! `lambda`, `(r, b)` and mixture atoms are given per unit time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{calibrate, CalibratedModel};
use crate::distributions::{
    MixedPoissonDistribution, StructureDistribution, DEFAULT_TRUNCATION_TOL,
};
use crate::ejd::CorrelationMatrix;
use crate::error::{Error, Result};

fn default_periods() -> u32 {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TRUNCATION_TOL
}

fn default_grid_points() -> u32 {
    10
}

/// One marginal process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Poisson {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    NegativeBinomial {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
    /// Finite mixture of intensities `[lambda, weight]`.
    Mixture { atoms: Vec<[f64; 2]> },
}

impl MarginalSpec {
    fn numbers(&self) -> Vec<f64> {
        match self {
            MarginalSpec::Poisson { mean, lambda } => [mean, lambda].iter().filter_map(|v| **v).collect(),
            MarginalSpec::NegativeBinomial { mean, variance, r, b } => {
                [mean, variance, r, b].iter().filter_map(|v| **v).collect()
            }
            MarginalSpec::Mixture { atoms } => atoms.iter().flatten().copied().collect(),
        }
    }

    /// Count law at `horizon`.
    pub fn to_distribution(&self, horizon: f64) -> Result<MixedPoissonDistribution> {
        let structure = match self {
            MarginalSpec::Poisson { mean, lambda } => match (mean, lambda) {
                (Some(m), None) => StructureDistribution::degenerate(m / horizon)?,
                (None, Some(l)) => StructureDistribution::degenerate(*l)?,
                _ => {
                    return Err(Error::Scenario(
                        "poisson marginal needs exactly one of `mean` or `lambda`".into(),
                    ))
                }
            },
            MarginalSpec::NegativeBinomial { mean, variance, r, b } => {
                match (mean, variance, r, b) {
                    (Some(m), Some(v), None, None) => {
                        crate::distributions::nb_from_mean_variance(*m, *v, horizon)?
                    }
                    (None, None, Some(r), Some(b)) => StructureDistribution::gamma(*r, *b)?,
                    _ => {
                        return Err(Error::Scenario(
                            "negative_binomial marginal needs either `mean` and `variance` or `r` and `b`"
                                .into(),
                        ))
                    }
                }
            }
            MarginalSpec::Mixture { atoms } => StructureDistribution::finite_discrete(
                atoms.iter().map(|a| (a[0], a[1])).collect(),
            )?,
        };
        MixedPoissonDistribution::new(structure, horizon)
    }
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub horizon: f64,
    #[serde(default = "default_periods")]
    pub periods: u32,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub truncation_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Points per period of the default curve grid.
    #[serde(default = "default_grid_points")]
    pub grid_points_per_period: u32,
    /// Explicit evaluation times; overrides the default grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_grid: Option<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
    pub marginals: Vec<MarginalSpec>,
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Scenario(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text).map_err(|e| match e {
            Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scenario(e.to_string()))
    }

    pub fn dimension(&self) -> usize {
        self.marginals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Scenario(format!("`{name}` is not a finite number")))
            }
        };
        finite("horizon", self.horizon)?;
        finite("truncation_tol", self.truncation_tol)?;
        if self.horizon <= 0.0 {
            return Err(Error::Scenario("`horizon` must be positive".into()));
        }
        if self.periods == 0 || self.n_paths == 0 || self.grid_points_per_period == 0 {
            return Err(Error::Scenario(
                "`periods`, `n_paths` and `grid_points_per_period` must be positive".into(),
            ));
        }
        if !(self.truncation_tol > 0.0 && self.truncation_tol < 1e-6) {
            return Err(Error::Scenario(
                "`truncation_tol` must lie in (0, 1e-6)".into(),
            ));
        }
        for (i, m) in self.marginals.iter().enumerate() {
            for v in m.numbers() {
                finite(&format!("marginals[{i}]"), v)?;
            }
        }
        for (i, row) in self.correlation.iter().enumerate() {
            for &v in row {
                finite(&format!("correlation[{i}]"), v)?;
            }
        }
        let d = self.dimension();
        if self.correlation.len() != d || self.correlation.iter().any(|r| r.len() != d) {
            return Err(Error::Scenario(format!(
                "`correlation` must be {d}x{d} to match the {d} marginals"
            )));
        }
        if !(2..=crate::ejd::MAX_DIMENSION).contains(&d) {
            return Err(Error::Scenario(format!(
                "between 2 and {} marginals are supported, got {d}",
                crate::ejd::MAX_DIMENSION
            )));
        }
        if let Some(grid) = &self.time_grid {
            let end = self.horizon * self.periods as f64;
            if grid.iter().any(|&t| !(t.is_finite() && t > 0.0 && t <= end))
                || grid.windows(2).any(|w| w[0] > w[1])
            {
                return Err(Error::Scenario(format!(
                    "`time_grid` must be sorted within (0, {end}]"
                )));
            }
        }
        self.target()?;
        self.marginal_distributions()?;
        Ok(())
    }

    pub fn marginal_distributions(&self) -> Result<Vec<MixedPoissonDistribution>> {
        self.marginals
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.to_distribution(self.horizon).map_err(|e| match e {
                    Error::Scenario(msg) => Error::Scenario(format!("marginals[{i}]: {msg}")),
                    other => Error::Scenario(format!("marginals[{i}]: {other}")),
                })
            })
            .collect()
    }

    pub fn target(&self) -> Result<CorrelationMatrix> {
        CorrelationMatrix::from_rows(&self.correlation)
            .map_err(|e| Error::Scenario(format!("correlation: {e}")))
    }

    pub fn calibrate(&self) -> Result<CalibratedModel> {
        calibrate(
            &self.marginal_distributions()?,
            &self.target()?,
            self.truncation_tol,
        )
    }

    /// Explicit grid, or `grid_points_per_period` equally spaced points per
    /// period ending on each period boundary.
    pub fn time_grid(&self) -> Vec<f64> {
        if let Some(g) = &self.time_grid {
            return g.clone();
        }
        let g = self.grid_points_per_period;
        (1..=self.periods * g)
            .map(|i| {
                let (m, j) = (i / g, i % g);
                self.horizon * (m as f64 + j as f64 / g as f64)
            })
            .collect()
    }
}
