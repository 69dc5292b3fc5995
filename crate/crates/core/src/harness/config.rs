//! Experiment configuration, read from a flat TOML file.
//!
//! Required keys are `n`, `b1`, `b2` and either `support` or `support_file`.
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::equilibrium::SolverConfig;
use crate::error::{Error, Result};
use crate::inference::{Axis, ThetaGrid};
use crate::model::{CovariateSupport, PairCovariates, Theta};
use crate::rng::row_rng;

use super::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    /// Each ordered pair draws its cell independently with probabilities `probs`.
    #[default]
    Iid,
    /// Cell `(type_j - type_i) mod J` with `type_i = i mod J`.
    Circulant,
    /// Read from `covariates_file`.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkFormat {
    /// `n` rows of `n` comma-separated 0/1 entries.
    #[default]
    Matrix,
    /// One `i,j` line per link, 1-based.
    Edges,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_one() -> f64 {
    1.0
}
fn default_replications() -> usize {
    100
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Support points, one array per point, in lexicographic order.
    #[serde(default)]
    pub support: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub support_file: Option<PathBuf>,
    #[serde(default)]
    pub assignment: Assignment,
    /// Cell probabilities for `iid` assignment; uniform when absent.
    #[serde(default)]
    pub probs: Option<Vec<f64>>,
    #[serde(default)]
    pub covariates_file: Option<PathBuf>,
    pub b1: [f64; 3],
    pub b2: Vec<f64>,
    #[serde(default)]
    pub rho0: f64,
    #[serde(default)]
    pub rho1: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_one")]
    pub damping: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Reuse one covariate draw across Monte Carlo replications.
    #[serde(default)]
    pub fixed_x: bool,
    /// Grid axes as `"v"` or `"lo:hi:steps"`; each defaults to the true value.
    #[serde(default)]
    pub grid_b1: Option<[String; 3]>,
    #[serde(default)]
    pub grid_b2: Option<Vec<String>>,
    #[serde(default)]
    pub grid_r0: Option<String>,
    #[serde(default)]
    pub grid_r1: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub network_file: Option<PathBuf>,
    #[serde(default)]
    pub network_format: NetworkFormat,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [
            &mut cfg.support_file,
            &mut cfg.covariates_file,
            &mut cfg.network_file,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Checks everything that does not require touching data files.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.support.is_some() == self.support_file.is_some() {
            return bad("exactly one of support and support_file must be given".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        self.solver()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.theta_true()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(probs) = &self.probs {
            if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0))
                || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return bad("probs must be non-negative and sum to 1".into());
            }
        }
        if self.assignment == Assignment::File && self.covariates_file.is_none() {
            return bad("assignment = \"file\" requires covariates_file".into());
        }
        for path in [
            &self.support_file,
            &self.covariates_file,
            &self.network_file,
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                return bad(format!("{} does not exist", path.display()));
            }
        }
        if let Some(axes) = &self.grid_b2 {
            if axes.len() != self.b2.len() {
                return bad(format!(
                    "grid_b2 has {} axes, b2 has {} entries",
                    axes.len(),
                    self.b2.len()
                ));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> Result<CovariateSupport> {
        let support = match (&self.support, &self.support_file) {
            (Some(points), None) => CovariateSupport::new(points.clone())?,
            (None, Some(path)) => io::read_support(path)?,
            _ => {
                return Err(Error::Config(
                    "exactly one of support and support_file must be given".into(),
                ))
            }
        };
        if support.dim() != self.b2.len() {
            return Err(Error::Config(format!(
                "support points have dimension {}, b2 has {} entries",
                support.dim(),
                self.b2.len()
            )));
        }
        if let Some(probs) = &self.probs {
            if probs.len() != support.len() {
                return Err(Error::Config(format!(
                    "probs has {} entries for {} support points",
                    probs.len(),
                    support.len()
                )));
            }
        }
        Ok(support)
    }

    pub fn theta_true(&self) -> Result<Theta> {
        Theta::new(self.b1, self.b2.clone(), self.rho0, self.rho1)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
        }
    }

    /// Whether any grid key is set.
    pub fn has_grid(&self) -> bool {
        self.grid_b1.is_some()
            || self.grid_b2.is_some()
            || self.grid_r0.is_some()
            || self.grid_r1.is_some()
    }

    pub fn grid(&self) -> Result<ThetaGrid> {
        let axis = |spec: Option<&String>, truth: f64| {
            spec.map_or(Ok(Axis::point(truth)), |s| Axis::parse(s))
        };
        let b1 = match &self.grid_b1 {
            Some(specs) => [
                Axis::parse(&specs[0])?,
                Axis::parse(&specs[1])?,
                Axis::parse(&specs[2])?,
            ],
            None => self.b1.map(Axis::point),
        };
        let b2 = match &self.grid_b2 {
            Some(specs) => {
                if specs.len() != self.b2.len() {
                    return Err(Error::Config(
                        "grid_b2 must have one axis per b2 entry".into(),
                    ));
                }
                specs
                    .iter()
                    .map(|s| Axis::parse(s))
                    .collect::<Result<Vec<_>>>()?
            }
            None => self.b2.iter().map(|&v| Axis::point(v)).collect(),
        };
        ThetaGrid::from_axes(
            b1,
            b2,
            axis(self.grid_r0.as_ref(), self.rho0)?,
            axis(self.grid_r1.as_ref(), self.rho1)?,
        )
    }

    /// Pair covariates for a simulation keyed by `seed`. Row `i` of an i.i.d.
    /// draw uses random stream `i`.
    pub fn covariates(&self, support: &CovariateSupport, seed: u64) -> Result<PairCovariates> {
        let n = self.n;
        let jn = support.len();
        let x = match self.assignment {
            Assignment::Circulant => PairCovariates::circulant(n, jn)?,
            Assignment::File => {
                let path = self.covariates_file.as_ref().ok_or_else(|| {
                    Error::Config("assignment = \"file\" requires covariates_file".into())
                })?;
                io::read_covariates(path, jn)?
            }
            Assignment::Iid => {
                let probs = self
                    .probs
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / jn as f64; jn]);
                let dist =
                    WeightedIndex::new(&probs).map_err(|e| Error::Config(format!("probs: {e}")))?;
                let mut cells = Vec::with_capacity(n * n);
                for i in 0..n {
                    let mut rng = row_rng(seed, i);
                    cells.extend((0..n).map(|j| if i == j { 0 } else { dist.sample(&mut rng) }));
                }
                PairCovariates::new(n, jn, cells)?
            }
        };
        if x.n() != n {
            return Err(Error::Config(format!(
                "covariates describe {} agents, n = {n}",
                x.n()
            )));
        }
        Ok(x)
    }
}
