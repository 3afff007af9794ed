//! Experiment configuration: a flat JSON object with per-study defaults.

use std::fmt;
use std::path::Path;

use estavg_core::boolean::{DEFAULT_DIRECTIONS, DEFAULT_RESOLUTION};
use estavg_core::{ConstraintSet, Distribution};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Location,
    Weibull,
    Boolean,
    Quantile,
    Synthetic,
}

impl Study {
    pub fn name(self) -> &'static str {
        match self {
            Study::Location => "location",
            Study::Weibull => "weibull",
            Study::Boolean => "boolean",
            Study::Quantile => "quantile",
            Study::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How `Σ̂` is built in each replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaMethod {
    /// Closed-form asymptotic matrix with plugged-in estimates.
    Plugin,
    /// Resampling the observed data.
    Npboot,
    /// Simulating the model at an initial estimate.
    Pboot,
    /// Sample covariance of `b` draws from the true error law (synthetic study only).
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Maximal,
    Componentwise,
    Convex,
    Selection,
}

impl From<Constraint> for ConstraintSet {
    fn from(c: Constraint) -> Self {
        match c {
            Constraint::Maximal => ConstraintSet::Maximal,
            Constraint::Componentwise => ConstraintSet::ComponentWise,
            Constraint::Convex => ConstraintSet::Convex,
            Constraint::Selection => ConstraintSet::Selection,
        }
    }
}

/// Sampling family of the observations in the location and quantile studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gauss,
    Cauchy,
    Student,
    Logistic,
    Mixture,
    Weibull,
    Gamma,
    Burr,
    Lognormal,
}

/// Every knob of a run. Fields a study does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub study: Study,
    pub name: String,
    pub seed: u64,
    /// Monte-Carlo replications `R`.
    pub reps: usize,
    /// Bootstrap or Monte-Carlo size `B`.
    pub b: usize,
    /// Sample size.
    pub n: usize,
    /// Defaults per study when absent.
    pub constraint: Option<Constraint>,
    pub sigma_method: Option<SigmaMethod>,
    pub threads: usize,
    pub level: f64,
    pub family: Family,
    pub nu: f64,
    /// First family parameter (Weibull/Gamma shape, Burr `c`, lognormal `μ`).
    pub param1: f64,
    /// Second family parameter (Weibull/Gamma scale, Burr `k`, lognormal `σ`).
    pub param2: f64,
    pub rho: f64,
    pub alpha: f64,
    pub p: f64,
    pub resolution: usize,
    pub n_directions: usize,
    /// Group sizes of the synthetic estimator collection.
    pub sizes: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            study: Study::Location,
            name: String::new(),
            seed: 1,
            reps: 10_000,
            b: 1000,
            n: 100,
            constraint: None,
            sigma_method: None,
            threads: 1,
            level: 0.95,
            family: Family::Gauss,
            nu: 5.0,
            param1: 1.0,
            param2: 1.0,
            rho: 50.0,
            alpha: 1.0,
            p: 0.99,
            resolution: DEFAULT_RESOLUTION,
            n_directions: DEFAULT_DIRECTIONS,
            sizes: vec![3, 1],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Canonical text form: pretty JSON with every field, defaults resolved.
    pub fn echo(&self) -> String {
        let mut resolved = self.clone();
        resolved.constraint = Some(self.constraint());
        resolved.sigma_method = Some(self.sigma_method());
        let mut s = serde_json::to_string_pretty(&resolved).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint.unwrap_or(match self.study {
            Study::Quantile => Constraint::Convex,
            _ => Constraint::Maximal,
        })
    }

    pub fn sigma_method(&self) -> SigmaMethod {
        self.sigma_method.unwrap_or(match self.study {
            Study::Location => SigmaMethod::Plugin,
            Study::Weibull | Study::Boolean => SigmaMethod::Pboot,
            Study::Quantile => SigmaMethod::Npboot,
            Study::Synthetic => SigmaMethod::Sampled,
        })
    }

    /// The law of one observation in the location and quantile studies.
    pub fn distribution(&self) -> Result<Distribution, ConfigError> {
        let d = match self.family {
            Family::Gauss => Distribution::Gaussian,
            Family::Cauchy => Distribution::Cauchy,
            Family::Student => Distribution::Student { nu: self.nu },
            Family::Logistic => Distribution::Logistic,
            Family::Mixture => Distribution::GaussianMixture,
            Family::Weibull => Distribution::Weibull { shape: self.param1, scale: self.param2 },
            Family::Gamma => Distribution::Gamma { shape: self.param1, scale: self.param2 },
            Family::Burr => Distribution::BurrXII { c: self.param1, k: self.param2 },
            Family::Lognormal => Distribution::Lognormal { mu: self.param1, sigma: self.param2 },
        };
        d.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.reps < 1 {
            return bad("reps must be at least 1".into());
        }
        if self.threads < 1 {
            return bad("threads must be at least 1".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad(format!("level {} outside (0, 1)", self.level));
        }
        let method = self.sigma_method();
        let allowed: &[SigmaMethod] = match self.study {
            Study::Location => &[SigmaMethod::Plugin, SigmaMethod::Npboot],
            Study::Weibull => &[SigmaMethod::Pboot, SigmaMethod::Npboot],
            Study::Boolean => &[SigmaMethod::Pboot],
            Study::Quantile => &[SigmaMethod::Npboot],
            Study::Synthetic => &[SigmaMethod::Sampled],
        };
        if !allowed.contains(&method) {
            return bad(format!("study {} does not support sigma_method {method:?}", self.study));
        }
        if method != SigmaMethod::Plugin && self.b < 2 {
            return bad(format!("b must be at least 2, got {}", self.b));
        }
        match self.study {
            Study::Location | Study::Weibull | Study::Quantile if self.n < 2 => {
                return bad(format!("n must be at least 2, got {}", self.n));
            }
            _ => {}
        }
        match self.study {
            Study::Location => {
                if !matches!(
                    self.family,
                    Family::Gauss | Family::Cauchy | Family::Student | Family::Logistic | Family::Mixture
                ) {
                    return bad(format!("{:?} is not a symmetric location family", self.family));
                }
                self.distribution()?;
            }
            Study::Weibull => {
                Distribution::Weibull { shape: self.param1, scale: self.param2 }
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            Study::Boolean => {
                if !(self.rho > 0.0 && self.rho.is_finite() && self.alpha > 0.0 && self.alpha.is_finite()) {
                    return bad(format!("rho {} and alpha {} must be positive", self.rho, self.alpha));
                }
                if self.resolution < 64 {
                    return bad(format!("resolution {} below 64", self.resolution));
                }
                if self.n_directions < 1 {
                    return bad("n_directions must be at least 1".into());
                }
            }
            Study::Quantile => {
                if !(self.p > 0.0 && self.p < 1.0) {
                    return bad(format!("p {} outside (0, 1)", self.p));
                }
                if (self.n as f64 * self.p).floor() < 1.0 {
                    return bad(format!("floor(n p) is zero for n = {} and p = {}", self.n, self.p));
                }
                let d = self.distribution()?;
                if d.location().is_some() {
                    return bad(format!("{:?} is not a positive family", self.family));
                }
            }
            Study::Synthetic => {
                if self.sizes.is_empty() || self.sizes.contains(&0) {
                    return bad("sizes must be nonempty and positive".into());
                }
                if self.sizes.iter().sum::<usize>() > 12 {
                    return bad("synthetic collections are limited to 12 estimators".into());
                }
            }
        }
        Ok(())
    }
}
