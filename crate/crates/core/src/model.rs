//! Preference models mapping a worth difference `d = θ_i - θ_j` to the
//! probability that object `i` is preferred over object `j`.
//!
//! The t-distribution model evaluates the Student-t CDF with `ν` degrees of
//! freedom through the regularized incomplete beta function. Thurstone
//! (normal), Bradley–Terry (logistic on the exponentiated scale) and Cauchy
//! models share the same interface and serve as baselines.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{inc_beta_complement_pair, log_beta, normal_cdf_unchecked, normal_pdf};

/// Tolerance on the sum-zero constraint of a [`WorthVector`].
pub const SUM_ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degrees of freedom must be positive and finite, got {0}")]
    InvalidNu(f64),
    #[error("worth vector needs at least two objects, got {0}")]
    TooFewObjects(usize),
    #[error("worth vector has {values} values but {labels} labels")]
    LabelMismatch { values: usize, labels: usize },
    #[error("worth vector must sum to zero, sum is {0}")]
    NotCentered(f64),
    #[error("worth vector contains a non-finite value")]
    NonFinite,
}

/// Which link maps a worth difference to a preference probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// Student-t CDF with `nu` degrees of freedom.
    #[serde(rename = "t")]
    TPcm { nu: f64 },
    /// Standard normal CDF (Thurstone Case V).
    Thurstone,
    /// Logistic link; worths are exponentiated before the ratio is taken.
    BradleyTerry,
    /// Standard Cauchy CDF.
    Cauchy,
}

impl ModelSpec {
    pub fn t(nu: f64) -> Result<Self, ModelError> {
        let spec = ModelSpec::TPcm { nu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            ModelSpec::TPcm { nu } if !(nu.is_finite() && nu > 0.0) => Err(ModelError::InvalidNu(nu)),
            _ => Ok(()),
        }
    }

    pub fn nu(&self) -> Option<f64> {
        match *self {
            ModelSpec::TPcm { nu } => Some(nu),
            _ => None,
        }
    }

    /// ψ(d) for a validated spec.
    pub(crate) fn prob(&self, d: f64) -> f64 {
        match *self {
            ModelSpec::TPcm { nu } => t_cdf(nu, d),
            ModelSpec::Thurstone => normal_cdf_unchecked(d),
            ModelSpec::BradleyTerry => logistic(d),
            ModelSpec::Cauchy => cauchy_cdf(d),
        }
    }

    /// ∂ψ/∂d.
    pub(crate) fn density(&self, d: f64) -> f64 {
        match *self {
            ModelSpec::TPcm { nu } => t_pdf(nu, d),
            ModelSpec::Thurstone => normal_pdf(d),
            ModelSpec::BradleyTerry => {
                let p = logistic(d);
                p * logistic(-d)
            }
            ModelSpec::Cauchy => 1.0 / (PI * (1.0 + d * d)),
        }
    }

    /// ∂²ψ/∂d².
    pub(crate) fn density_slope(&self, d: f64) -> f64 {
        match *self {
            ModelSpec::TPcm { nu } => -t_pdf(nu, d) * (nu + 1.0) * d / (nu + d * d),
            ModelSpec::Thurstone => -d * normal_pdf(d),
            ModelSpec::BradleyTerry => {
                let p = logistic(d);
                let q = logistic(-d);
                p * q * (q - p)
            }
            ModelSpec::Cauchy => -2.0 * d / (PI * (1.0 + d * d).powi(2)),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::TPcm { nu } => write!(f, "t(nu={nu})"),
            ModelSpec::Thurstone => f.write_str("thurstone"),
            ModelSpec::BradleyTerry => f.write_str("bradley-terry"),
            ModelSpec::Cauchy => f.write_str("cauchy"),
        }
    }
}

fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

fn cauchy_cdf(d: f64) -> f64 {
    if d < 0.0 {
        (-1.0 / d).atan() / PI
    } else {
        0.5 + d.atan() / PI
    }
}

fn t_cdf(nu: f64, d: f64) -> f64 {
    let d2 = d * d;
    let denom = nu + d2;
    if d <= 0.0 {
        0.5 * inc_beta_complement_pair(nu / denom, d2 / denom, 0.5 * nu, 0.5)
    } else {
        0.5 * inc_beta_complement_pair(d2 / denom, nu / denom, 0.5, 0.5 * nu) + 0.5
    }
}

fn t_pdf(nu: f64, y: f64) -> f64 {
    let log_kernel = 0.5 * (nu + 1.0) * (nu / (nu + y * y)).ln();
    (log_kernel - 0.5 * nu.ln() - log_beta(0.5 * nu, 0.5)).exp()
}

/// Probability that an object with worth `theta_i` is preferred over one with
/// worth `theta_j`. Bradley–Terry worths are given on the real (log) scale.
pub fn preference_probability(spec: ModelSpec, theta_i: f64, theta_j: f64) -> Result<f64, ModelError> {
    spec.validate()?;
    Ok(spec.prob(theta_i - theta_j))
}

/// Density of the standardized t distribution with `nu` degrees of freedom.
pub fn t_density(nu: f64, y: f64) -> Result<f64, ModelError> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(ModelError::InvalidNu(nu));
    }
    Ok(t_pdf(nu, y))
}

/// Labeled worth parameters constrained to sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorthVector {
    labels: Vec<String>,
    theta: Vec<f64>,
}

impl WorthVector {
    /// Builds a vector that already satisfies the sum-zero constraint.
    pub fn new(labels: Vec<String>, theta: Vec<f64>) -> Result<Self, ModelError> {
        Self::check_shape(&labels, &theta)?;
        let sum: f64 = theta.iter().sum();
        if sum.abs() > SUM_ZERO_TOLERANCE {
            return Err(ModelError::NotCentered(sum));
        }
        Ok(Self { labels, theta })
    }

    /// Builds a vector by subtracting the mean from `theta`.
    pub fn centered(labels: Vec<String>, mut theta: Vec<f64>) -> Result<Self, ModelError> {
        Self::check_shape(&labels, &theta)?;
        center_in_place(&mut theta);
        Ok(Self { labels, theta })
    }

    fn check_shape(labels: &[String], theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != labels.len() {
            return Err(ModelError::LabelMismatch {
                values: theta.len(),
                labels: labels.len(),
            });
        }
        if theta.len() < 2 {
            return Err(ModelError::TooFewObjects(theta.len()));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.theta[index]
    }
}

pub(crate) fn center_in_place(theta: &mut [f64]) {
    let mean = theta.iter().sum::<f64>() / theta.len() as f64;
    for t in theta.iter_mut() {
        *t -= mean;
    }
}
