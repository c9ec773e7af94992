//! Likelihood, priors and posterior computations.
//!
//! The likelihood only depends on worth differences, so the posterior is
//! defined on the hyperplane `Σθ_i = 0`. Everything here works in reduced
//! coordinates `x = (θ_1, …, θ_{n-1})` with `θ_n = -Σ x_k`.

mod optimize;
mod posterior;
pub mod quadrature;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::PairedComparisonData;
use crate::model::{ModelError, ModelSpec, WorthVector};

pub use posterior::{
    marginal_posterior, posterior_mean, posterior_mode, MarginalCurve, Posterior, PosteriorSummary, Warning,
};

/// Preference probabilities are clamped to this interval before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-300;
pub const PROBABILITY_CEILING: f64 = 1.0 - 1e-16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid posterior configuration: {0}")]
    Config(String),
    #[error("theta has {got} components, data has {expected} objects")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("theta contains a non-finite value")]
    NonFinite,
    #[error("comparison graph disconnected")]
    Disconnected,
    #[error("Fisher information matrix is singular")]
    SingularInformation,
    #[error("posterior mode search did not converge (gradient norm {gradient_norm:e})")]
    NonConvergence { best: Vec<f64>, gradient_norm: f64 },
    #[error("posterior curvature at the mode is not negative definite")]
    NotConcaveAtMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    Uniform,
    Jeffreys,
}

impl std::fmt::Display for Prior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Prior::Uniform => "uniform",
            Prior::Jeffreys => "jeffreys",
        })
    }
}

/// Tensor-product Gauss–Legendre grid. The grid is laid out in standardized
/// coordinates around the posterior mode, so `halfwidth` is measured in
/// posterior standard deviations along the principal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_dim: usize,
    pub halfwidth: f64,
}

pub const MIN_GRID_POINTS: usize = 16;
/// Upper bound on the number of grid nodes for a single posterior.
pub const MAX_GRID_NODES: usize = 50_000_000;

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            points_per_dim: 48,
            halfwidth: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSpec {
    pub prior: Prior,
    pub model: ModelSpec,
    pub grid: GridSpec,
}

impl PosteriorSpec {
    pub fn new(prior: Prior, model: ModelSpec, grid: GridSpec) -> Result<Self, EstimationError> {
        let spec = Self { prior, model, grid };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_defaults(prior: Prior, model: ModelSpec) -> Result<Self, EstimationError> {
        Self::new(prior, model, GridSpec::default())
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        self.model.validate()?;
        if self.grid.points_per_dim < MIN_GRID_POINTS {
            return Err(EstimationError::Config(format!(
                "grid needs at least {MIN_GRID_POINTS} points per dimension, got {}",
                self.grid.points_per_dim
            )));
        }
        if !(self.grid.halfwidth.is_finite() && self.grid.halfwidth > 0.0) {
            return Err(EstimationError::Config(format!(
                "grid halfwidth must be positive, got {}",
                self.grid.halfwidth
            )));
        }
        Ok(())
    }
}

/// Counts for one unordered pair `i < j`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairCounts {
    pub i: usize,
    pub j: usize,
    pub wins_i: f64,
    pub wins_j: f64,
}

impl PairCounts {
    fn total(&self) -> f64 {
        self.wins_i + self.wins_j
    }
}

/// Every unordered pair, including pairs that were never compared.
pub(crate) fn all_pairs(data: &PairedComparisonData) -> Vec<PairCounts> {
    data.unordered_pairs()
        .map(|(i, j)| PairCounts {
            i,
            j,
            wins_i: data.wins(i, j) as f64,
            wins_j: data.wins(j, i) as f64,
        })
        .collect()
}

/// Appends `θ_n = -Σ x_k`.
pub(crate) fn expand(x: &[f64]) -> Vec<f64> {
    let mut theta = x.to_vec();
    theta.push(-x.iter().sum::<f64>());
    theta
}

#[cfg(test)]
pub(crate) fn reduce(theta: &[f64]) -> Vec<f64> {
    let mean = theta.iter().sum::<f64>() / theta.len() as f64;
    theta[..theta.len() - 1].iter().map(|t| t - mean).collect()
}

/// ∂d_ij/∂x for the reduced coordinates, where d_ij = θ_i - θ_j.
pub(crate) fn difference_direction(i: usize, j: usize, n: usize) -> Vec<f64> {
    let last = n - 1;
    let mut u = vec![0.0; last];
    let mut add = |k: usize, sign: f64| {
        if k == last {
            u.iter_mut().for_each(|v| *v -= sign);
        } else {
            u[k] += sign;
        }
    };
    add(i, 1.0);
    add(j, -1.0);
    u
}

/// Shared evaluator for the log posterior kernel and its gradient.
pub(crate) struct Kernel {
    pub pairs: Vec<PairCounts>,
    pub directions: Vec<Vec<f64>>,
    pub model: ModelSpec,
    pub prior: Prior,
    pub n: usize,
    clamped: AtomicU64,
}

/// Per-pair probabilities at one point, `ψ(d)` and `ψ(-d)` for each compared pair.
pub(crate) struct PairProbabilities {
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
}

impl Kernel {
    pub fn new(data: &PairedComparisonData, model: ModelSpec, prior: Prior) -> Result<Self, EstimationError> {
        model.validate()?;
        let n = data.len();
        let pairs = all_pairs(data);
        let directions = pairs.iter().map(|p| difference_direction(p.i, p.j, n)).collect();
        Ok(Self {
            pairs,
            directions,
            model,
            prior,
            n,
            clamped: AtomicU64::new(0),
        })
    }

    pub fn clamped_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn clamp(&self, p: f64) -> f64 {
        if p < PROBABILITY_FLOOR {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            PROBABILITY_FLOOR
        } else if p > PROBABILITY_CEILING {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            PROBABILITY_CEILING
        } else {
            p
        }
    }

    pub fn probabilities(&self, theta: &[f64]) -> PairProbabilities {
        let mut forward = Vec::with_capacity(self.pairs.len());
        let mut backward = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let d = theta[p.i] - theta[p.j];
            forward.push(self.model.prob(d));
            backward.push(self.model.prob(-d));
        }
        PairProbabilities { forward, backward }
    }

    pub fn log_likelihood_from(&self, probs: &PairProbabilities) -> f64 {
        self.pairs
            .iter()
            .zip(probs.forward.iter().zip(&probs.backward))
            .map(|(p, (&f, &b))| {
                let mut term = 0.0;
                if p.wins_i > 0.0 {
                    term += p.wins_i * self.clamp(f).ln();
                }
                if p.wins_j > 0.0 {
                    term += p.wins_j * self.clamp(b).ln();
                }
                term
            })
            .sum()
    }

    /// Reduced Fisher information `Σ n_ij w(d_ij) u u^T`.
    pub fn information(&self, theta: &[f64]) -> DMatrix<f64> {
        let dim = self.n - 1;
        let mut info = DMatrix::zeros(dim, dim);
        for (p, u) in self.pairs.iter().zip(&self.directions) {
            if p.total() == 0.0 {
                continue;
            }
            let d = theta[p.i] - theta[p.j];
            let w = p.total() * self.information_weight(d);
            for a in 0..dim {
                if u[a] == 0.0 {
                    continue;
                }
                for b in 0..dim {
                    info[(a, b)] += w * u[a] * u[b];
                }
            }
        }
        info
    }

    fn information_weight(&self, d: f64) -> f64 {
        let f = self.model.density(d);
        let psi = self.clamp(self.model.prob(d));
        let q = self.clamp(self.model.prob(-d));
        f * f / (psi * q)
    }

    fn information_weight_slope(&self, d: f64) -> f64 {
        let f = self.model.density(d);
        let slope = self.model.density_slope(d);
        let psi = self.clamp(self.model.prob(d));
        let q = self.clamp(self.model.prob(-d));
        let pq = psi * q;
        2.0 * f * slope / pq - f * f * f * (q - psi) / (pq * pq)
    }

    /// Half the log determinant of the reduced information, or `None` if singular.
    pub fn jeffreys(&self, theta: &[f64]) -> Option<f64> {
        let chol = self.information(theta).cholesky()?;
        let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        log_det.is_finite().then_some(0.5 * log_det)
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        match self.prior {
            Prior::Uniform => 0.0,
            Prior::Jeffreys => self.jeffreys(theta).unwrap_or(f64::NEG_INFINITY),
        }
    }

    /// Full-space gradient of the log-likelihood.
    pub fn likelihood_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.n];
        for p in self.pairs.iter().filter(|p| p.total() > 0.0) {
            let d = theta[p.i] - theta[p.j];
            let f = self.model.density(d);
            let psi = self.clamp(self.model.prob(d));
            let q = self.clamp(self.model.prob(-d));
            let slope = p.wins_i * f / psi - p.wins_j * f / q;
            grad[p.i] += slope;
            grad[p.j] -= slope;
        }
        grad
    }

    /// Gradient of the Jeffreys log prior in reduced coordinates.
    fn jeffreys_gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let info = self.information(theta);
        let inverse = info.cholesky()?.inverse();
        let dim = self.n - 1;
        let mut grad = vec![0.0; dim];
        for (p, u) in self.pairs.iter().zip(&self.directions) {
            if p.total() == 0.0 {
                continue;
            }
            let d = theta[p.i] - theta[p.j];
            let uv = nalgebra::DVector::from_column_slice(u);
            let quad = (uv.transpose() * &inverse * &uv)[(0, 0)];
            let scale = 0.5 * p.total() * self.information_weight_slope(d) * quad;
            for k in 0..dim {
                grad[k] += scale * u[k];
            }
        }
        Some(grad)
    }

    /// Log kernel and its gradient at reduced coordinates `x`.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let theta = expand(x);
        let probs = self.probabilities(&theta);
        let mut value = self.log_likelihood_from(&probs);
        let full = self.likelihood_gradient(&theta);
        let last = self.n - 1;
        let mut grad: Vec<f64> = (0..last).map(|k| full[k] - full[last]).collect();
        if self.prior == Prior::Jeffreys {
            match (self.jeffreys(&theta), self.jeffreys_gradient(&theta)) {
                (Some(v), Some(g)) => {
                    value += v;
                    grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
                }
                _ => value = f64::NEG_INFINITY,
            }
        }
        (value, grad)
    }
}

fn check_theta(data: &PairedComparisonData, theta: &[f64]) -> Result<(), EstimationError> {
    if theta.len() != data.len() {
        return Err(EstimationError::DimensionMismatch {
            expected: data.len(),
            got: theta.len(),
        });
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(EstimationError::NonFinite);
    }
    Ok(())
}

/// Binomial log-likelihood of the counts, without the θ-free binomial coefficients.
pub fn log_likelihood(data: &PairedComparisonData, model: ModelSpec, theta: &[f64]) -> Result<f64, EstimationError> {
    check_theta(data, theta)?;
    let kernel = Kernel::new(data, model, Prior::Uniform)?;
    let value = kernel.log_likelihood_from(&kernel.probabilities(theta));
    let clamped = kernel.clamped_count();
    if clamped > 0 {
        log::warn!("log_likelihood: clamped {clamped} preference probabilities");
    }
    Ok(value)
}

/// Gradient of [`log_likelihood`] with respect to every component of θ.
pub fn log_likelihood_gradient(
    data: &PairedComparisonData,
    model: ModelSpec,
    theta: &[f64],
) -> Result<Vec<f64>, EstimationError> {
    check_theta(data, theta)?;
    Ok(Kernel::new(data, model, Prior::Uniform)?.likelihood_gradient(theta))
}

/// Reduced Fisher information matrix at θ, `(n-1) × (n-1)`.
pub fn fisher_information(
    data: &PairedComparisonData,
    model: ModelSpec,
    theta: &[f64],
) -> Result<DMatrix<f64>, EstimationError> {
    check_theta(data, theta)?;
    Ok(Kernel::new(data, model, Prior::Jeffreys)?.information(theta))
}

/// `½ ln det I(θ)` with the information reduced to the sum-zero hyperplane.
pub fn jeffreys_log_prior(data: &PairedComparisonData, model: ModelSpec, theta: &[f64]) -> Result<f64, EstimationError> {
    check_theta(data, theta)?;
    if !data.is_connected() {
        return Err(EstimationError::Disconnected);
    }
    Kernel::new(data, model, Prior::Jeffreys)?
        .jeffreys(theta)
        .ok_or(EstimationError::SingularInformation)
}

/// Log-likelihood plus log prior, up to the constant `-ln C`.
pub fn log_posterior_kernel(
    data: &PairedComparisonData,
    spec: &PosteriorSpec,
    theta: &[f64],
) -> Result<f64, EstimationError> {
    spec.validate()?;
    let likelihood = log_likelihood(data, spec.model, theta)?;
    match spec.prior {
        Prior::Uniform => Ok(likelihood),
        Prior::Jeffreys => Ok(likelihood + jeffreys_log_prior(data, spec.model, theta)?),
    }
}

impl WorthVector {
    pub(crate) fn from_reduced(labels: &[String], x: &[f64]) -> Self {
        WorthVector::centered(labels.to_vec(), expand(x)).expect("reduced coordinates give a valid worth vector")
    }
}
