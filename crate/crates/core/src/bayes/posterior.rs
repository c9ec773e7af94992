//! Posterior modes by quasi-Newton ascent and posterior expectations by
//! tensor-product Gauss–Legendre quadrature.
//!
//! The quadrature grid lives in standardized coordinates `z` with
//! `x = mode + L z`, where `L L^T` is the inverse negative Hessian of the log
//! kernel at the mode. Without this change of variables a fixed box would
//! need thousands of nodes per axis once the counts run into the hundreds.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::optimize::{self, Maximum, Settings};
use super::quadrature::{scaled_rule, unravel};
use super::{expand, EstimationError, Kernel, PosteriorSpec, MAX_GRID_NODES};
use crate::data::PairedComparisonData;
use crate::matrix::PairMatrix;
use crate::model::WorthVector;

/// Fraction of kernel mass in the outermost grid shell above which the
/// truncation bound is reported as too tight.
pub const SHELL_MASS_LIMIT: f64 = 1e-3;

const CHUNK: usize = 4096;
const MODE_STARTS: usize = 5;
const DEFAULT_MARGINAL_POINTS: usize = 201;

/// Non-fatal conditions met while computing a posterior.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// More than [`SHELL_MASS_LIMIT`] of the kernel mass sits on the edge of the grid.
    TruncationBoundTooTight { shell_fraction: f64 },
    /// Preference probabilities were clamped before taking logarithms.
    ProbabilitiesClamped { count: u64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::TruncationBoundTooTight { shell_fraction } => write!(
                f,
                "truncation bound too tight: {:.3}% of posterior mass in the outermost grid shell",
                100.0 * shell_fraction
            ),
            Warning::ProbabilitiesClamped { count } => {
                write!(f, "{count} preference probabilities were clamped away from 0 or 1")
            }
        }
    }
}

/// Sampled marginal posterior density of one worth parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCurve {
    pub index: usize,
    pub label: String,
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
}

impl MarginalCurve {
    fn trapezoid<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.theta
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(t, p)| 0.5 * (t[1] - t[0]) * (f(t[0], p[0]) + f(t[1], p[1])))
            .sum()
    }

    /// Trapezoid-rule integral of the density.
    pub fn integral(&self) -> f64 {
        self.trapezoid(|_, p| p)
    }

    /// Trapezoid-rule mean of the curve, normalized by its integral.
    pub fn mean(&self) -> f64 {
        self.trapezoid(|t, p| t * p) / self.integral()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorSummary {
    pub mean: WorthVector,
    pub mode: WorthVector,
    /// ln C, with C the integral of the kernel over the reduced coordinates.
    pub log_normalizer: f64,
    pub marginals: Vec<MarginalCurve>,
}

/// A posterior evaluated on its quadrature grid.
#[derive(Debug, Clone)]
pub struct Posterior {
    spec: PosteriorSpec,
    data: PairedComparisonData,
    mode_x: Vec<f64>,
    mode_log_kernel: f64,
    mode_gradient_norm: f64,
    covariance: DMatrix<f64>,
    scale: DMatrix<f64>,
    grid_mass: f64,
    mean: WorthVector,
    mode: WorthVector,
    predictive: PairMatrix,
    log_normalizer: f64,
    shell_fraction: f64,
    warnings: Vec<Warning>,
}

#[derive(Debug, Clone)]
struct Moments {
    mass: f64,
    shell: f64,
    first: Vec<f64>,
    forward: Vec<f64>,
    backward: Vec<f64>,
}

impl Moments {
    fn zero(n: usize, pairs: usize) -> Self {
        Self {
            mass: 0.0,
            shell: 0.0,
            first: vec![0.0; n],
            forward: vec![0.0; pairs],
            backward: vec![0.0; pairs],
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.mass += other.mass;
        self.shell += other.shell;
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += b;
        }
        for (a, b) in self.forward.iter_mut().zip(&other.forward) {
            *a += b;
        }
        for (a, b) in self.backward.iter_mut().zip(&other.backward) {
            *a += b;
        }
    }
}

fn start_points(dim: usize) -> Vec<Vec<f64>> {
    let mut starts = vec![vec![0.0; dim]];
    for s in 0..MODE_STARTS - 1 {
        let amplitude = if s % 2 == 0 { 0.5 } else { -0.5 } * (1.0 + (s / 2) as f64);
        starts.push(
            (0..dim)
                .map(|k| {
                    if s < 2 {
                        amplitude * if k % 2 == 0 { 1.0 } else { -1.0 }
                    } else {
                        amplitude * (k + 1) as f64 / dim as f64
                    }
                })
                .collect(),
        );
    }
    starts
}

/// Laplace variances above this mean the kernel is flat along some
/// direction: the ascent has drifted off along an unbounded ridge.
const MAX_LAPLACE_VARIANCE: f64 = 1e6;

/// The mode and the inverse negative Hessian there.
fn find_mode(kernel: &Kernel) -> Result<(Maximum, DMatrix<f64>), EstimationError> {
    let dim = kernel.n - 1;
    let f = |x: &[f64]| kernel.value_and_gradient(x);
    let settings = Settings::default();
    let mut best: Option<Maximum> = None;
    for start in start_points(dim) {
        let candidate = optimize::maximize(&f, &start, settings);
        if !candidate.value.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => {
                candidate.value > b.value
                    || (candidate.value == b.value && candidate.gradient_norm < b.gradient_norm)
            }
        };
        if better {
            best = Some(candidate);
        }
    }
    let best = best.ok_or(EstimationError::NonConvergence {
        best: vec![0.0; kernel.n],
        gradient_norm: f64::INFINITY,
    })?;
    if best.gradient_norm > settings.gradient_tolerance {
        return Err(EstimationError::NonConvergence {
            best: expand(&best.x),
            gradient_norm: best.gradient_norm,
        });
    }
    let curvature = -optimize::hessian(&f, &best.x);
    let covariance = curvature
        .cholesky()
        .ok_or(EstimationError::NotConcaveAtMode)?
        .inverse();
    if covariance.diagonal().iter().any(|&v| v.is_nan() || v > MAX_LAPLACE_VARIANCE) {
        return Err(EstimationError::NonConvergence {
            best: expand(&best.x),
            gradient_norm: best.gradient_norm,
        });
    }
    Ok((best, covariance))
}

fn check_inputs(data: &PairedComparisonData, spec: &PosteriorSpec) -> Result<(), EstimationError> {
    spec.validate()?;
    if !data.is_connected() {
        return Err(EstimationError::Disconnected);
    }
    Ok(())
}

impl Posterior {
    /// Locates the mode, then integrates the posterior on the grid.
    pub fn fit(data: &PairedComparisonData, spec: &PosteriorSpec) -> Result<Self, EstimationError> {
        check_inputs(data, spec)?;
        let n = data.len();
        let dim = n - 1;
        let points = spec.grid.points_per_dim;
        let total = points
            .checked_pow(dim as u32)
            .filter(|&t| t <= MAX_GRID_NODES)
            .ok_or_else(|| {
                EstimationError::Config(format!(
                    "{points}^{dim} grid nodes exceed the limit of {MAX_GRID_NODES}; reduce the grid points"
                ))
            })?;

        let kernel = Kernel::new(data, spec.model, spec.prior)?;
        let (mode, covariance) = find_mode(&kernel)?;
        let scale = covariance
            .clone()
            .cholesky()
            .ok_or(EstimationError::NotConcaveAtMode)?
            .l();

        let (nodes, weights) = scaled_rule(points, spec.grid.halfwidth);
        let pair_count = kernel.pairs.len();
        let mode_x = DVector::from_column_slice(&mode.x);
        let chunks = total.div_ceil(CHUNK);
        let partials: Vec<Moments> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Moments::zero(n, pair_count);
                let mut digits = vec![0usize; dim];
                let mut z = DVector::zeros(dim);
                for index in c * CHUNK..((c + 1) * CHUNK).min(total) {
                    unravel(index, points, &mut digits);
                    let mut weight = 1.0;
                    let mut on_shell = false;
                    for (k, &d) in digits.iter().enumerate() {
                        z[k] = nodes[d];
                        weight *= weights[d];
                        on_shell |= d == 0 || d == points - 1;
                    }
                    let x = &mode_x + &scale * &z;
                    let theta = expand(x.as_slice());
                    let probs = kernel.probabilities(&theta);
                    let log_k = kernel.log_likelihood_from(&probs) + kernel.log_prior(&theta);
                    let w = weight * (log_k - mode.value).exp();
                    if !w.is_finite() || w == 0.0 {
                        continue;
                    }
                    acc.mass += w;
                    if on_shell {
                        acc.shell += w;
                    }
                    for (a, t) in acc.first.iter_mut().zip(&theta) {
                        *a += w * t;
                    }
                    for (a, p) in acc.forward.iter_mut().zip(&probs.forward) {
                        *a += w * p;
                    }
                    for (a, p) in acc.backward.iter_mut().zip(&probs.backward) {
                        *a += w * p;
                    }
                }
                acc
            })
            .collect();
        let mut moments = Moments::zero(n, pair_count);
        for partial in &partials {
            moments.merge(partial);
        }
        if !(moments.mass.is_finite() && moments.mass > 0.0) {
            return Err(EstimationError::Config("posterior kernel has no mass on the grid".into()));
        }

        let labels = data.labels();
        let mean_theta: Vec<f64> = moments.first.iter().map(|m| m / moments.mass).collect();
        let mean = WorthVector::centered(labels.to_vec(), mean_theta)?;
        let mut predictive = PairMatrix::undefined(n);
        for (k, p) in kernel.pairs.iter().enumerate() {
            predictive.set(p.i, p.j, Some(moments.forward[k] / moments.mass));
            predictive.set(p.j, p.i, Some(moments.backward[k] / moments.mass));
        }
        let log_det_scale: f64 = scale.diagonal().iter().map(|v| v.ln()).sum();
        let log_normalizer = mode.value + moments.mass.ln() + log_det_scale;
        let shell_fraction = moments.shell / moments.mass;

        let mut warnings = Vec::new();
        if shell_fraction > SHELL_MASS_LIMIT {
            warnings.push(Warning::TruncationBoundTooTight { shell_fraction });
        }
        let clamped = kernel.clamped_count();
        if clamped > 0 {
            warnings.push(Warning::ProbabilitiesClamped { count: clamped });
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        Ok(Self {
            spec: *spec,
            data: data.clone(),
            mode: WorthVector::from_reduced(labels, &mode.x),
            mode_x: mode.x,
            mode_log_kernel: mode.value,
            mode_gradient_norm: mode.gradient_norm,
            covariance,
            scale,
            grid_mass: moments.mass,
            mean,
            predictive,
            log_normalizer,
            shell_fraction,
            warnings,
        })
    }

    pub fn spec(&self) -> &PosteriorSpec {
        &self.spec
    }

    pub fn mean(&self) -> &WorthVector {
        &self.mean
    }

    pub fn mode(&self) -> &WorthVector {
        &self.mode
    }

    /// Norm of the reduced-coordinate gradient at the returned mode.
    pub fn mode_gradient_norm(&self) -> f64 {
        self.mode_gradient_norm
    }

    /// Posterior-averaged preference probabilities `η_lm`.
    pub fn predictive_matrix(&self) -> &PairMatrix {
        &self.predictive
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn shell_fraction(&self) -> f64 {
        self.shell_fraction
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    /// Laplace covariance of the reduced coordinates at the mode.
    pub fn laplace_covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Marginal density of `θ_index` on `points` equally spaced values spanning
    /// `halfwidth` Laplace standard deviations either side of the mode.
    pub fn marginal(&self, index: usize, points: usize) -> Result<MarginalCurve, EstimationError> {
        let n = self.data.len();
        if index >= n {
            return Err(EstimationError::DimensionMismatch {
                expected: n,
                got: index + 1,
            });
        }
        if points < 3 {
            return Err(EstimationError::Config("a marginal curve needs at least 3 points".into()));
        }
        let dim = n - 1;
        let inner_dim = dim - 1;
        let kernel = Kernel::new(&self.data, self.spec.model, self.spec.prior)?;

        // θ_index = c^T x.
        let c = if index < dim {
            DVector::from_fn(dim, |k, _| if k == index { 1.0 } else { 0.0 })
        } else {
            DVector::from_element(dim, -1.0)
        };
        let sigma_c = &self.covariance * &c;
        let variance = c.dot(&sigma_c);
        let sd = variance.sqrt();
        let along = &sigma_c / variance;
        // Nuisance coordinates: every reduced coordinate except `pivot`, which
        // is solved from c^T x = t. Their scale comes from the Laplace
        // conditional covariance given θ_index.
        let pivot = index.min(dim - 1);
        let free: Vec<usize> = (0..dim).filter(|&k| k != pivot).collect();
        let conditional = DMatrix::from_fn(inner_dim, inner_dim, |r, s| {
            let (a, b) = (free[r], free[s]);
            self.covariance[(a, b)] - sigma_c[a] * sigma_c[b] / variance
        });
        let inner_scale = conditional
            .cholesky()
            .ok_or(EstimationError::SingularInformation)?
            .l();
        let mut basis = DMatrix::zeros(dim, inner_dim);
        for (r, &a) in free.iter().enumerate() {
            for col in 0..inner_dim {
                basis[(a, col)] = inner_scale[(r, col)];
                basis[(pivot, col)] -= c[a] * inner_scale[(r, col)] / c[pivot];
            }
        }
        let jac = inner_scale.determinant().abs();
        let log_det_scale: f64 = self.scale.diagonal().iter().map(|v| v.ln()).sum();
        let norm = jac / (log_det_scale.exp() * self.grid_mass);

        let (nodes, weights) = scaled_rule(self.spec.grid.points_per_dim, self.spec.grid.halfwidth);
        let inner_points = self.spec.grid.points_per_dim;
        let inner_total = inner_points.pow(inner_dim as u32);
        let mode_x = DVector::from_column_slice(&self.mode_x);
        let center = c.dot(&mode_x);
        let halfwidth = self.spec.grid.halfwidth;
        let theta: Vec<f64> = (0..points)
            .map(|k| center + sd * halfwidth * (2.0 * k as f64 / (points - 1) as f64 - 1.0))
            .collect();
        let density: Vec<f64> = theta
            .par_iter()
            .map(|&t| {
                let offset = &mode_x + &along * (t - center);
                let mut digits = vec![0usize; inner_dim];
                let mut z = DVector::zeros(inner_dim);
                let mut sum = 0.0;
                for idx in 0..inner_total {
                    unravel(idx, inner_points, &mut digits);
                    let mut weight = 1.0;
                    for (k, &d) in digits.iter().enumerate() {
                        z[k] = nodes[d];
                        weight *= weights[d];
                    }
                    let x = &offset + &basis * &z;
                    let full = expand(x.as_slice());
                    let probs = kernel.probabilities(&full);
                    let log_k = kernel.log_likelihood_from(&probs) + kernel.log_prior(&full);
                    let w = weight * (log_k - self.mode_log_kernel).exp();
                    if w.is_finite() {
                        sum += w;
                    }
                }
                sum * norm
            })
            .collect();
        Ok(MarginalCurve {
            index,
            label: self.data.labels()[index].clone(),
            theta,
            density,
        })
    }

    pub fn summary(&self) -> Result<PosteriorSummary, EstimationError> {
        let marginals = (0..self.data.len())
            .map(|k| self.marginal(k, DEFAULT_MARGINAL_POINTS))
            .collect::<Result<_, _>>()?;
        Ok(PosteriorSummary {
            mean: self.mean.clone(),
            mode: self.mode.clone(),
            log_normalizer: self.log_normalizer,
            marginals,
        })
    }
}

/// Component-wise posterior expectations of the worths.
pub fn posterior_mean(data: &PairedComparisonData, spec: &PosteriorSpec) -> Result<WorthVector, EstimationError> {
    Ok(Posterior::fit(data, spec)?.mean)
}

/// Maximizer of the posterior kernel on the sum-zero hyperplane.
pub fn posterior_mode(data: &PairedComparisonData, spec: &PosteriorSpec) -> Result<WorthVector, EstimationError> {
    check_inputs(data, spec)?;
    let kernel = Kernel::new(data, spec.model, spec.prior)?;
    let (mode, _) = find_mode(&kernel)?;
    Ok(WorthVector::from_reduced(data.labels(), &mode.x))
}

/// Marginal posterior density of one worth parameter.
pub fn marginal_posterior(
    data: &PairedComparisonData,
    spec: &PosteriorSpec,
    index: usize,
) -> Result<MarginalCurve, EstimationError> {
    Posterior::fit(data, spec)?.marginal(index, DEFAULT_MARGINAL_POINTS)
}
