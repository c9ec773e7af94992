//! Quantities derived from worth estimates: plug-in preference matrices,
//! expected frequencies, the chi-square goodness-of-fit test, rankings and
//! the combined [`FitReport`].

use serde::Serialize;
use thiserror::Error;

use crate::bayes::{EstimationError, GridSpec, Posterior, PosteriorSpec, Prior, Warning};
use crate::data::{observed_preference_matrix, PairedComparisonData};
use crate::matrix::PairMatrix;
use crate::model::{ModelSpec, WorthVector};
use crate::special::chi_square_sf;

/// Worths closer than this are reported as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("degenerate expected frequency for pair ({i}, {j})")]
    DegenerateExpectedFrequency { i: usize, j: usize },
    #[error("goodness of fit needs at least three objects, got {0}")]
    NoDegreesOfFreedom(usize),
    #[error("estimate has {got} components, data has {expected} objects")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Mean,
    Mode,
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Estimator::Mean => "mean",
            Estimator::Mode => "mode",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofResult {
    pub chi_square: f64,
    pub df: u32,
    pub p_value: f64,
    /// Pairs with no comparisons, left out of the statistic.
    pub excluded_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ranking {
    /// Labels from most to least preferred.
    pub order: Vec<String>,
    /// Original object indices in the same order.
    pub indices: Vec<usize>,
    /// True when some adjacent worths are equal and input order decided.
    pub tied: bool,
}

/// Plug-in preference probabilities ψ(θ̂_i - θ̂_j).
pub fn preference_matrix(estimate: &WorthVector, model: ModelSpec) -> Result<PairMatrix, EstimationError> {
    model.validate()?;
    let theta = estimate.values();
    Ok(PairMatrix::from_fn(estimate.len(), |i, j| Some(model.prob(theta[i] - theta[j]))))
}

/// Posterior predictive probabilities, integrated on the posterior grid.
pub fn predictive_matrix(data: &PairedComparisonData, spec: &PosteriorSpec) -> Result<PairMatrix, EstimationError> {
    Ok(Posterior::fit(data, spec)?.predictive_matrix().clone())
}

/// Expected wins `n_ij ψ_ij`, kept real-valued.
pub fn expected_frequencies(
    data: &PairedComparisonData,
    estimate: &WorthVector,
    model: ModelSpec,
) -> Result<PairMatrix, EstimationError> {
    model.validate()?;
    if estimate.len() != data.len() {
        return Err(EstimationError::DimensionMismatch {
            expected: data.len(),
            got: estimate.len(),
        });
    }
    let theta = estimate.values();
    Ok(PairMatrix::from_fn(data.len(), |i, j| {
        Some(data.comparisons(i, j) as f64 * model.prob(theta[i] - theta[j]))
    }))
}

/// Pearson chi-square of observed against expected wins over compared pairs,
/// with `(n-1)(n-2)/2` degrees of freedom.
pub fn chi_square_gof(
    data: &PairedComparisonData,
    estimate: &WorthVector,
    model: ModelSpec,
) -> Result<GofResult, GofError> {
    let n = data.len();
    if estimate.len() != n {
        return Err(GofError::DimensionMismatch {
            expected: n,
            got: estimate.len(),
        });
    }
    if n < 3 {
        return Err(GofError::NoDegreesOfFreedom(n));
    }
    let theta = estimate.values();
    let mut chi_square = 0.0;
    let mut excluded_pairs = 0;
    for (i, j) in data.unordered_pairs() {
        let total = data.comparisons(i, j) as f64;
        if total == 0.0 {
            excluded_pairs += 1;
            continue;
        }
        let d = theta[i] - theta[j];
        let expected_i = total * model.prob(d);
        let expected_j = total * model.prob(-d);
        if expected_i <= 0.0 {
            return Err(GofError::DegenerateExpectedFrequency { i, j });
        }
        if expected_j <= 0.0 {
            return Err(GofError::DegenerateExpectedFrequency { i: j, j: i });
        }
        let observed_i = data.wins(i, j) as f64;
        let observed_j = data.wins(j, i) as f64;
        chi_square += (observed_i - expected_i).powi(2) / expected_i + (observed_j - expected_j).powi(2) / expected_j;
    }
    let df = ((n - 1) * (n - 2) / 2) as u32;
    let p_value = chi_square_sf(chi_square, df).expect("statistic is finite and non-negative");
    Ok(GofResult {
        chi_square,
        df,
        p_value,
        excluded_pairs,
    })
}

/// Orders objects by descending worth. Ties keep input order.
pub fn rank_objects(estimate: &WorthVector) -> Ranking {
    let theta = estimate.values();
    let mut indices: Vec<usize> = (0..theta.len()).collect();
    indices.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]));
    let tied = indices
        .windows(2)
        .any(|w| (theta[w[0]] - theta[w[1]]).abs() <= TIE_TOLERANCE);
    // total_cmp is a strict order, so re-sort near-equal worths by input index.
    if tied {
        indices.sort_by(|&a, &b| {
            if (theta[a] - theta[b]).abs() <= TIE_TOLERANCE {
                a.cmp(&b)
            } else {
                theta[b].total_cmp(&theta[a])
            }
        });
    }
    Ranking {
        order: indices.iter().map(|&k| estimate.labels()[k].clone()).collect(),
        indices,
        tied,
    }
}

/// Everything derived from one point estimate.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimator: Estimator,
    pub worths: WorthVector,
    pub ranking: Ranking,
    pub preference_matrix: PairMatrix,
    pub expected_frequencies: PairMatrix,
    pub gof: Option<GofResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gof_error: Option<String>,
}

/// Full analysis for one (model, prior) combination.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: ModelSpec,
    pub prior: Prior,
    pub grid: GridSpec,
    pub data: PairedComparisonData,
    pub observed_preferences: PairMatrix,
    pub estimates: Vec<EstimateReport>,
    pub predictive_matrix: PairMatrix,
    pub log_normalizer: f64,
    pub warnings: Vec<Warning>,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn estimate(&self, estimator: Estimator) -> Option<&EstimateReport> {
        self.estimates.iter().find(|e| e.estimator == estimator)
    }
}

fn estimate_report(
    data: &PairedComparisonData,
    model: ModelSpec,
    estimator: Estimator,
    worths: WorthVector,
) -> Result<EstimateReport, EstimationError> {
    let (gof, gof_error) = match chi_square_gof(data, &worths, model) {
        Ok(g) => (Some(g), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EstimateReport {
        estimator,
        ranking: rank_objects(&worths),
        preference_matrix: preference_matrix(&worths, model)?,
        expected_frequencies: expected_frequencies(data, &worths, model)?,
        worths,
        gof,
        gof_error,
    })
}

/// Runs the posterior and every derived quantity for the requested estimators.
pub fn fit(
    data: &PairedComparisonData,
    spec: &PosteriorSpec,
    estimators: &[Estimator],
) -> Result<FitReport, EstimationError> {
    let posterior = Posterior::fit(data, spec)?;
    let estimates = estimators
        .iter()
        .map(|&e| {
            let worths = match e {
                Estimator::Mean => posterior.mean().clone(),
                Estimator::Mode => posterior.mode().clone(),
            };
            estimate_report(data, spec.model, e, worths)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut notes = Vec::new();
    let uncompared = data
        .unordered_pairs()
        .filter(|&(i, j)| data.comparisons(i, j) == 0)
        .count();
    if uncompared > 0 {
        notes.push(format!(
            "{uncompared} pair(s) never compared: excluded from the chi-square sum, degrees of freedom unchanged"
        ));
    }
    for e in &estimates {
        if e.ranking.tied {
            notes.push(format!("ranking by posterior {} contains ties", e.estimator));
        }
    }
    Ok(FitReport {
        model: spec.model,
        prior: spec.prior,
        grid: spec.grid,
        data: data.clone(),
        observed_preferences: observed_preference_matrix(data),
        estimates,
        predictive_matrix: posterior.predictive_matrix().clone(),
        log_normalizer: posterior.log_normalizer(),
        warnings: posterior.warnings().to_vec(),
        notes,
    })
}
