//! Score weights and the covariance models they imply.
//!
//! Two independent routes exist for the covariance reproduced by factor score
//! estimates: [`fs_implied_sigma`] works from the loadings directly, while
//! [`score_model_implied_sigma`] works from any weight matrix. Tests rely on
//! their agreement, so they do not share code.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{invert_spd_matrix, Cholesky, CorrelationMatrix, FactorModel, SYMMETRY_TOL};

/// Pivots of `B' Sigma B` below this (but above the singularity tolerance)
/// produce a conditioning warning.
pub const NEAR_SINGULAR_PIVOT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    Regression,
    Bartlett,
    FixedPattern,
}

/// A `p x q` matrix of score weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreWeights {
    values: DMatrix<f64>,
    kind: WeightKind,
}

impl ScoreWeights {
    /// Estimated weights; only finiteness is checked.
    pub fn estimated(values: DMatrix<f64>, kind: WeightKind) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Dimension("weight matrix must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("weights must be finite".into()));
        }
        Ok(ScoreWeights { values, kind })
    }

    /// A 0/1 scale pattern. Each indicator feeds at most one scale and no
    /// scale is empty.
    pub fn fixed_pattern(values: DMatrix<f64>) -> Result<Self> {
        let (p, q) = values.shape();
        if p == 0 || q == 0 {
            return Err(Error::Dimension("pattern must be non-empty".into()));
        }
        if values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Invalid("pattern entries must be 0 or 1".into()));
        }
        for (i, row) in values.row_iter().enumerate() {
            if row.iter().filter(|&&v| v != 0.0).count() > 1 {
                return Err(Error::Invalid(format!(
                    "indicator {} is assigned to more than one scale",
                    i + 1
                )));
            }
        }
        for (j, col) in values.column_iter().enumerate() {
            if col.iter().all(|&v| v == 0.0) {
                return Err(Error::Invalid(format!("scale {} has no indicators", j + 1)));
            }
        }
        Ok(ScoreWeights {
            values,
            kind: WeightKind::FixedPattern,
        })
    }

    /// A single scale summing all `p` indicators.
    pub fn unit(p: usize) -> Self {
        ScoreWeights {
            values: DMatrix::from_element(p, 1, 1.0),
            kind: WeightKind::FixedPattern,
        }
    }

    /// Builds a pattern from a scale index per indicator (`None` leaves the
    /// indicator out of every scale).
    pub fn from_assignments(assignments: &[Option<usize>], scales: usize) -> Result<Self> {
        let mut values = DMatrix::zeros(assignments.len(), scales);
        for (i, a) in assignments.iter().enumerate() {
            if let Some(s) = *a {
                if s >= scales {
                    return Err(Error::Dimension(format!(
                        "indicator {} assigned to scale {} of {scales}",
                        i + 1,
                        s + 1
                    )));
                }
                values[(i, s)] = 1.0;
            }
        }
        Self::fixed_pattern(values)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn q(&self) -> usize {
        self.values.ncols()
    }

    /// Same weights multiplied by `c`; the kind becomes estimated-style
    /// unless `c` is one.
    pub fn scaled(&self, c: f64) -> Self {
        let kind = if c == 1.0 { self.kind } else { WeightKind::Regression };
        ScoreWeights {
            values: &self.values * c,
            kind,
        }
    }
}

/// Regression component loadings and scale covariances of a weighted
/// composite model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleModel {
    pub loadings: DMatrix<f64>,
    pub scale_covariance: DMatrix<f64>,
    pub standardized: bool,
}

fn check_dims(sigma: &CorrelationMatrix, p: usize, what: &str) -> Result<()> {
    if sigma.p() != p {
        return Err(Error::Dimension(format!(
            "{what} has {p} indicators but the covariance matrix has {}",
            sigma.p()
        )));
    }
    Ok(())
}

/// Thurstone regression weights `Sigma^-1 L Phi`.
pub fn regression_weights(sigma: &CorrelationMatrix, model: &FactorModel) -> Result<ScoreWeights> {
    check_dims(sigma, model.p(), "factor model")?;
    let rhs = model.loadings() * model.factor_correlations();
    let b = Cholesky::factor(sigma.values())?.solve(&rhs);
    ScoreWeights::estimated(b, WeightKind::Regression)
}

/// Bartlett weights `Psi^-2 L (L' Psi^-2 L)^-1`.
pub fn bartlett_weights(model: &FactorModel) -> Result<ScoreWeights> {
    let mut scaled = model.loadings().clone();
    for (mut row, u) in scaled.row_iter_mut().zip(model.uniquenesses().iter()) {
        row /= *u;
    }
    let gram = model.loadings().transpose() * &scaled;
    let b = scaled * invert_spd_matrix(&gram)?;
    ScoreWeights::estimated(b, WeightKind::Bartlett)
}

/// Covariance reproduced by factor score estimates, `L (L' Sigma^-1 L)^-1 L'`.
pub fn fs_implied_sigma(sigma: &CorrelationMatrix, model: &FactorModel) -> Result<CorrelationMatrix> {
    check_dims(sigma, model.p(), "factor model")?;
    let lambda = model.loadings();
    let sigma_inv_lambda = Cholesky::factor(sigma.values())?.solve(lambda);
    let inner = invert_spd_matrix(&(lambda.transpose() * sigma_inv_lambda))?;
    Ok(CorrelationMatrix::from_model(lambda * inner * lambda.transpose()))
}

/// Covariance reproduced by weighted composites,
/// `Sigma B (B' Sigma B)^-1 B' Sigma`.
pub fn score_model_implied_sigma(sigma: &CorrelationMatrix, weights: &ScoreWeights) -> Result<CorrelationMatrix> {
    check_dims(sigma, weights.p(), "weight matrix")?;
    let sigma_b = sigma.values() * weights.values();
    let gram = weights.values().transpose() * &sigma_b;
    let inner = invert_spd_matrix(&gram)?;
    Ok(CorrelationMatrix::from_model(&sigma_b * inner * sigma_b.transpose()))
}

/// Smallest Cholesky pivot of `B' Sigma B`.
pub fn scale_gram_min_pivot(sigma: &CorrelationMatrix, weights: &ScoreWeights) -> Result<f64> {
    check_dims(sigma, weights.p(), "weight matrix")?;
    let gram = weights.values().transpose() * sigma.values() * weights.values();
    Ok(Cholesky::factor(&gram)?.min_pivot())
}

/// A conditioning warning when `B' Sigma B` is close to singular.
pub fn conditioning_warning(sigma: &CorrelationMatrix, weights: &ScoreWeights) -> Result<Option<String>> {
    let pivot = scale_gram_min_pivot(sigma, weights)?;
    Ok((pivot < NEAR_SINGULAR_PIVOT)
        .then(|| format!("scale covariance is nearly singular (smallest pivot {pivot:e}); scales may be collinear")))
}

/// Regression component loadings `Sigma B (B' Sigma B)^-1`, or the
/// standardized form with `D = diag(B' Sigma B)`.
pub fn regression_component_loadings(
    sigma: &CorrelationMatrix,
    pattern: &ScoreWeights,
    standardize: bool,
) -> Result<ScaleModel> {
    check_dims(sigma, pattern.p(), "pattern")?;
    let sigma_b = sigma.values() * pattern.values();
    let cov = pattern.values().transpose() * &sigma_b;
    if !standardize {
        let loadings = &sigma_b * invert_spd_matrix(&cov)?;
        return Ok(ScaleModel {
            loadings,
            scale_covariance: cov,
            standardized: false,
        });
    }
    let q = cov.nrows();
    let mut d_inv_sqrt = DMatrix::zeros(q, q);
    for j in 0..q {
        let d = cov[(j, j)];
        if !(d > 0.0) {
            return Err(Error::Singular { index: j, value: d });
        }
        d_inv_sqrt[(j, j)] = 1.0 / d.sqrt();
    }
    let mut std_cov = &d_inv_sqrt * &cov * &d_inv_sqrt;
    for j in 0..q {
        debug_assert!((std_cov[(j, j)] - 1.0).abs() < SYMMETRY_TOL);
        std_cov[(j, j)] = 1.0;
    }
    let loadings = &sigma_b * &d_inv_sqrt * invert_spd_matrix(&std_cov)?;
    Ok(ScaleModel {
        loadings,
        scale_covariance: std_cov,
        standardized: true,
    })
}
