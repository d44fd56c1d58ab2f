//! SRMR discrepancy and its closed form for parallel measurements.

use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CorrelationMatrix, ParallelSpec};

/// Which covariance model a fit report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FactorScore,
    UnitWeighted,
    ReflectiveFactor,
    ClosedFormParallel,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::FactorScore => "factor_score",
            ModelKind::UnitWeighted => "unit_weighted",
            ModelKind::ReflectiveFactor => "reflective_factor",
            ModelKind::ClosedFormParallel => "closed_form_parallel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub srmr: f64,
    /// `Sigma - Sigma_model`.
    pub residuals: DMatrix<f64>,
    pub model_kind: ModelKind,
    pub warnings: Vec<String>,
}

impl FitReport {
    /// Recomputes the SRMR from the stored residuals.
    pub fn recompute(&self) -> f64 {
        srmr_from_residuals(&self.residuals)
    }
}

/// SRMR of a residual matrix: the sum of all squared residuals plus the
/// squared diagonal residuals once more, divided by `p (p + 1)`, then the
/// square root.
pub fn srmr_from_residuals(residuals: &DMatrix<f64>) -> f64 {
    let p = residuals.nrows() as f64;
    let all: f64 = residuals.iter().map(|e| e * e).sum();
    let diag: f64 = residuals.diagonal().iter().map(|e| e * e).sum();
    ((all + diag) / (p * (p + 1.0))).sqrt()
}

/// Compares an observed matrix against a model-implied one.
pub fn srmr(sigma: &CorrelationMatrix, sigma_model: &CorrelationMatrix, model_kind: ModelKind) -> Result<FitReport> {
    if sigma.p() != sigma_model.p() {
        return Err(Error::Dimension(format!(
            "cannot compare a {0}x{0} matrix with a {1}x{1} model",
            sigma.p(),
            sigma_model.p()
        )));
    }
    let residuals = sigma.values() - sigma_model.values();
    Ok(FitReport {
        srmr: srmr_from_residuals(&residuals),
        residuals,
        model_kind,
        warnings: Vec::new(),
    })
}

/// SRMR of the unit-weighted scale model on parallel measurements.
///
/// Off-diagonal residuals are all `-(1 - r) / p` and diagonal residuals
/// `(1 - r)(1 - 1/p)`, which gives a value linear in `1 - r`.
pub fn srmr_parallel_closed_form(spec: ParallelSpec) -> f64 {
    closed_form(spec.r(), spec.p() as f64)
}

fn closed_form(r: f64, p: f64) -> f64 {
    let off = (1.0 - r) / p;
    let diag = (1.0 - r) * (1.0 - 1.0 / p);
    ((p - 1.0) / (p + 1.0) * off * off + 2.0 / (p + 1.0) * diag * diag).sqrt()
}

/// Inter-correlation `r` at which parallel measurements reach `target_srmr`.
///
/// Bisection over `[0, 1]`; the closed form decreases strictly in `r`.
pub fn solve_r_for_srmr(target_srmr: f64, p: usize) -> Result<f64> {
    if !(target_srmr > 0.0 && target_srmr.is_finite()) {
        return Err(Error::Invalid(format!(
            "target SRMR must be positive, got {target_srmr}"
        )));
    }
    if p < 2 {
        return Err(Error::Dimension(format!("p must be at least 2, got {p}")));
    }
    let pf = p as f64;
    let ceiling = closed_form(0.0, pf);
    if target_srmr > ceiling {
        return Err(Error::NoSolution(format!(
            "SRMR {target_srmr} exceeds the maximum {ceiling:.6} attainable with p = {p}"
        )));
    }
    if target_srmr == ceiling {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if closed_form(mid, pf) > target_srmr {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    debug_assert!((closed_form(r, pf) - target_srmr).abs() < 1e-9);
    Ok(r)
}

/// Smallest `p >= 2` for which parallel measurements with correlation `r`
/// reach `target_srmr` or better.
///
/// The closed form rises from `p = 2` to `p = 3` and decreases from there
/// on, so `p = 2` is tested on its own before an exponential search and
/// bisection over `p >= 3`.
pub fn min_p_for_srmr(target_srmr: f64, r: f64) -> Result<u64> {
    if !(target_srmr > 0.0 && target_srmr.is_finite()) {
        return Err(Error::Invalid(format!(
            "target SRMR must be positive, got {target_srmr}"
        )));
    }
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Invalid(format!("r must lie in [0, 1), got {r}")));
    }
    let meets = |p: u64| closed_form(r, p as f64) <= target_srmr;
    if meets(2) {
        return Ok(2);
    }
    let mut lo = 2u64;
    let mut hi = 4u64;
    while !meets(hi) {
        lo = hi;
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::NoSolution(format!("SRMR {target_srmr} needs more than {lo} indicators")))?;
    }
    // invariant: !meets(lo), meets(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// One cell of the required-correlation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub p: usize,
    pub srmr_level: f64,
    /// `None` when no `r` in `[0, 1]` reaches the level.
    pub required_r: Option<f64>,
}

/// Required `r` for every `(p, level)` pair, ordered by `p` then level.
pub fn required_r_curve(srmr_levels: &[f64], p_range: RangeInclusive<usize>) -> Result<Vec<CurveRow>> {
    if let Some(bad) = srmr_levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Invalid(format!("SRMR levels must be positive, got {bad}")));
    }
    if *p_range.start() < 2 {
        return Err(Error::Dimension("p range must start at 2 or above".into()));
    }
    let mut rows = Vec::new();
    for p in p_range {
        for &level in srmr_levels {
            let required_r = match solve_r_for_srmr(level, p) {
                Ok(r) => Some(r),
                Err(Error::NoSolution(_)) => None,
                Err(e) => return Err(e),
            };
            rows.push(CurveRow {
                p,
                srmr_level: level,
                required_r,
            });
        }
    }
    Ok(rows)
}
