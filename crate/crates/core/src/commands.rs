//! The `fit-check`, `closed-form` and `simulate` commands as pure functions
//! returning report documents.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::fit::{min_p_for_srmr, required_r_curve, solve_r_for_srmr, srmr, srmr_parallel_closed_form, ModelKind};
use crate::io::ParsedMatrix;
use crate::model::{factor_implied_sigma, CorrelationMatrix, FactorModel, ParallelSpec};
use crate::report::{FitEntry, InputEcho, NamedValue, ReportDocument};
use crate::scoring::{
    conditioning_warning, fs_implied_sigma, regression_weights, score_model_implied_sigma, ScoreWeights,
};
use crate::simulation::{run_simulation_with, Execution, SimulationConfig};
use crate::stai;

#[derive(Debug, Clone, Copy, Default)]
pub struct FitCheckOptions {
    /// Also fit the one-factor reflective model `LL' + diag(I - LL')`.
    pub reflective: bool,
    /// Include residual matrices in the report.
    pub residuals: bool,
}

/// Fits the unit-weighted scale model and, given loadings, the factor score
/// model (and optionally the reflective model) to an observed matrix.
pub fn fit_check(matrix: ParsedMatrix, loadings: Option<&[f64]>, options: FitCheckOptions) -> Result<ReportDocument> {
    let sigma = &matrix.matrix;
    let mut doc = ReportDocument::new("fit-check");
    doc.inputs.push(InputEcho::of_matrix("matrix", sigma.values()));
    doc.warnings.extend(matrix.warnings);

    let unit = ScoreWeights::unit(sigma.p());
    let implied = score_model_implied_sigma(sigma, &unit)?;
    let mut report = srmr(sigma, &implied, ModelKind::UnitWeighted)?;
    report.warnings.extend(conditioning_warning(sigma, &unit)?);
    doc.fits.push(FitEntry::from_report(&report, options.residuals));

    if let Some(loadings) = loadings {
        if loadings.len() != sigma.p() {
            return Err(Error::Dimension(format!(
                "{} loadings given for a {}-indicator matrix",
                loadings.len(),
                sigma.p()
            )));
        }
        let model = FactorModel::one_factor(loadings)?;
        let lambda = nalgebra::DMatrix::from_column_slice(loadings.len(), 1, loadings);
        doc.inputs.push(InputEcho::of_matrix("loadings", &lambda));

        let implied = fs_implied_sigma(sigma, &model)?;
        let mut report = srmr(sigma, &implied, ModelKind::FactorScore)?;
        let weights = regression_weights(sigma, &model)?;
        report.warnings.extend(conditioning_warning(sigma, &weights)?);
        doc.fits.push(FitEntry::from_report(&report, options.residuals));

        if options.reflective {
            let implied = factor_implied_sigma(&model);
            let report = srmr(sigma, &implied, ModelKind::ReflectiveFactor)?;
            doc.fits.push(FitEntry::from_report(&report, options.residuals));
        }
    }
    Ok(doc)
}

/// `fit-check` on the embedded STAI data.
pub fn fit_check_stai(options: FitCheckOptions) -> Result<ReportDocument> {
    let matrix = ParsedMatrix {
        matrix: stai::correlations(),
        layout: crate::io::Layout::LowerTriangleWithDiagonal,
        warnings: Vec::new(),
    };
    fit_check(matrix, Some(&stai::loadings()), options)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedFormRequest {
    Value {
        r: f64,
        p: usize,
    },
    SolveR {
        target: f64,
        p: usize,
    },
    MinP {
        target: f64,
        r: f64,
    },
    Curve {
        levels: Vec<f64>,
        p_range: RangeInclusive<usize>,
    },
}

pub fn closed_form(request: &ClosedFormRequest) -> Result<ReportDocument> {
    let mut doc = ReportDocument::new("closed-form");
    let mut push = |name: &str, value: f64| {
        doc.values.push(NamedValue {
            name: name.into(),
            value,
        })
    };
    match request {
        ClosedFormRequest::Value { r, p } => {
            push("r", *r);
            push("p", *p as f64);
            push("srmr", srmr_parallel_closed_form(ParallelSpec::new(*r, *p)?));
        }
        ClosedFormRequest::SolveR { target, p } => {
            push("srmr", *target);
            push("p", *p as f64);
            push("required_r", solve_r_for_srmr(*target, *p)?);
        }
        ClosedFormRequest::MinP { target, r } => {
            push("srmr", *target);
            push("r", *r);
            push("min_p", min_p_for_srmr(*target, *r)? as f64);
        }
        ClosedFormRequest::Curve { levels, p_range } => {
            doc.curve = required_r_curve(levels, p_range.clone())?;
        }
    }
    Ok(doc)
}

pub fn simulate(config: &SimulationConfig, execution: Execution) -> Result<ReportDocument> {
    let mut doc = ReportDocument::new("simulate");
    doc.simulation = run_simulation_with(config, execution)?;
    for cell in &doc.simulation {
        if cell.replications_used < config.replications {
            doc.warnings.push(format!(
                "cell n={} l={} p={} {}: {} of {} replications failed",
                cell.n,
                cell.l,
                cell.p,
                cell.pattern.label(),
                config.replications - cell.replications_used,
                config.replications
            ));
        }
    }
    Ok(doc)
}

/// Convenience wrapper used by callers that already hold a matrix.
pub fn parsed(matrix: CorrelationMatrix) -> ParsedMatrix {
    let warnings = if matrix.is_positive_definite() {
        Vec::new()
    } else {
        vec!["matrix is not positive definite".to_string()]
    };
    ParsedMatrix {
        matrix,
        layout: crate::io::Layout::FullSymmetric,
        warnings,
    }
}
