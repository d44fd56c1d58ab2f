//! Embedded STAI example: 20 anxiety indicators from 191 students, with the
//! completely standardized loadings of a one-factor model.

use crate::io::{parse_loadings_str, parse_matrix_str};
use crate::model::{CorrelationMatrix, FactorModel};

/// Lower-triangle correlation matrix as printed, three decimals.
pub const CORRELATIONS_TEXT: &str = include_str!("../data/stai_correlations.txt");

pub const LOADINGS_TEXT: &str = include_str!("../data/stai_loadings.txt");

pub const INDICATORS: usize = 20;

pub fn correlations() -> CorrelationMatrix {
    parse_matrix_str(CORRELATIONS_TEXT, None, None, true)
        .expect("embedded STAI matrix parses")
        .matrix
}

pub fn loadings() -> Vec<f64> {
    parse_loadings_str(LOADINGS_TEXT, Some(INDICATORS)).expect("embedded STAI loadings parse")
}

pub fn model() -> FactorModel {
    FactorModel::one_factor(&loadings()).expect("STAI loadings are below one")
}
