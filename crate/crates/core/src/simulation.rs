//! Monte Carlo study of the unit-weighted scale SRMR in samples drawn from
//! one-factor populations.
//!
//! Every `(cell, replication)` pair owns a private ChaCha stream derived from
//! the master seed, and per-replication results are aggregated in
//! replication order. The cell table therefore does not depend on thread
//! count or scheduling.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{srmr, ModelKind};
use crate::model::CorrelationMatrix;
use crate::scoring::{score_model_implied_sigma, ScoreWeights};

/// Offset applied to half of the indicators in the variable pattern.
pub const LOADING_SPREAD: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingPattern {
    /// Equal loadings (parallel measurements).
    Constant,
    /// Half the loadings raised and half lowered by [`LOADING_SPREAD`].
    Variable,
}

impl LoadingPattern {
    pub fn label(&self) -> &'static str {
        match self {
            LoadingPattern::Constant => "constant",
            LoadingPattern::Variable => "variable",
        }
    }
}

/// How replications are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when the `parallel` feature is off.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub sample_sizes: Vec<usize>,
    pub mean_loadings: Vec<f64>,
    pub indicator_counts: Vec<usize>,
    pub patterns: Vec<LoadingPattern>,
    pub replications: usize,
    pub seed: u64,
}

impl SimulationConfig {
    /// The full 3 x 4 x 3 x 2 design: n in {150, 300, 900}, mean loadings
    /// {.2, .4, .6, .8}, p in {6, 12, 24}, both loading patterns.
    pub fn full_design(replications: usize, seed: u64) -> Self {
        SimulationConfig {
            sample_sizes: vec![150, 300, 900],
            mean_loadings: vec![0.2, 0.4, 0.6, 0.8],
            indicator_counts: vec![6, 12, 24],
            patterns: vec![LoadingPattern::Constant, LoadingPattern::Variable],
            replications,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Invalid("replications must be at least 1".into()));
        }
        if self.sample_sizes.is_empty()
            || self.mean_loadings.is_empty()
            || self.indicator_counts.is_empty()
            || self.patterns.is_empty()
        {
            return Err(Error::Invalid("every design factor needs at least one level".into()));
        }
        for &l in &self.mean_loadings {
            for &pattern in &self.patterns {
                for &p in &self.indicator_counts {
                    population_loadings(l, p, pattern)?;
                }
            }
        }
        for &n in &self.sample_sizes {
            for &p in &self.indicator_counts {
                if n < p + 1 {
                    return Err(Error::Invalid(format!(
                        "sample size {n} must be at least p + 1 = {}",
                        p + 1
                    )));
                }
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<CellKey> {
        let mut keys = Vec::new();
        for &n in &self.sample_sizes {
            for &l in &self.mean_loadings {
                for &p in &self.indicator_counts {
                    for &pattern in &self.patterns {
                        keys.push(CellKey { n, l, p, pattern });
                    }
                }
            }
        }
        keys
    }
}

/// Aggregated results for one design cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub n: usize,
    pub l: f64,
    pub p: usize,
    pub pattern: LoadingPattern,
    pub population_srmr: f64,
    pub mean_srmr_s: f64,
    pub sd_srmr_s: f64,
    pub replications_used: usize,
}

#[derive(Debug, Clone, Copy)]
struct CellKey {
    n: usize,
    l: f64,
    p: usize,
    pattern: LoadingPattern,
}

impl CellKey {
    fn stream_seed(&self, master: u64) -> u64 {
        let mut h = splitmix64(master);
        for word in [self.n as u64, self.l.to_bits(), self.p as u64, self.pattern as u64] {
            h = splitmix64(h ^ word);
        }
        h
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Population loadings for a cell. The variable pattern raises the first
/// half and lowers the second half.
pub fn population_loadings(l: f64, p: usize, pattern: LoadingPattern) -> Result<Vec<f64>> {
    if p == 0 {
        return Err(Error::Dimension("p must be positive".into()));
    }
    if !(l > 0.0 && l < 1.0) {
        return Err(Error::Invalid(format!("mean loading must lie in (0, 1), got {l}")));
    }
    match pattern {
        LoadingPattern::Constant => Ok(vec![l; p]),
        LoadingPattern::Variable => {
            if !p.is_multiple_of(2) {
                return Err(Error::Dimension(format!("variable loadings need an even p, got {p}")));
            }
            let (hi, lo) = (l + LOADING_SPREAD, l - LOADING_SPREAD);
            if !(hi < 1.0 && lo > 0.0) {
                return Err(Error::Invalid(format!("loadings {lo} and {hi} must lie in (0, 1)")));
            }
            Ok((0..p).map(|j| if j < p / 2 { hi } else { lo }).collect())
        }
    }
}

/// Correlation matrix of the one-factor population: `l_i l_j` off the
/// diagonal, ones on it.
pub fn population_correlation(loadings: &[f64]) -> CorrelationMatrix {
    let p = loadings.len();
    let values = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { loadings[i] * loadings[j] });
    CorrelationMatrix::from_model(values)
}

/// Draws `n` cases from the one-factor model `x_j = l_j f + sqrt(1 - l_j^2) e_j`
/// and returns their product-moment correlation matrix.
///
/// A sample with a zero-variance indicator is redrawn once from the same
/// stream before giving up.
pub fn sample_correlation<R: Rng + ?Sized>(loadings: &[f64], n: usize, rng: &mut R) -> Result<CorrelationMatrix> {
    let p = loadings.len();
    if p == 0 {
        return Err(Error::Dimension("need at least one indicator".into()));
    }
    if n < p + 1 {
        return Err(Error::Invalid(format!(
            "sample size {n} must be at least p + 1 = {}",
            p + 1
        )));
    }
    if let Some(bad) = loadings.iter().find(|l| !(l.abs() <= 1.0)) {
        return Err(Error::Invalid(format!("loading {bad} lies outside [-1, 1]")));
    }
    let unique: Vec<f64> = loadings.iter().map(|l| (1.0 - l * l).sqrt()).collect();
    let mut data = vec![0.0; n * p];
    match draw_correlation(loadings, &unique, n, rng, &mut data) {
        Ok(m) => Ok(m),
        Err(Error::DegenerateSample { .. }) => draw_correlation(loadings, &unique, n, rng, &mut data),
        Err(e) => Err(e),
    }
}

fn draw_correlation<R: Rng + ?Sized>(
    loadings: &[f64],
    unique: &[f64],
    n: usize,
    rng: &mut R,
    data: &mut [f64],
) -> Result<CorrelationMatrix> {
    let p = loadings.len();
    let mut means = vec![0.0; p];
    for row in data.chunks_exact_mut(p) {
        let f: f64 = rng.sample(StandardNormal);
        for (j, x) in row.iter_mut().enumerate() {
            let e: f64 = rng.sample(StandardNormal);
            *x = loadings[j] * f + unique[j] * e;
            means[j] += *x;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    // lower triangle of the centered cross-product matrix, row-major
    let mut cross = vec![0.0; p * p];
    let mut centered = vec![0.0; p];
    for row in data.chunks_exact(p) {
        for j in 0..p {
            centered[j] = row[j] - means[j];
        }
        for j in 0..p {
            let dj = centered[j];
            let out = &mut cross[j * p..j * p + j + 1];
            for (c, dk) in out.iter_mut().zip(&centered[..=j]) {
                *c += dj * dk;
            }
        }
    }
    let scale: Vec<f64> = (0..p).map(|j| cross[j * p + j].sqrt()).collect();
    if let Some(j) = scale.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::DegenerateSample { indicator: j });
    }
    let values = DMatrix::from_fn(p, p, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = if i > j { (i, j) } else { (j, i) };
            cross[a * p + b] / (scale[a] * scale[b])
        }
    });
    Ok(CorrelationMatrix::from_model(values))
}

/// SRMR of the single unit-weighted scale over all indicators.
pub fn unit_weighted_srmr(sigma: &CorrelationMatrix) -> Result<f64> {
    let implied = score_model_implied_sigma(sigma, &ScoreWeights::unit(sigma.p()))?;
    Ok(srmr(sigma, &implied, ModelKind::UnitWeighted)?.srmr)
}

fn replicate(key: &CellKey, loadings: &[f64], cell_seed: u64, rep: usize) -> Option<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
    rng.set_stream(rep as u64);
    let sample = sample_correlation(loadings, key.n, &mut rng).ok()?;
    unit_weighted_srmr(&sample).ok()
}

/// Runs every design cell with the default execution strategy.
pub fn run_simulation(config: &SimulationConfig) -> Result<Vec<SimulationCell>> {
    run_simulation_with(config, Execution::default())
}

pub fn run_simulation_with(config: &SimulationConfig, execution: Execution) -> Result<Vec<SimulationCell>> {
    config.validate()?;
    let keys = config.cells();
    let reps = config.replications;
    let prepared: Vec<(CellKey, Vec<f64>, u64)> = keys
        .iter()
        .map(|k| {
            Ok((
                *k,
                population_loadings(k.l, k.p, k.pattern)?,
                k.stream_seed(config.seed),
            ))
        })
        .collect::<Result<_>>()?;

    let job = |idx: usize| {
        let (key, loadings, seed) = &prepared[idx / reps];
        replicate(key, loadings, *seed, idx % reps)
    };
    let total = prepared.len() * reps;
    let values: Vec<Option<f64>> = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..total).into_par_iter().map(job).collect()
        }
        _ => (0..total).map(job).collect(),
    };

    prepared
        .iter()
        .zip(values.chunks(reps))
        .map(|((key, loadings, _), chunk)| {
            let population_srmr = unit_weighted_srmr(&population_correlation(loadings))?;
            let used: Vec<f64> = chunk.iter().flatten().copied().collect();
            let (mean, sd) = mean_sd(&used);
            Ok(SimulationCell {
                n: key.n,
                l: key.l,
                p: key.p,
                pattern: key.pattern,
                population_srmr,
                mean_srmr_s: mean,
                sd_srmr_s: sd,
                replications_used: used.len(),
            })
        })
        .collect()
}

/// Mean and population-style standard deviation (divisor = count).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
