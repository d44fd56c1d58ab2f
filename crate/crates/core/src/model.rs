//! Domain types for indicator covariance structures and the linear algebra
//! they rely on.
//!
//! Every matrix that enters the crate goes through [`CorrelationMatrix::new`],
//! which symmetrizes it as `(M + M') / 2` and then validates it. Inversion is
//! always Cholesky based since all inputs are symmetric positive definite by
//! construction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for symmetry and unit-diagonal checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Smallest admissible Cholesky pivot.
pub const PIVOT_TOL: f64 = 1e-10;

/// Inputs whose raw asymmetry exceeds this are rejected rather than averaged.
const MAX_RAW_ASYMMETRY: f64 = 1e-6;

/// A symmetric `p x p` covariance or correlation matrix of indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
    is_standardized: bool,
}

impl CorrelationMatrix {
    /// Symmetrizes and validates an observed matrix.
    ///
    /// The matrix is flagged as standardized when its diagonal is all ones;
    /// in that case every off-diagonal entry must lie in `[-1, 1]`.
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let p = values.nrows();
        if p == 0 || values.ncols() != p {
            return Err(Error::Dimension(format!(
                "expected a non-empty square matrix, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some(((i, j), v)) = values
            .iter()
            .enumerate()
            .map(|(k, v)| ((k % p, k / p), v))
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Invalid(format!(
                "entry ({}, {}) is not finite: {v}",
                i + 1,
                j + 1
            )));
        }
        for i in 0..p {
            for j in 0..i {
                let gap = (values[(i, j)] - values[(j, i)]).abs();
                if gap > MAX_RAW_ASYMMETRY {
                    return Err(Error::Invalid(format!(
                        "matrix is not symmetric: entries ({}, {}) and ({}, {}) differ by {gap:e}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        let values = symmetrize(values);
        let unit_diagonal = has_unit_diagonal(&values);
        if unit_diagonal {
            for i in 0..p {
                for j in 0..i {
                    let v = values[(i, j)];
                    if v.abs() > 1.0 + SYMMETRY_TOL {
                        return Err(Error::Invalid(format!(
                            "correlation ({}, {}) = {v} lies outside [-1, 1]",
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        Ok(CorrelationMatrix {
            values,
            is_standardized: unit_diagonal,
        })
    }

    /// Wraps a model-implied matrix. Rounding asymmetry is averaged away and
    /// no range checks apply.
    pub(crate) fn from_model(values: DMatrix<f64>) -> Self {
        let values = symmetrize(values);
        let p = values.nrows();
        let in_range = (0..p).all(|i| (0..i).all(|j| values[(i, j)].abs() <= 1.0 + SYMMETRY_TOL));
        let is_standardized = has_unit_diagonal(&values) && in_range;
        CorrelationMatrix {
            values,
            is_standardized,
        }
    }

    pub fn identity(p: usize) -> Self {
        CorrelationMatrix {
            values: DMatrix::identity(p, p),
            is_standardized: true,
        }
    }

    /// Number of indicators.
    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn is_standardized(&self) -> bool {
        self.is_standardized
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// True when every Cholesky pivot exceeds [`PIVOT_TOL`].
    pub fn is_positive_definite(&self) -> bool {
        Cholesky::factor(&self.values).is_ok()
    }

    /// Rows as plain vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values
            .row_iter()
            .map(|row| row.iter().copied().collect())
            .collect()
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn has_unit_diagonal(m: &DMatrix<f64>) -> bool {
    m.diagonal().iter().all(|d| (d - 1.0).abs() <= SYMMETRY_TOL)
}

/// Lower-triangular Cholesky factor `L` with `M = L L'`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
    min_pivot: f64,
}

impl Cholesky {
    /// Factors a symmetric matrix, reading only its lower triangle.
    ///
    /// A pivot is the diagonal remainder `m_jj - sum_k l_jk^2` before the
    /// square root; the first pivot at or below [`PIVOT_TOL`] aborts with its
    /// zero-based index.
    pub fn factor(m: &DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::Dimension(format!(
                "cannot factor a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut lower = DMatrix::<f64>::zeros(n, n);
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let mut pivot = m[(j, j)];
            for k in 0..j {
                pivot -= lower[(j, k)] * lower[(j, k)];
            }
            if !(pivot > PIVOT_TOL) {
                return Err(Error::Singular { index: j, value: pivot });
            }
            min_pivot = min_pivot.min(pivot);
            let diag = pivot.sqrt();
            lower[(j, j)] = diag;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)];
                }
                lower[(i, j)] = s / diag;
            }
        }
        Ok(Cholesky { lower, min_pivot })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    /// Smallest pivot seen during factorization.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solves `M X = B` by forward then backward substitution.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.lower.nrows();
        let mut x = rhs.clone();
        for c in 0..x.ncols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lower[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lower[(i, i)];
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in (i + 1)..n {
                    s -= self.lower[(k, i)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lower[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.lower.nrows();
        let inv = self.solve(&DMatrix::identity(n, n));
        symmetrize(inv)
    }
}

/// Inverse of a symmetric positive definite matrix.
pub fn invert_spd(m: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    let inv = Cholesky::factor(m.values())?.inverse();
    Ok(CorrelationMatrix::from_model(inv))
}

pub(crate) fn invert_spd_matrix(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(Cholesky::factor(m)?.inverse())
}

/// Common factor model: loadings, factor correlations and unique variances.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    loadings: DMatrix<f64>,
    factor_correlations: DMatrix<f64>,
    uniquenesses: DVector<f64>,
}

impl FactorModel {
    pub fn new(loadings: DMatrix<f64>, factor_correlations: DMatrix<f64>, uniquenesses: DVector<f64>) -> Result<Self> {
        let (p, q) = loadings.shape();
        if q == 0 || p < q {
            return Err(Error::Dimension(format!(
                "loadings must be p x q with p >= q >= 1, got {p}x{q}"
            )));
        }
        if factor_correlations.shape() != (q, q) {
            return Err(Error::Dimension(format!(
                "factor correlations must be {q}x{q}, got {}x{}",
                factor_correlations.nrows(),
                factor_correlations.ncols()
            )));
        }
        if uniquenesses.len() != p {
            return Err(Error::Dimension(format!(
                "expected {p} uniquenesses, got {}",
                uniquenesses.len()
            )));
        }
        if loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("loadings must be finite".into()));
        }
        for (i, u) in uniquenesses.iter().enumerate() {
            if !(u.is_finite() && *u > 0.0) {
                return Err(Error::Invalid(format!(
                    "uniqueness of indicator {} must be positive, got {u}",
                    i + 1
                )));
            }
        }
        for i in 0..q {
            if (factor_correlations[(i, i)] - 1.0).abs() > SYMMETRY_TOL {
                return Err(Error::Invalid("factor correlations must have a unit diagonal".into()));
            }
            for j in 0..i {
                if (factor_correlations[(i, j)] - factor_correlations[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::Invalid("factor correlations must be symmetric".into()));
                }
            }
        }
        Cholesky::factor(&factor_correlations)?;
        Ok(FactorModel {
            loadings,
            factor_correlations,
            uniquenesses,
        })
    }

    /// Completely standardized model: uniquenesses are `1 - diag(L Phi L')`.
    pub fn standardized(loadings: DMatrix<f64>, factor_correlations: DMatrix<f64>) -> Result<Self> {
        if factor_correlations.nrows() != loadings.ncols() {
            return Err(Error::Dimension(format!(
                "factor correlations must be {0}x{0}",
                loadings.ncols()
            )));
        }
        let common = &loadings * &factor_correlations * loadings.transpose();
        let uniq = DVector::from_iterator(loadings.nrows(), common.diagonal().iter().map(|c| 1.0 - c));
        Self::new(loadings, factor_correlations, uniq)
    }

    /// One standardized factor with the given loadings.
    pub fn one_factor(loadings: &[f64]) -> Result<Self> {
        let lambda = DMatrix::from_column_slice(loadings.len(), 1, loadings);
        Self::standardized(lambda, DMatrix::identity(1, 1))
    }

    pub fn p(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn q(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    pub fn factor_correlations(&self) -> &DMatrix<f64> {
        &self.factor_correlations
    }

    pub fn uniquenesses(&self) -> &DVector<f64> {
        &self.uniquenesses
    }
}

/// Parallel measurements: `p` indicators sharing one inter-correlation `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelSpec {
    r: f64,
    p: usize,
}

impl ParallelSpec {
    pub fn new(r: f64, p: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::Invalid(format!("r must lie in [0, 1], got {r}")));
        }
        if p < 2 {
            return Err(Error::Dimension(format!("parallel model needs p >= 2, got {p}")));
        }
        Ok(ParallelSpec { r, p })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> usize {
        self.p
    }
}

/// `L Phi L' + Psi^2`.
pub fn factor_implied_sigma(model: &FactorModel) -> CorrelationMatrix {
    let lambda = model.loadings();
    let mut sigma = lambda * model.factor_correlations() * lambda.transpose();
    for (i, u) in model.uniquenesses().iter().enumerate() {
        sigma[(i, i)] += u;
    }
    CorrelationMatrix::from_model(sigma)
}

/// `1 r 1' + (1 - r) I`.
pub fn build_parallel_sigma(spec: ParallelSpec) -> CorrelationMatrix {
    let p = spec.p();
    let values = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { spec.r() });
    CorrelationMatrix {
        values,
        is_standardized: true,
    }
}
