//! Linear-Gaussian node model with a conjugate Normal-Gamma prior.
//!
//! With `x = M beta + u`, `u ~ N(0, I/lambda)`, `beta | lambda ~
//! N(beta0, (lambda n0)^-1)` and `lambda ~ Gamma(alpha, rate = omega)`, the
//! marginal of `x` is a multivariate t with `nu = 2 alpha`, location
//! `M beta0` and precision `(alpha / omega) h(M)`, where
//! `h(M) = I - M (M'M + n0)^-1 M'`.
//!
//! Everything is evaluated from the sufficient moments `x'x`, `M'x` and
//! `M'M`, so the cost depends on the parent count, not on `n`:
//!
//! * `det h(M) = det(n0) / det(M'M + n0)`,
//! * `r' h(M) r = r'r - (M'r)' (M'M + n0)^-1 (M'r)` with `r = x - M beta0`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use super::{Moments, ScoreError};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalGammaParams {
    pub alpha: f64,
    pub omega: f64,
    /// Prior mean of every regression coefficient, intercept included.
    pub beta0: f64,
    /// `n0 = n0_scale * I`.
    pub n0_scale: f64,
}

impl Default for NormalGammaParams {
    fn default() -> Self {
        Self { alpha: 1.0, omega: 1.0, beta0: 0.0, n0_scale: 1.0 }
    }
}

impl NormalGammaParams {
    pub fn validate(&self) -> Result<(), ScoreError> {
        let positive = [("alpha", self.alpha), ("omega", self.omega), ("n0_scale", self.n0_scale)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ScoreError::InvalidModel(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.beta0.is_finite() {
            return Err(ScoreError::InvalidModel("beta0 must be finite".into()));
        }
        Ok(())
    }
}

/// Log prior-predictive density of `x` given its parents' columns.
pub fn node_score_normal_gamma(
    x: &[f64],
    parents: &[&[f64]],
    params: &NormalGammaParams,
) -> Result<f64, ScoreError> {
    params.validate()?;
    let moments = Moments::from_columns(x, parents);
    let width = parents.len() + 1;
    let beta0 = DVector::from_element(width, params.beta0);
    let n0 = DMatrix::from_diagonal_element(width, width, params.n0_scale);
    from_moments(&moments, params.alpha, params.omega, &beta0, &n0)
}

/// General form with an explicit coefficient mean and prior precision
/// matrix, both of size `parents + 1` (intercept first).
pub fn node_score_normal_gamma_full(
    x: &[f64],
    parents: &[&[f64]],
    alpha: f64,
    omega: f64,
    beta0: &DVector<f64>,
    n0: &DMatrix<f64>,
) -> Result<f64, ScoreError> {
    let width = parents.len() + 1;
    if beta0.len() != width || n0.nrows() != width || n0.ncols() != width {
        return Err(ScoreError::InvalidModel(format!(
            "beta0 and n0 must have dimension {width} for {} parents",
            parents.len()
        )));
    }
    let moments = Moments::from_columns(x, parents);
    from_moments(&moments, alpha, omega, beta0, n0)
}

pub(crate) fn from_moments(
    m: &Moments,
    alpha: f64,
    omega: f64,
    beta0: &DVector<f64>,
    n0: &DMatrix<f64>,
) -> Result<f64, ScoreError> {
    let n = m.n as f64;
    let n0_chol = n0
        .clone()
        .cholesky()
        .ok_or_else(|| ScoreError::NumericalFailure("n0 is not positive definite".into()))?;
    let a = &m.mtm + n0;
    let a_chol = a
        .cholesky()
        .ok_or_else(|| ScoreError::NumericalFailure("M'M + n0 is not positive definite".into()))?;

    let mtm_beta0 = &m.mtm * beta0;
    let rtr = m.xtx - 2.0 * beta0.dot(&m.mtx) + beta0.dot(&mtm_beta0);
    let mtr = &m.mtx - mtm_beta0;
    let projected = mtr.dot(&a_chol.solve(&mtr));
    let quad_h = (rtr - projected).max(0.0);

    let nu = 2.0 * alpha;
    let scale = alpha / omega;
    let log_det_precision = n * scale.ln() + n0_chol.ln_determinant() - a_chol.ln_determinant();
    let quad = quad_h * scale;

    let value = ln_gamma((nu + n) / 2.0) - ln_gamma(nu / 2.0) - n / 2.0 * (nu * PI).ln()
        + 0.5 * log_det_precision
        - (nu + n) / 2.0 * (quad / nu).ln_1p();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ScoreError::NumericalFailure(format!("non-finite Normal-Gamma score {value}")))
    }
}
