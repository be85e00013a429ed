//! Linear-Gaussian node model with Zellner's g-prior on the coefficients.
//!
//! The log score is `-(k+1)/2 log(1+g) - n/2 log s` with
//! `s = x'x - g/(1+g) x'M (M'M)^-1 M'x`. The omitted normalising constant
//! depends on `n` only and cancels in every same-node ratio.

use super::{Moments, ScoreError};

/// Relative pivot below which `M'M` is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-10;

/// Log marginal (up to an `n`-only constant) of `x` given its parents.
pub fn node_score_zellner(x: &[f64], parents: &[&[f64]], g: f64) -> Result<f64, ScoreError> {
    validate_g(g)?;
    from_moments(&Moments::from_columns(x, parents), g)
}

pub(crate) fn validate_g(g: f64) -> Result<(), ScoreError> {
    if g > 0.0 && g.is_finite() {
        Ok(())
    } else {
        Err(ScoreError::InvalidModel(format!("g must be positive, got {g}")))
    }
}

pub(crate) fn from_moments(m: &Moments, g: f64) -> Result<f64, ScoreError> {
    let width = m.mtx.len();
    if width > m.n {
        return Err(ScoreError::TooManyParents { parents: width - 1, n_obs: m.n });
    }
    let chol = m.mtm.clone().cholesky().ok_or(ScoreError::SingularDesign)?;
    let l = chol.l_dirty();
    for i in 0..width {
        if l[(i, i)] * l[(i, i)] <= SINGULAR_PIVOT * m.mtm[(i, i)] {
            return Err(ScoreError::SingularDesign);
        }
    }
    let fitted = m.mtx.dot(&chol.solve(&m.mtx));
    let s = m.xtx - g / (1.0 + g) * fitted;
    if s.is_nan() || s <= 0.0 || m.xtx == 0.0 {
        return Err(ScoreError::DegenerateData);
    }
    Ok(-(width as f64) / 2.0 * g.ln_1p() - m.n as f64 / 2.0 * s.ln())
}
