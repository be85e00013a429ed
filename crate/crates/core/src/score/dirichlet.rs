//! Multinomial node model with a symmetric Dirichlet prior per parent
//! configuration (Cooper-Herskovits marginal).
//!
//! For each parent configuration `q` with child counts `D_qv`:
//! `lnG(A_q) - lnG(A_q + D_q) + sum_v [lnG(a + D_qv) - lnG(a)]`,
//! with `a` the pseudo-count and `A_q = m a`. Configurations that never
//! occur contribute zero, so only observed cells are visited.

use statrs::function::gamma::ln_gamma;

use super::ScoreError;

pub(crate) fn validate_pseudo_count(a: f64) -> Result<(), ScoreError> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(ScoreError::InvalidModel(format!("pseudo_count must be positive, got {a}")))
    }
}

/// Log marginal likelihood of the child column given parent columns.
///
/// Parent configurations are encoded mixed-radix with the first parent as
/// the most significant digit.
pub fn node_score_dirichlet(
    x: &[u32],
    child_arity: u32,
    parents: &[&[u32]],
    parent_arities: &[u32],
    pseudo_count: f64,
) -> Result<f64, ScoreError> {
    validate_pseudo_count(pseudo_count)?;
    if parents.len() != parent_arities.len() {
        return Err(ScoreError::InvalidModel(format!(
            "{} parent columns but {} parent arities",
            parents.len(),
            parent_arities.len()
        )));
    }
    let mut keys = Vec::with_capacity(x.len());
    cell_keys(x, child_arity, parents, parent_arities, &mut keys)?;
    Ok(score_sorted_keys(&mut keys, child_arity, pseudo_count))
}

/// Fills `keys` with `config * child_arity + value` per observation.
pub(crate) fn cell_keys(
    x: &[u32],
    child_arity: u32,
    parents: &[&[u32]],
    parent_arities: &[u32],
    keys: &mut Vec<u128>,
) -> Result<(), ScoreError> {
    // Reject configuration spaces whose cell index would overflow.
    let mut space: u128 = u128::from(child_arity);
    for &r in parent_arities {
        space = space.checked_mul(u128::from(r)).ok_or(ScoreError::TooManyConfigurations)?;
    }
    keys.clear();
    keys.extend((0..x.len()).map(|row| {
        let config = parents
            .iter()
            .zip(parent_arities)
            .fold(0u128, |acc, (col, &r)| acc * u128::from(r) + u128::from(col[row]));
        config * u128::from(child_arity) + u128::from(x[row])
    }));
    Ok(())
}

pub(crate) fn score_sorted_keys(keys: &mut [u128], child_arity: u32, a: f64) -> f64 {
    keys.sort_unstable();
    let m = u128::from(child_arity);
    let total_prior = f64::from(child_arity) * a;
    let ln_gamma_a = ln_gamma(a);
    let ln_gamma_total = ln_gamma(total_prior);

    let mut score = 0.0;
    let mut i = 0;
    while i < keys.len() {
        let config = keys[i] / m;
        let mut config_count = 0u64;
        while i < keys.len() && keys[i] / m == config {
            let cell = keys[i];
            let mut count = 0u64;
            while i < keys.len() && keys[i] == cell {
                count += 1;
                i += 1;
            }
            score += ln_gamma(a + count as f64) - ln_gamma_a;
            config_count += count;
        }
        score += ln_gamma_total - ln_gamma(total_prior + config_count as f64);
    }
    score
}
