//! Independent reference computations shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use statrs::function::gamma::ln_gamma;

/// Composite Simpson rule with `panels` (even) intervals.
pub fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    assert!(panels.is_multiple_of(2));
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn log_normal_pdf(x: f64, mean: f64, precision: f64) -> f64 {
    0.5 * (precision / (2.0 * PI)).ln() - 0.5 * precision * (x - mean) * (x - mean)
}

/// `log ∫∫ N(x | Mβ, λ⁻¹I) N(β | β0·1, (λ n0_scale)⁻¹ I) Gamma(λ | α, rate ω) dβ dλ`
/// by nested quadrature. `design` rows are `[1, parent values...]`; at most
/// two coefficients.
pub fn normal_gamma_marginal_by_quadrature(
    x: &[f64],
    design: &[Vec<f64>],
    alpha: f64,
    omega: f64,
    beta0: f64,
    n0_scale: f64,
) -> f64 {
    let k1 = design[0].len();
    assert!(k1 == 1 || k1 == 2);
    let log_lik = |beta: &[f64], lambda: f64| -> f64 {
        x.iter()
            .zip(design)
            .map(|(&xi, row)| {
                let mean: f64 = row.iter().zip(beta).map(|(m, b)| m * b).sum();
                log_normal_pdf(xi, mean, lambda)
            })
            .sum()
    };
    // Integration window for β given λ: wide enough for both the prior and
    // the data to sit well inside it.
    let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max) + beta0.abs() + 1.0;
    let inner = |lambda: f64| -> f64 {
        let sd = 1.0 / (lambda * n0_scale).sqrt();
        let (lo, hi) = (beta0 - spread - 12.0 * sd, beta0 + spread + 12.0 * sd);
        let prior = |b: f64| log_normal_pdf(b, beta0, lambda * n0_scale);
        if k1 == 1 {
            simpson(lo, hi, 2000, |b| (log_lik(&[b], lambda) + prior(b)).exp())
        } else {
            simpson(lo, hi, 400, |b0| {
                simpson(lo, hi, 400, |b1| (log_lik(&[b0, b1], lambda) + prior(b0) + prior(b1)).exp())
            })
        }
    };
    let log_gamma_pdf =
        |l: f64| alpha * omega.ln() - ln_gamma(alpha) + (alpha - 1.0) * l.ln() - omega * l;
    // λ = e^t.
    let outer = simpson(-25.0, 8.0, if k1 == 1 { 1200 } else { 300 }, |t| {
        let l = t.exp();
        inner(l) * (log_gamma_pdf(l) + t).exp()
    });
    outer.ln()
}

/// Sequential Pólya-urn predictive: the product over observations of
/// `(a + n_qv) / (m a + n_q)` with counts taken from earlier rows only.
pub fn polya_urn_log_marginal(x: &[u32], child_arity: u32, configs: &[usize], a: f64) -> f64 {
    use std::collections::HashMap;
    let mut cell: HashMap<(usize, u32), f64> = HashMap::new();
    let mut total: HashMap<usize, f64> = HashMap::new();
    let mut log_p = 0.0;
    for (&v, &q) in x.iter().zip(configs) {
        let c = cell.entry((q, v)).or_insert(0.0);
        let t = total.entry(q).or_insert(0.0);
        log_p += ((a + *c) / (f64::from(child_arity) * a + *t)).ln();
        *c += 1.0;
        *t += 1.0;
    }
    log_p
}

/// `log ∫∫ N(x | Mβ, σ²I) N(β | 0, gσ²(MᵀM)⁻¹) σ⁻² dβ dσ²` for a single
/// intercept column (`M = 1`), minus `log Γ(n/2) - (n/2) log π`, the constant
/// that depends on `n` alone.
pub fn zellner_intercept_only_by_quadrature(x: &[f64], g: f64) -> f64 {
    let n = x.len() as f64;
    let spread = x.iter().map(|v| v.abs()).fold(0.0, f64::max) + 1.0;
    // σ² = e^t; prior sd of β is sqrt(g σ² / n).
    let value = simpson(-30.0, 30.0, 3000, |t| {
        let s2 = t.exp();
        let sd = (g * s2 / n).sqrt();
        let half = spread + 12.0 * sd;
        // σ⁻² dσ² = dt, so the improper prior contributes no extra factor.
        simpson(-half, half, 2000, |b| {
            let lik: f64 = x.iter().map(|&xi| log_normal_pdf(xi, b, 1.0 / s2)).sum();
            (lik + log_normal_pdf(b, 0.0, 1.0 / (sd * sd))).exp()
        })
    });
    value.ln() - (ln_gamma(n / 2.0) - n / 2.0 * PI.ln())
}

/// Total-variation distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn random_categorical(rng: &mut impl Rng, n: usize, arity: u32) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..arity)).collect()
}
