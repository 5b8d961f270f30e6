use std::f64::consts::PI;

use super::{alternating, ln_binomial, SeriesAccuracy, SeriesValue};
use crate::error::{domain, Result};

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("{name} must be positive and finite, got {x}"));
    }
    Ok(())
}

fn check_a(a: f64) -> Result<()> {
    if !(a >= 0.0 && a.is_finite()) {
        return domain(format!("parameter a must be non-negative, got {a}"));
    }
    Ok(())
}

/// `P[μ(1) ≥ μ]` at `a = 0`: `2 Σ (−1)^{k−1} e^{−μk²/2}`.
pub fn tail_prob_a0(mu: f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    check_positive("mu", mu)?;
    let ln2 = std::f64::consts::LN_2;
    let s = alternating(|k| ln2 - mu * (k * k) as f64 / 2.0, acc)?;
    Ok(s.clamp_probability())
}

/// Density of the largest point for `a ≥ 0`:
/// `Σ (−1)^{j−1} (j(2j+a)/2) C(j+a, j) e^{−j(j+a)x/2}`.
pub fn largest_density(a: f64, x: f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    check_a(a)?;
    check_positive("x", x)?;
    alternating(
        |j| {
            let jf = j as f64;
            (jf * (2.0 * jf + a) / 2.0).ln() + ln_binomial(jf + a, j).0 - jf * (jf + a) * x / 2.0
        },
        acc,
    )
}

/// Tail of the largest point for `a ≥ 0`, the termwise integral of
/// [`largest_density`]: `Σ (−1)^{j−1} ((2j+a)/(j+a)) C(j+a, j) e^{−j(j+a)μ/2}`.
pub fn largest_tail(a: f64, mu: f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    check_a(a)?;
    check_positive("mu", mu)?;
    let s = alternating(
        |j| {
            let jf = j as f64;
            ((2.0 * jf + a) / (jf + a)).ln() + ln_binomial(jf + a, j).0 - jf * (jf + a) * mu / 2.0
        },
        acc,
    )?;
    Ok(s.clamp_probability())
}

/// Conjectured probability that a reflected Brownian motion with drift `−a`
/// started at 0 ever reaches the line `μ + b t`:
/// `Σ (−1)^{j−1} [C(j+a/b, j) + C(j+a/b−1, j−1)] e^{−2μj(jb+a)}`.
///
/// The result is flagged as a conjecture.
pub fn conjectured_hit_prob(a: f64, b: f64, mu: f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    check_a(a)?;
    check_positive("b", b)?;
    check_positive("mu", mu)?;
    let r = a / b;
    let s = alternating(
        |j| {
            let jf = j as f64;
            let (l1, _) = ln_binomial(jf + r, j);
            let (l2, _) = ln_binomial(jf + r - 1.0, j - 1);
            let m = l1.max(l2);
            m + ((l1 - m).exp() + (l2 - m).exp()).ln() - 2.0 * mu * jf * (jf * b + a)
        },
        acc,
    )?;
    let mut s = s.clamp_probability();
    s.conjecture = true;
    Ok(s)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return domain(format!("theta must be non-negative and finite, got {theta}"));
    }
    Ok(())
}

/// `∏_{j≤J} 1/(1 + 2θ/(j(j+a)))` without any tail correction.
pub fn laplace_hat_mu1_truncated(a: f64, theta: f64, j_max: usize) -> Result<f64> {
    check_a(a)?;
    check_theta(theta)?;
    let ln: f64 = (1..=j_max)
        .map(|j| {
            let jf = j as f64;
            (2.0 * theta / (jf * (jf + a))).ln_1p()
        })
        .sum();
    Ok((-ln).exp())
}

/// Laplace transform `E[e^{−θ μ̂(1)}] = ∏_{j≥1} 1/(1 + 2θ/(j(j+a)))`.
///
/// The product is truncated at `J ≈ (θ / abs_tol)^{1/3}` and the remaining
/// factors are replaced by `exp(−2θ S₁ + 2θ² S₂)` with `S₁ = Σ_{j>J} 1/(j(j+a))`,
/// `S₂ = Σ_{j>J} 1/(j(j+a))²` from midpoint integrals.
pub fn laplace_hat_mu1(a: f64, theta: f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    check_a(a)?;
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(SeriesValue { value: 1.0, error_bound: 0.0, terms: 0, conjecture: false });
    }
    let j = ((theta.max(1.0) / acc.abs_tol).cbrt().ceil() as usize).clamp(16, acc.max_terms.max(16));
    let head = laplace_hat_mu1_truncated(a, theta, j)?;
    let x = j as f64 + 0.5;
    let s1 = if a > 0.0 { ((x + a) / x).ln() / a } else { 1.0 / x };
    let s2 = 1.0 / (3.0 * x * x * x);
    let value = head * (-2.0 * theta * s1 + 2.0 * theta * theta * s2).exp();
    // Midpoint error of S₁ and the cubic term of the logarithm, both O(J⁻³).
    let jf = j as f64;
    let error_bound = value * (2.0 * theta / (6.0 * jf.powi(3)) + 8.0 * theta.powi(3) / (15.0 * jf.powi(5)) + theta * theta / jf.powi(4));
    Ok(SeriesValue { value, error_bound, terms: j, conjecture: false })
}

/// `π√(2θ) / sinh(π√(2θ))`, the `a = 0` Laplace transform in closed form.
pub fn laplace_closed_a0(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    let z = PI * (2.0 * theta).sqrt();
    if z < 1e-8 {
        return Ok(1.0 - z * z / 6.0);
    }
    Ok(z / z.sinh())
}
