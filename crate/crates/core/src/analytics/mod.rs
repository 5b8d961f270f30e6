//! Closed-form expressions: hitting-probability and largest-point series,
//! Laplace transforms, the conjectured crossing formula, large-deviation rate
//! functions and the cost recursion.

mod costs;
mod quadrature;
mod series;

pub use costs::{closed_cost, cost_sequence, exceedance_exponent, rate_function, CostParity, RateParams};
pub use quadrature::integrate_adaptive;
pub use series::{
    conjectured_hit_prob, laplace_closed_a0, laplace_hat_mu1, laplace_hat_mu1_truncated, largest_density,
    largest_tail, tail_prob_a0,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation policy for infinite series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesAccuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 100_000,
        }
    }
}

/// A truncated series together with a bound on the truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_bound: f64,
    pub terms: usize,
    /// Set for expressions that are conjectured rather than proved.
    pub conjecture: bool,
}

impl SeriesValue {
    fn clamp_probability(mut self) -> Self {
        self.value = self.value.clamp(0.0, 1.0);
        self
    }
}

/// `Σ_{j≥1} (−1)^{j−1} m_j` for magnitudes given in log space.
///
/// Summation stops at the first `j` with `m_j < abs_tol` and `m_{j+1} ≤ m_j`;
/// from there the magnitudes of the series used here decrease, so `m_j` bounds
/// the remainder.
fn alternating(ln_magnitude: impl Fn(usize) -> f64, acc: SeriesAccuracy) -> Result<SeriesValue> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut m = ln_magnitude(1).exp();
    for j in 1..=acc.max_terms {
        let next = ln_magnitude(j + 1).exp();
        if m < acc.abs_tol && next <= m {
            return Ok(SeriesValue {
                value: sum + comp,
                error_bound: m,
                terms: j - 1,
                conjecture: false,
            });
        }
        let term = if j % 2 == 1 { m } else { -m };
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        m = next;
    }
    Err(Error::NoConvergence {
        terms: acc.max_terms,
        last_term: m,
    })
}

/// `ln |C(x, j)|` and the sign of the generalised binomial coefficient
/// `C(x, j) = x (x−1) ⋯ (x−j+1) / j!`.
pub fn ln_binomial(x: f64, j: usize) -> (f64, f64) {
    let jf = j as f64;
    if x - jf + 1.0 > 0.0 {
        let v = libm::lgamma(x + 1.0) - libm::lgamma(jf + 1.0) - libm::lgamma(x - jf + 1.0);
        return (v, 1.0);
    }
    let mut ln = 0.0;
    let mut sign = 1.0;
    for i in 0..j {
        let f = (x - i as f64) / (i as f64 + 1.0);
        if f == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        if f < 0.0 {
            sign = -sign;
        }
        ln += f.abs().ln();
    }
    (ln, sign)
}

/// Generalised binomial coefficient.
pub fn binomial(x: f64, j: usize) -> f64 {
    let (ln, sign) = ln_binomial(x, j);
    sign * ln.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product_binomial(x: f64, j: usize) -> f64 {
        (0..j).map(|i| (x - i as f64) / (i as f64 + 1.0)).product()
    }

    #[test]
    fn binomial_matches_product_formula() {
        for &x in &[0.0, 0.5, 1.0, 2.5, 7.0, 12.25, -0.5, -2.0, 3.0] {
            for j in 0..15 {
                let want = product_binomial(x, j);
                let got = binomial(x, j);
                assert!((got - want).abs() <= 1e-11 * want.abs().max(1.0), "C({x},{j}) {got} vs {want}");
            }
        }
        assert!((binomial(4.0, 2) - 6.0).abs() < 1e-12);
        assert_eq!(binomial(2.0, 5), 0.0);
    }

    #[test]
    fn alternating_remainder_bounds_refinement() {
        let coarse = SeriesAccuracy { abs_tol: 1e-4, max_terms: 1000 };
        let fine = SeriesAccuracy { abs_tol: 1e-15, max_terms: 2000 };
        let ln_m = |j: usize| -(j as f64) * 0.3;
        let c = alternating(ln_m, coarse).unwrap();
        let f = alternating(ln_m, fine).unwrap();
        assert!((c.value - f.value).abs() <= c.error_bound);
        // Closed form: r/(1+r) with r = e^{−0.3}.
        let r = (-0.3f64).exp();
        assert!((f.value - r / (1.0 + r)).abs() < 1e-14);
    }

    #[test]
    fn alternating_reports_non_convergence() {
        let acc = SeriesAccuracy { abs_tol: 1e-12, max_terms: 10 };
        assert!(matches!(alternating(|_| 0.0, acc), Err(Error::NoConvergence { terms: 10, .. })));
    }
}
