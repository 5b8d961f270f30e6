use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Drift and optimal hitting time of one phase in the large-deviation
/// analysis: `a₁ = −a/4`, `a₂ = (a+1)/4`, `t* = 1/|a_i − 1/4|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub a: f64,
    pub phase_index: u8,
    pub a_i: f64,
    /// Infinite when `a_i = 1/4`.
    pub t_star: f64,
}

impl RateParams {
    pub fn new(a: f64, phase_index: u8) -> Result<Self> {
        if !(a > -1.0 && a.is_finite()) {
            return domain(format!("parameter a must exceed -1, got {a}"));
        }
        let a_i = match phase_index {
            1 => -a / 4.0,
            2 => (a + 1.0) / 4.0,
            _ => return domain(format!("phase index must be 1 or 2, got {phase_index}")),
        };
        Ok(Self {
            a,
            phase_index,
            a_i,
            t_star: 1.0 / (a_i - 0.25).abs(),
        })
    }
}

/// `I_i(t) = (1 + (1/4 − a_i) t)² / (2t)`.
pub fn rate_function(params: RateParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain(format!("rate function needs t > 0, got {t}"));
    }
    let u = 1.0 + (0.25 - params.a_i) * t;
    Ok(u * u / (2.0 * t))
}

/// Which phase the last of the `n` hits belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostParity {
    /// `a_n = −a/4` for odd `n` and `(a+1)/4` for even `n`.
    MinusTerminal,
    /// `a_n = (a+1)/4` for odd `n` and `−a/4` for even `n`.
    PlusTerminal,
}

fn phase_drift(a: f64, n: usize, parity: CostParity) -> f64 {
    let odd = n % 2 == 1;
    let minus = match parity {
        CostParity::MinusTerminal => odd,
        CostParity::PlusTerminal => !odd,
    };
    if minus {
        -a / 4.0
    } else {
        (a + 1.0) / 4.0
    }
}

/// `C_0 = 0`, `C_n = (1/4 − a_n) + C_{n−1} + √((1/4 − a_n)² + C_{n−1}/2)`.
pub fn cost_sequence(a: f64, n_max: usize, parity: CostParity) -> Result<Vec<f64>> {
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    if n_max < 1 {
        return domain("n_max must be at least 1");
    }
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(0.0);
    for n in 1..=n_max {
        let d = 0.25 - phase_drift(a, n, parity);
        let prev = c[n - 1];
        c.push(d + prev + (d * d + prev / 2.0).sqrt());
    }
    Ok(c)
}

/// Closed form of the `n`-th cost.
///
/// Minus terminal: `C_{2k−1} = k(a+k)/2`, `C_{2k} = k(a+k+1)/2`.
/// Plus terminal: `C_{2k} = k(k+|a|)/2`; `C_{2k−1} = k(k−1+|a|)/2` for
/// `a < 0` and `(k−1)(k+a)/2` for `a ≥ 0`, where the first plus phase is free.
pub fn closed_cost(a: f64, n: usize, parity: CostParity) -> Result<f64> {
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    if n < 1 {
        return domain("cost index must be at least 1");
    }
    let k = n.div_ceil(2) as f64;
    let even = n % 2 == 0;
    Ok(match (parity, even) {
        (CostParity::MinusTerminal, false) => k * (a + k) / 2.0,
        (CostParity::MinusTerminal, true) => k * (a + k + 1.0) / 2.0,
        (CostParity::PlusTerminal, true) => k * (k + a.abs()) / 2.0,
        (CostParity::PlusTerminal, false) if a < 0.0 => k * (k - 1.0 + a.abs()) / 2.0,
        (CostParity::PlusTerminal, false) => (k - 1.0) * (k + a) / 2.0,
    })
}

/// Exponent of `P[M_a[μ,∞) ≥ k]` as `μ → ∞`: `k(|a|+k)/2`.
pub fn exceedance_exponent(a: f64, k: usize) -> Result<f64> {
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    if k < 1 {
        return domain("k must be at least 1");
    }
    let k = k as f64;
    Ok(k * (a.abs() + k) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_params_definitions() {
        for &a in &[-0.5, 0.0, 1.0, 2.5] {
            let p1 = RateParams::new(a, 1).unwrap();
            let p2 = RateParams::new(a, 2).unwrap();
            assert!((p1.a_i + p2.a_i - 0.25).abs() < 1e-15);
            assert_eq!(p1.t_star, 1.0 / (p1.a_i - 0.25).abs());
        }
        assert!(RateParams::new(0.0, 3).is_err());
        assert!(RateParams::new(-1.0, 1).is_err());
        assert_eq!(RateParams::new(0.0, 2).unwrap().t_star, f64::INFINITY);
    }

    #[test]
    fn rate_minimum_at_t_star() {
        for &a in &[-0.5, 0.0, 1.0, 3.0] {
            let p = RateParams::new(a, 1).unwrap();
            let i = rate_function(p, p.t_star).unwrap();
            assert!((i - 2.0 * (0.25 - p.a_i)).abs() < 1e-14);
            assert!((i - (1.0 + a) / 2.0).abs() < 1e-14);
            for &s in &[0.5, 0.9, 1.1, 2.0] {
                assert!(rate_function(p, s * p.t_star).unwrap() > i);
            }
        }
        let p = RateParams::new(2.0, 2).unwrap();
        assert!(rate_function(p, 2.0).unwrap().abs() < 1e-15);
        assert!(rate_function(p, 0.0).is_err());
    }

    #[test]
    fn rate_is_convex() {
        for &a in &[-0.7, 0.0, 1.5] {
            for idx in [1, 2] {
                let p = RateParams::new(a, idx).unwrap();
                let h = 0.01;
                for i in 1..1000 {
                    let t = 0.05 + i as f64 * h;
                    let d2 = rate_function(p, t + h).unwrap() - 2.0 * rate_function(p, t).unwrap()
                        + rate_function(p, t - h).unwrap();
                    assert!(d2 > 0.0);
                }
            }
        }
    }

    #[test]
    fn cost_examples() {
        let c = cost_sequence(1.0, 3, CostParity::MinusTerminal).unwrap();
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!((c[3] - 3.0).abs() < 1e-12);
        let c = cost_sequence(0.0, 3, CostParity::MinusTerminal).unwrap();
        assert!((c[3] - 2.0).abs() < 1e-12);
        let c = cost_sequence(-0.5, 2, CostParity::PlusTerminal).unwrap();
        assert!((c[2] - 0.75).abs() < 1e-12);
        assert!(cost_sequence(0.0, 0, CostParity::MinusTerminal).is_err());
        assert_eq!(exceedance_exponent(0.0, 1).unwrap(), 0.5);
        assert_eq!(exceedance_exponent(-0.5, 2).unwrap(), 2.5);
    }

    #[test]
    fn recursion_matches_closed_forms() {
        for &a in &[-0.9, -0.5, -0.1, 0.0, 0.3, 1.0, 2.5] {
            for parity in [CostParity::MinusTerminal, CostParity::PlusTerminal] {
                let c = cost_sequence(a, 40, parity).unwrap();
                for (n, &cn) in c.iter().enumerate().skip(1) {
                    let closed = closed_cost(a, n, parity).unwrap();
                    assert!((cn - closed).abs() < 1e-10, "a {a} {parity:?} n {n}: {cn} vs {closed}");
                }
            }
        }
    }

    #[test]
    fn exponent_matches_cost_regimes() {
        for k in 1..10 {
            for &a in &[0.0, 1.0, 2.5] {
                let c = closed_cost(a, 2 * k - 1, CostParity::MinusTerminal).unwrap();
                assert_eq!(c, exceedance_exponent(a, k).unwrap());
            }
            for &a in &[-0.9, -0.5] {
                let c = closed_cost(a, 2 * k, CostParity::PlusTerminal).unwrap();
                assert_eq!(c, exceedance_exponent(a, k).unwrap());
            }
        }
    }
}
