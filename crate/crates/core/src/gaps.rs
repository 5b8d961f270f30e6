//! The exponential-gap point process `μ̂(k) = Σ_{j≥k} g_j` with independent
//! `g_j ~ Exp(rate j(j+a)/2)`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::stochastic::{hash_open01, mix64, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSpec {
    pub a: f64,
    pub truncation_j: usize,
    /// Add the mean of the omitted gaps `j > J` to every point.
    pub compensate_tail: bool,
}

impl GapSpec {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            truncation_j: 10_000,
            compensate_tail: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > -1.0 && self.a.is_finite()) {
            return domain(format!("parameter a must exceed -1, got {}", self.a));
        }
        if self.truncation_j < 1 {
            return domain("truncation J must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    /// `μ̂(1) ≥ μ̂(2) ≥ … ≥ μ̂(k_max)`.
    pub points: Vec<f64>,
}

/// `Σ_{j>J} 2/(j(j+a))`: exact for integer `a ≥ 1`, otherwise the midpoint
/// integral `∫_{J+1/2}^∞`, accurate to `O(J⁻³)`.
pub fn tail_mean(a: f64, j_max: usize) -> f64 {
    let jf = j_max as f64;
    if a >= 1.0 && a.fract() == 0.0 && a <= 1e6 {
        return (1..=a as usize).map(|i| 2.0 / (a * (jf + i as f64))).sum();
    }
    let x = jf + 0.5;
    if a.abs() < 1e-12 {
        2.0 / x
    } else {
        2.0 / a * (a / x).ln_1p()
    }
}

/// Standard deviation of the omitted random tail, `√(Σ_{j>J} 4/(j(j+a))²)`,
/// summed directly until the terms are negligible.
pub fn tail_sd(a: f64, j_max: usize) -> f64 {
    let mut v = 0.0;
    let mut j = j_max + 1;
    loop {
        let jf = j as f64;
        let t = 4.0 / (jf * (jf + a)).powi(2);
        v += t;
        if t < 1e-22 * v || j > j_max + 10_000_000 {
            // Remainder ≤ ∫_j^∞ 4/x⁴ for a ≥ 0.
            v += 4.0 / (3.0 * jf.powi(3));
            break;
        }
        j += 1;
    }
    v.sqrt()
}

/// `√(4/(3J³))`, which bounds [`tail_sd`] for `a ≥ 0`.
pub fn tail_sd_bound(j_max: usize) -> f64 {
    (4.0 / (3.0 * (j_max as f64).powi(3))).sqrt()
}

/// Draw the first `k_max` points, sampling the gaps from `j = J` down to 1.
///
/// The exponential variate of gap `j` is hashed from one key drawn from the
/// stream and from `j`, so runs with different `J` share their gaps.
pub fn sample_hat_process(spec: GapSpec, k_max: usize, stream: &mut RandomStream) -> Result<GapSample> {
    spec.validate()?;
    if k_max < 1 || k_max > spec.truncation_j {
        return domain(format!("k_max must lie in 1..={}, got {k_max}", spec.truncation_j));
    }
    let mut sum = if spec.compensate_tail { tail_mean(spec.a, spec.truncation_j) } else { 0.0 };
    let mut points = vec![0.0; k_max];
    let key = stream.next_u64();
    for j in (1..=spec.truncation_j).rev() {
        let jf = j as f64;
        let e = -hash_open01(mix64(key ^ mix64(j as u64))).ln();
        sum += 2.0 * e / (jf * (jf + spec.a));
        if j <= k_max {
            points[j - 1] = sum;
        }
    }
    Ok(GapSample { points })
}

/// Mean of `μ̂(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HatMean {
    /// `Σ_{j=k}^{J} 2/(j(j+a))`, or the full series when no truncation is given.
    pub value: f64,
    /// Mean of the omitted terms `j > J`; zero for the full series.
    pub tail: f64,
}

pub fn hat_mu_mean(a: f64, k: usize, j_max: Option<usize>) -> Result<HatMean> {
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    if k < 1 {
        return domain("k must be at least 1");
    }
    let term = |j: usize| {
        let jf = j as f64;
        2.0 / (jf * (jf + a))
    };
    match j_max {
        Some(j) => {
            let value = if j >= k { (k..=j).rev().map(term).sum() } else { 0.0 };
            Ok(HatMean { value, tail: tail_mean(a, j.max(k - 1)) })
        }
        None => {
            let value = if a >= 1.0 && a.fract() == 0.0 && a <= 1e6 {
                // 2/(j(j+a)) = (2/a)(1/j − 1/(j+a)) telescopes.
                (0..a as usize).map(|i| 2.0 / (a * (k + i) as f64)).sum()
            } else if a == 0.0 {
                std::f64::consts::PI.powi(2) / 3.0 - (1..k).map(term).sum::<f64>()
            } else {
                let j = k + 100_000;
                (k..=j).rev().map(term).sum::<f64>() + tail_mean(a, j)
            };
            Ok(HatMean { value, tail: 0.0 })
        }
    }
}
