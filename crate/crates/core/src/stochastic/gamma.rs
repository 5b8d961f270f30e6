//! Gamma and chi variates valid for arbitrarily small shapes.
//!
//! Small β pushes the chi parameters of the bidiagonal model towards zero, so
//! the Gamma shape can be far below one. The sampler works in log-space:
//! Marsaglia–Tsang squeeze/rejection for shape ≥ 1, and the boost
//! `G(α) = G(α + 1) · U^{1/α}` below one, carried as `ln G(α + 1) + ln U / α`
//! so that tiny shapes never underflow to an exact zero before the final
//! transform.

use rand::Rng;
use rand_distr::{Open01, StandardNormal};

use crate::error::{domain, Result};

/// Natural log of a Gamma(shape, scale = 1) variate.
pub fn sample_ln_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return domain(format!("gamma shape must be positive and finite, got {shape}"));
    }
    Ok(ln_gamma_unchecked(rng, shape))
}

fn ln_gamma_unchecked<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.sample(Open01);
        return ln_gamma_unchecked(rng, shape + 1.0) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v3 = v * v * v;
        let u: f64 = rng.sample(Open01);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return (d * v3).ln();
        }
        let ln_v3 = 3.0 * v.ln();
        if u.ln() < 0.5 * x2 + d * (1.0 - v3 + ln_v3) {
            return d.ln() + ln_v3;
        }
    }
}

/// Gamma(shape, scale) variate.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return domain(format!("gamma scale must be positive, got {scale}"));
    }
    Ok(scale * sample_ln_gamma(rng, shape)?.exp())
}

/// One χ_r variate: the square root of a Gamma(r/2, scale 2) variate.
pub fn sample_chi<R: Rng + ?Sized>(rng: &mut R, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return domain(format!("chi parameter must be positive and finite, got {r}"));
    }
    let ln_g = ln_gamma_unchecked(rng, 0.5 * r);
    Ok((0.5 * (std::f64::consts::LN_2 + ln_g)).exp())
}
