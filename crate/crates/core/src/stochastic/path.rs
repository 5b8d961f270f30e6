use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{hash_open01, mix64, RandomStream};
use crate::error::{domain, Result};

/// Uniform time grid `t_k = t_start + k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, dt: f64, n_steps: usize) -> Result<Self> {
        let grid = Self {
            t_start,
            dt,
            n_steps,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid on `[0, horizon]` with step `dt`; the last step is rounded up so the
    /// grid covers the whole horizon.
    pub fn covering(horizon: f64, dt: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("horizon must be positive and finite, got {horizon}"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return domain(format!("dt must be positive and finite, got {dt}"));
        }
        let n = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(0.0, dt, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return domain(format!("dt must be positive and finite, got {}", self.dt));
        }
        if !self.t_start.is_finite() {
            return domain("t_start must be finite");
        }
        Ok(())
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Bridge variates are drawn from independent channels of the path key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BridgeChannel {
    /// Upper crossing of a moving boundary inside a step.
    Crossing = 1,
    /// Minimum of the bridge inside a step (reflection at zero).
    Minimum = 2,
}

/// Discretised driving Brownian motion shared by every coupled diffusion.
///
/// Besides the grid values, a path carries a key from which per-step
/// `Exp(1)` variates are derived on demand. Every consumer of the path sees
/// the same variate for step `k`, which keeps bridge-based hit detection
/// monotone across the whole coupled family.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    bridge_key: u64,
}

impl BrownianPath {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>, bridge_key: u64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.n_steps + 1 {
            return domain(format!(
                "path has {} values, grid needs {}",
                values.len(),
                grid.n_steps + 1
            ));
        }
        if values[0] != 0.0 {
            return domain("Brownian path must start at 0");
        }
        Ok(Self {
            grid,
            values,
            bridge_key,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn bridge_key(&self) -> u64 {
        self.bridge_key
    }

    /// `Exp(1)` variate attached to step `k → k+1`, i.e. `-ln U` with
    /// `U ∈ (0, 1)`; bounded above by [`MAX_BRIDGE_EXP`].
    #[inline]
    pub fn bridge_exp(&self, k: usize, channel: BridgeChannel) -> f64 {
        let h = mix64(self.bridge_key ^ mix64((k as u64) << 2 | channel as u64));
        -hash_open01(h).ln()
    }
}

/// Upper bound on [`BrownianPath::bridge_exp`], which never exceeds `-ln(2^-53)`.
pub const MAX_BRIDGE_EXP: f64 = 36.74;

/// Sample a Brownian path on `grid`; increments are i.i.d. N(0, dt).
pub fn sample_brownian(stream: &mut RandomStream, grid: TimeGrid) -> Result<BrownianPath> {
    let mut values = Vec::new();
    let key = fill_brownian(stream, grid, &mut values)?;
    Ok(BrownianPath {
        grid,
        values,
        bridge_key: key,
    })
}

/// Reuse the allocation of `path` for a fresh sample.
pub fn resample_brownian(
    stream: &mut RandomStream,
    grid: TimeGrid,
    path: &mut BrownianPath,
) -> Result<()> {
    path.bridge_key = fill_brownian(stream, grid, &mut path.values)?;
    path.grid = grid;
    Ok(())
}

fn fill_brownian(stream: &mut RandomStream, grid: TimeGrid, values: &mut Vec<f64>) -> Result<u64> {
    grid.validate()?;
    let sd = grid.dt.sqrt();
    values.clear();
    values.reserve(grid.n_steps + 1);
    values.push(0.0);
    // Neumaier summation keeps the cumulative sum exact to ~1 ulp over 1e7 steps.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for _ in 0..grid.n_steps {
        let z: f64 = stream.sample(StandardNormal);
        let inc = sd * z;
        let t = sum + inc;
        if sum.abs() >= inc.abs() {
            comp += (sum - t) + inc;
        } else {
            comp += (inc - t) + sum;
        }
        sum = t;
        values.push(sum + comp);
    }
    Ok(stream.next_u64())
}

/// Probability that a Brownian bridge of duration `dt` from `x1` to `x2`
/// crosses the straight segment from `c1` to `c2`.
pub fn bridge_upcross_prob(x1: f64, x2: f64, c1: f64, c2: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    if x1 >= c1 || x2 >= c2 {
        return Ok(1.0);
    }
    Ok((-2.0 * (c1 - x1) * (c2 - x2) / dt).exp())
}

/// Exact sample of the minimum of a Brownian bridge from `y1` to `y2` over
/// `dt`, given an `Exp(1)` variate `e`.
#[inline]
pub fn bridge_minimum(y1: f64, y2: f64, dt: f64, e: f64) -> f64 {
    let d = y1 - y2;
    0.5 * (y1 + y2 - (d * d + 2.0 * dt * e).sqrt())
}
