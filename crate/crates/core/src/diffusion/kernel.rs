//! Phase-level simulation of a reflected Brownian motion with drift against
//! an affine boundary, read off a shared driving path.
//!
//! Within a phase started at grid index `s`, the unreflected path is
//! `Y(k) = W(k) − W(s) + δ (k − s) dt` and the reflected value is
//! `R(k) = Y(k) − min(0, inf Y)`, where the infimum runs over the grid values
//! and, when enabled, over exactly sampled bridge minima between grid points.
//! A hit is declared at the first `k` with `R(k) ≥ c(k)`, or when the bridge
//! crossing variate of the step fires.

use crate::stochastic::{bridge_minimum, BridgeChannel, BrownianPath, MAX_BRIDGE_EXP};

/// Hit-detection refinements on top of the plain grid scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimOpts {
    /// Thin each step with the Brownian-bridge crossing probability.
    pub bridge_crossing: bool,
    /// Sample the bridge minimum of each step when it can reach the running
    /// minimum, so the reflection term is exact at grid points.
    pub bridge_reflection: bool,
}

impl Default for SimOpts {
    fn default() -> Self {
        Self {
            bridge_crossing: true,
            bridge_reflection: true,
        }
    }
}

impl SimOpts {
    /// Plain Euler endpoint tests with discrete `max(0, ·)` reflection.
    pub fn plain() -> Self {
        Self {
            bridge_crossing: false,
            bridge_reflection: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum PhaseEnd {
    /// Boundary reached during step `k − 1 → k`.
    Hit(usize),
    /// Survived to the last grid point.
    Censored { gap: f64 },
}

/// Boundary `level + slope · t`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Boundary {
    pub level: f64,
    pub slope: f64,
}

/// Run one phase with drift `delta` starting from 0 at grid index `start`.
#[inline]
pub(crate) fn run_phase(
    path: &BrownianPath,
    start: usize,
    delta: f64,
    boundary: Boundary,
    opts: SimOpts,
) -> PhaseEnd {
    let w = &path.values;
    let n = path.grid.n_steps;
    let dt = path.grid.dt;
    let two_over_dt = 2.0 / dt;
    let c0 = boundary.level + boundary.slope * path.grid.time(start);
    let dc = boundary.slope * dt;
    let w0 = w[start];

    let mut min = 0.0f64;
    let mut y_prev = 0.0f64;
    let mut gap_prev = c0;
    for k in start + 1..=n {
        let steps = (k - start) as f64;
        let y = (w[k] - w0) + delta * (steps * dt);
        if opts.bridge_reflection {
            if y < min {
                let e = path.bridge_exp(k - 1, BridgeChannel::Minimum);
                min = bridge_minimum(y_prev, y, dt, e);
            } else {
                let q = (y_prev - min) * (y - min) * two_over_dt;
                if q < MAX_BRIDGE_EXP {
                    let e = path.bridge_exp(k - 1, BridgeChannel::Minimum);
                    if q < e {
                        min = bridge_minimum(y_prev, y, dt, e);
                    }
                }
            }
        } else if y < min {
            min = y;
        }
        let r = y - min;
        let gap = c0 + steps * dc - r;
        if gap <= 0.0 {
            return PhaseEnd::Hit(k);
        }
        if opts.bridge_crossing {
            let q = gap_prev * gap * two_over_dt;
            if q < MAX_BRIDGE_EXP && q < path.bridge_exp(k - 1, BridgeChannel::Crossing) {
                return PhaseEnd::Hit(k);
            }
        }
        y_prev = y;
        gap_prev = gap;
    }
    PhaseEnd::Censored { gap: gap_prev }
}

/// Largest boundary level for which a phase with drift `delta`, started from
/// 0 at grid index `start`, registers a hit somewhere on the path.
///
/// Endpoint hits at step `k` occur for levels up to `r(k) − slope·t(k)`;
/// bridge hits for levels up to the larger root of
/// `2 (level + A₀)(level + A₁) / dt = E`.
pub(crate) fn hit_level_supremum(
    path: &BrownianPath,
    start: usize,
    delta: f64,
    slope: f64,
    opts: SimOpts,
) -> f64 {
    let w = &path.values;
    let n = path.grid.n_steps;
    let dt = path.grid.dt;
    let two_over_dt = 2.0 / dt;
    let w0 = w[start];
    let reach = (MAX_BRIDGE_EXP * dt * 0.5).sqrt();

    let mut best = f64::NEG_INFINITY;
    let mut min = 0.0f64;
    let mut y_prev = 0.0f64;
    // A = slope·t − r, so the gap to a boundary at `level` is `level + A`.
    let mut a_prev = slope * path.grid.time(start);
    for k in start + 1..=n {
        let steps = (k - start) as f64;
        let y = (w[k] - w0) + delta * (steps * dt);
        if opts.bridge_reflection {
            if y < min {
                let e = path.bridge_exp(k - 1, BridgeChannel::Minimum);
                min = bridge_minimum(y_prev, y, dt, e);
            } else {
                let q = (y_prev - min) * (y - min) * two_over_dt;
                if q < MAX_BRIDGE_EXP {
                    let e = path.bridge_exp(k - 1, BridgeChannel::Minimum);
                    if q < e {
                        min = bridge_minimum(y_prev, y, dt, e);
                    }
                }
            }
        } else if y < min {
            min = y;
        }
        let a = slope * path.grid.time(k) - (y - min);
        let endpoint = -a;
        if endpoint > best {
            best = endpoint;
        }
        if opts.bridge_crossing && -a_prev.min(a) + reach > best {
            let e = path.bridge_exp(k - 1, BridgeChannel::Crossing);
            let d = a_prev - a;
            let root = 0.5 * (-(a_prev + a) + (d * d + 2.0 * e * dt).sqrt());
            if root > best {
                best = root;
            }
        }
        y_prev = y;
        a_prev = a;
    }
    best
}

/// Bound on the probability that a phase censored at the horizon would still
/// reach the boundary later, for drift `delta < slope`.
///
/// Union of (i) the current excursion climbing the remaining gap, bounded by
/// `exp(−κ·gap)` with `κ = 2(slope − δ)`, and (ii) a fresh excursion from 0
/// reaching the boundary level, bounded after the drift change
/// `δ → 2·slope − δ` by `((2·slope − δ)/slope)·exp(−κ·level)`.
pub(crate) fn censoring_bound(delta: f64, slope: f64, gap: f64, level: f64) -> f64 {
    if delta >= slope {
        return 1.0;
    }
    let kappa = 2.0 * (slope - delta);
    let fresh = (2.0 * slope - delta) / slope * (-kappa * level).exp();
    ((-kappa * gap.max(0.0)).exp() + fresh).min(1.0)
}
