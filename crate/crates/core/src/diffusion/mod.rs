//! The limiting coupled family `r_μ`: a reflected Brownian motion that
//! alternates between the drifts `−a/4` and `(a+1)/4`, restarting from 0 each
//! time it meets the critical line `μ + t/4`. The number of completed `+`
//! phases is the number of points of the limit process in `[μ, ∞)`.

mod kernel;
mod montecarlo;

pub use kernel::SimOpts;
pub use montecarlo::{
    estimate_exceedance, estimate_line_crossing, extract_point_samples, sample_limit_replicas,
    simulate_count_profiles, CountHistogram, Estimate, LimitReplica, McOpts, ProfileSummary,
};

use crate::error::{domain, Result};
use crate::stochastic::BrownianPath;
use kernel::{censoring_bound, hit_level_supremum, run_phase, Boundary, PhaseEnd};
use serde::{Deserialize, Serialize};

/// Slope of the critical line.
pub const LINE_SLOPE: f64 = 0.25;

/// The affine boundary `μ + t/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalLine {
    mu: f64,
}

impl CriticalLine {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("critical line intercept must be positive, got {mu}"));
        }
        Ok(Self { mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn slope(&self) -> f64 {
        LINE_SLOPE
    }

    pub fn value(&self, t: f64) -> f64 {
        self.mu + LINE_SLOPE * t
    }

    fn boundary(&self) -> Boundary {
        Boundary {
            level: self.mu,
            slope: LINE_SLOPE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseKind {
    Minus,
    Plus,
}

impl PhaseKind {
    pub fn drift(self, a: f64) -> f64 {
        match self {
            PhaseKind::Minus => -a / 4.0,
            PhaseKind::Plus => (a + 1.0) / 4.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            PhaseKind::Minus => PhaseKind::Plus,
            PhaseKind::Plus => PhaseKind::Minus,
        }
    }
}

/// Outcome of a single phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HitTime {
    /// Hit at this time (the grid point at which the reset happens).
    Finite(f64),
    /// Still running at the horizon with drift at least the line slope, so
    /// the hit happens almost surely; treated as completed.
    BeyondHorizon,
    /// Still running at the horizon with drift below the line slope; no
    /// further hits are assumed.
    Infinite,
}

impl HitTime {
    pub fn time(self) -> Option<f64> {
        match self {
            HitTime::Finite(t) => Some(t),
            _ => None,
        }
    }

    /// Whether the phase counts as completed.
    pub fn is_hit(self) -> bool {
        !matches!(self, HitTime::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub xi_minus: HitTime,
    pub xi_plus: HitTime,
    /// Upper bound on the probability that the truncated minus phase would
    /// have hit after the horizon; 0 when the phase completed.
    pub residual_bound_minus: f64,
    pub residual_bound_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionRun {
    pub a: f64,
    pub mu: f64,
    pub horizon: f64,
    pub cycles: Vec<CycleRecord>,
    pub count: usize,
    /// Phase that was still running at the horizon.
    pub censored_phase: PhaseKind,
    /// Upper bound on the probability that more `+` phases complete after
    /// the horizon.
    pub residual_bound: f64,
}

fn check_a(a: f64) -> Result<()> {
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    Ok(())
}

struct Trace {
    count: usize,
    /// Hit grid indices in phase order, starting with the first minus phase.
    hits: Vec<usize>,
    censored: PhaseKind,
    censored_gap: f64,
}

/// Run the alternating scheme, stopping once `stop_at` plus phases complete.
fn trace(
    path: &BrownianPath,
    a: f64,
    line: CriticalLine,
    opts: SimOpts,
    stop_at: Option<usize>,
    record: bool,
) -> Trace {
    let boundary = line.boundary();
    let mut phase = PhaseKind::Minus;
    let mut start = 0usize;
    let mut count = 0usize;
    let mut hits = Vec::new();
    loop {
        match run_phase(path, start, phase.drift(a), boundary, opts) {
            PhaseEnd::Hit(k) => {
                if record {
                    hits.push(k);
                }
                if phase == PhaseKind::Plus {
                    count += 1;
                    if stop_at.is_some_and(|s| count >= s) {
                        return Trace {
                            count,
                            hits,
                            censored: PhaseKind::Minus,
                            censored_gap: line.value(path.grid.time(k)),
                        };
                    }
                }
                phase = phase.other();
                start = k;
            }
            PhaseEnd::Censored { gap } => {
                if phase == PhaseKind::Plus && phase.drift(a) >= LINE_SLOPE {
                    count += 1;
                }
                return Trace {
                    count,
                    hits,
                    censored: phase,
                    censored_gap: gap,
                };
            }
        }
    }
}

fn count_only(path: &BrownianPath, a: f64, mu: f64, opts: SimOpts, stop_at: Option<usize>) -> usize {
    let line = CriticalLine { mu };
    trace(path, a, line, opts, stop_at, false).count
}

/// Simulate `r_μ` on `path` up to its horizon.
pub fn run_r_mu(path: &BrownianPath, a: f64, line: CriticalLine, opts: SimOpts) -> Result<DiffusionRun> {
    check_a(a)?;
    path.grid.validate()?;
    let tr = trace(path, a, line, opts, None, true);
    let horizon = path.grid.end();
    let t_end_line = line.value(horizon);
    let time = |k: usize| path.grid.time(k);

    let mut cycles = Vec::new();
    for pair in tr.hits.chunks(2) {
        let xi_plus = match pair.get(1) {
            Some(&k) => HitTime::Finite(time(k)),
            None => HitTime::Infinite,
        };
        cycles.push(CycleRecord {
            xi_minus: HitTime::Finite(time(pair[0])),
            xi_plus,
            residual_bound_minus: 0.0,
            residual_bound_plus: 0.0,
        });
    }

    let minus_drift = PhaseKind::Minus.drift(a);
    // Bound for a fresh minus phase started after the horizon.
    let fresh_minus = censoring_bound(minus_drift, LINE_SLOPE, t_end_line, t_end_line);
    let residual_bound;
    match tr.censored {
        PhaseKind::Minus => {
            let b = censoring_bound(minus_drift, LINE_SLOPE, tr.censored_gap, t_end_line);
            residual_bound = b;
            cycles.push(CycleRecord {
                xi_minus: HitTime::Infinite,
                xi_plus: HitTime::Infinite,
                residual_bound_minus: b,
                residual_bound_plus: 0.0,
            });
        }
        PhaseKind::Plus => {
            let plus_drift = PhaseKind::Plus.drift(a);
            let last = cycles.last_mut().expect("a plus phase follows a minus hit");
            if plus_drift >= LINE_SLOPE {
                last.xi_plus = HitTime::BeyondHorizon;
                residual_bound = fresh_minus;
            } else {
                let b = censoring_bound(plus_drift, LINE_SLOPE, tr.censored_gap, t_end_line);
                last.residual_bound_plus = b;
                residual_bound = b;
            }
        }
    }
    Ok(DiffusionRun {
        a,
        mu: line.mu(),
        horizon,
        cycles,
        count: tr.count,
        censored_phase: tr.censored,
        residual_bound,
    })
}

/// Counts on one shared path for each intercept of an increasing grid.
pub fn cycle_count_profile(path: &BrownianPath, a: f64, mu_grid: &[f64], opts: SimOpts) -> Result<Vec<usize>> {
    check_a(a)?;
    path.grid.validate()?;
    check_grid(mu_grid)?;
    Ok(mu_grid.iter().map(|&mu| count_only(path, a, mu, opts, None)).collect())
}

pub(crate) fn check_grid(mu_grid: &[f64]) -> Result<()> {
    if mu_grid.is_empty() {
        return domain("intercept grid is empty");
    }
    for &mu in mu_grid {
        CriticalLine::new(mu)?;
    }
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("intercept grid must be strictly increasing");
    }
    Ok(())
}

/// Smallest intercept above which no phase of the process can hit.
///
/// Every trajectory starts with the same minus phase, which for larger
/// intercepts runs to the horizon; the exact supremum of hitting intercepts
/// of that phase (bridge thresholds included) therefore bounds all points.
pub fn mu_max_auto(path: &BrownianPath, a: f64, tol_mu: f64, opts: SimOpts) -> Result<f64> {
    check_a(a)?;
    path.grid.validate()?;
    let sup = hit_level_supremum(path, 0, PhaseKind::Minus.drift(a), LINE_SLOPE, opts);
    Ok(sup.max(0.0) + tol_mu)
}

/// Decreasing sequence of points of the limit process above `mu_min`, read
/// off one driving path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub a: f64,
    pub points: Vec<f64>,
    /// `(lo, hi)` with `count(lo) ≥ k` and `count(hi) < k`.
    pub brackets: Vec<(f64, f64)>,
    pub tol_mu: f64,
    pub mu_min: f64,
}

/// Locate the points above `mu_min` by bisection on the intercept.
///
/// `max_points` stops after that many points, which keeps the cost of
/// sampling only the top of the process low.
pub fn extract_points(
    path: &BrownianPath,
    a: f64,
    mu_min: f64,
    tol_mu: f64,
    opts: SimOpts,
    max_points: Option<usize>,
) -> Result<PointSample> {
    check_a(a)?;
    path.grid.validate()?;
    CriticalLine::new(mu_min)?;
    if !(tol_mu > 0.0 && tol_mu.is_finite()) {
        return domain(format!("bisection tolerance must be positive, got {tol_mu}"));
    }
    let at_least = |mu: f64, k: usize| count_only(path, a, mu, opts, Some(k)) >= k;
    let mut sample = PointSample {
        a,
        points: Vec::new(),
        brackets: Vec::new(),
        tol_mu,
        mu_min,
    };
    let sup = hit_level_supremum(path, 0, PhaseKind::Minus.drift(a), LINE_SLOPE, opts);
    if !(sup >= mu_min) {
        return Ok(sample);
    }
    // No intercept above `sup` registers a hit; the margin absorbs rounding.
    let eps = 1e-9 * sup.abs().max(1.0);
    let mut hi = sup + eps;
    let limit = max_points.unwrap_or(usize::MAX);
    let mut k = 1;
    while k <= limit && at_least(mu_min, k) {
        let mut lo = mu_min;
        // With a ≥ 0 the top point sits exactly at `sup`.
        if k == 1 && sup - eps > mu_min && at_least(sup - eps, 1) {
            lo = sup - eps;
        }
        let (lo, new_hi) = bisect(&at_least, k, lo, hi, tol_mu);
        if let Some(&prev) = sample.points.last() {
            if lo >= prev {
                // Two points inside one bracket: refine both until they separate.
                let (plo, phi) = sample.brackets[k - 2];
                let (lo_k, hi_k, lo_p, hi_p) = separate(&at_least, k, plo.min(lo), phi.max(new_hi), tol_mu);
                sample.points[k - 2] = lo_p;
                sample.brackets[k - 2] = (lo_p, hi_p);
                sample.points.push(lo_k);
                sample.brackets.push((lo_k, hi_k));
                hi = hi_k;
                k += 1;
                continue;
            }
        }
        sample.points.push(lo);
        sample.brackets.push((lo, new_hi));
        hi = new_hi;
        k += 1;
    }
    Ok(sample)
}

/// Bisect for the supremum of intercepts with at least `k` points, given
/// `count(lo) ≥ k > count(hi)`.
fn bisect(at_least: &impl Fn(f64, usize) -> bool, k: usize, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if at_least(mid, k) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Refine points `k − 1` and `k` inside a shared bracket until their lower
/// ends differ, or the bracket reaches floating-point resolution.
fn separate(at_least: &impl Fn(f64, usize) -> bool, k: usize, lo: f64, hi: f64, tol: f64) -> (f64, f64, f64, f64) {
    let mut t = tol;
    loop {
        t *= 1.0 / 64.0;
        let (lp, hp) = bisect(at_least, k - 1, lo, hi, t);
        let (lk, hk) = bisect(at_least, k, lo, hp, t);
        if lk < lp || t < 1e-15 * hi.abs().max(1.0) {
            return (lk, hk, lp, hp);
        }
    }
}
