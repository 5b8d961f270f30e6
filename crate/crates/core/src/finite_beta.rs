//! Rescaled finite-β diffusions `q^β_μ`.
//!
//! Between explosions the state follows
//! `dq = dW + ¼(d± + e^{−q/β} + e^{−(c_μ(t) − q)/β}) dt` with `d− = −a` and
//! `d+ = a + 1`. The process starts in the minus regime from `−∞`; when it
//! blows up to `+∞` it restarts from `−∞` in the other regime.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::diffusion::{CountHistogram, PhaseKind, LINE_SLOPE};
use crate::error::{domain, Result};
use crate::stochastic::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplosionKind {
    MinusExplosion,
    PlusExplosion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepScheme {
    /// Exact flows of the wall and line terms composed with an Euler step for
    /// the constant drift and the noise.
    Splitting,
    /// Plain Euler–Maruyama on the full drift, exponentials capped at
    /// `drift_clamp`. The step is shortened so that the exponential push per
    /// step stays below β.
    ClampedEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffSolverOpts {
    pub dt_base: f64,
    /// Step near the wall or the line is `dt_base · β^beta_scaling`; elsewhere
    /// it is `dt_base · β`.
    pub beta_scaling: f64,
    /// Explosion at `c_μ(t) + q_ceiling·β·ln(1/β)`, restart at
    /// `−q_ceiling·β·ln(1/β)`.
    pub q_ceiling: f64,
    /// Cap on each exponential drift term. Only the explicit Euler scheme and
    /// [`drift`] use it; values of 1e6 and above act as no cap in practice
    /// because the step policy keeps the state out of the range where the
    /// terms get that large.
    pub drift_clamp: f64,
    pub scheme: StepScheme,
}

impl Default for StiffSolverOpts {
    fn default() -> Self {
        Self {
            dt_base: 0.1,
            beta_scaling: 2.0,
            q_ceiling: 10.0,
            drift_clamp: 1e6,
            scheme: StepScheme::Splitting,
        }
    }
}

impl StiffSolverOpts {
    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.dt_base) || !ok(self.q_ceiling) || !(self.beta_scaling >= 1.0 && self.beta_scaling.is_finite()) {
            return domain(format!("invalid solver options {self:?}"));
        }
        if !(self.drift_clamp > 0.0) {
            return domain("drift_clamp must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBetaRun {
    pub beta: f64,
    pub a: f64,
    pub mu: f64,
    pub horizon: f64,
    pub explosions: Vec<(f64, ExplosionKind)>,
    /// Plus explosions, plus one when a plus regime with drift at least the
    /// line slope is still running at the horizon.
    pub count: usize,
    pub completed_beyond_horizon: bool,
    pub steps: u64,
}

/// Full drift of the SDE with each exponential capped at `clamp`, evaluated
/// in log space so that no intermediate overflows.
pub fn drift(phase: PhaseKind, a: f64, beta: f64, mu: f64, t: f64, q: f64, clamp: f64) -> f64 {
    let base = phase_base(phase, a);
    let ln_cap = clamp.ln();
    let capped = |x: f64| x.min(ln_cap).exp();
    let c = mu + LINE_SLOPE * t;
    0.25 * (base + capped(-q / beta) + capped(-(c - q) / beta))
}

fn phase_base(phase: PhaseKind, a: f64) -> f64 {
    match phase {
        PhaseKind::Minus => -a,
        PhaseKind::Plus => a + 1.0,
    }
}

/// `ln(e^x + e^y)`.
fn logaddexp(x: f64, y: f64) -> f64 {
    let m = x.max(y);
    m + (-(x - y).abs()).exp().ln_1p()
}

fn check(beta: f64, a: f64, mu: f64, horizon: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 0.5) {
        return domain(format!("beta must lie in (0, 0.5], got {beta}"));
    }
    if !(a > -1.0 && a.is_finite()) {
        return domain(format!("parameter a must exceed -1, got {a}"));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("mu must be positive, got {mu}"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    Ok(())
}

/// Integrate one trajectory up to `horizon`.
pub fn run_q_beta(
    stream: &mut RandomStream,
    beta: f64,
    a: f64,
    mu: f64,
    horizon: f64,
    opts: &StiffSolverOpts,
) -> Result<FiniteBetaRun> {
    check(beta, a, mu, horizon)?;
    opts.validate()?;
    let offset = opts.q_ceiling * beta * (1.0 / beta).ln();
    let zone = 5.0 * beta * (1.0 / beta).ln();
    let dt_near = opts.dt_base * beta.powf(opts.beta_scaling);
    let dt_far = opts.dt_base * beta;

    let mut phase = PhaseKind::Minus;
    let mut q = -offset;
    let mut t = 0.0f64;
    let mut steps = 0u64;
    let mut explosions = Vec::new();
    let mut count = 0usize;
    while t < horizon {
        let c = mu + LINE_SLOPE * t;
        let near = q < zone || c - q < zone;
        let mut dt = (if near { dt_near } else { dt_far }).min(horizon - t);
        if opts.scheme == StepScheme::ClampedEuler {
            // Keep the exponential push per step below β.
            let push = drift(phase, a, beta, mu, t, q, opts.drift_clamp) - 0.25 * phase_base(phase, a);
            dt = dt.min(beta / push.max(1e-300));
        }
        let base = phase_base(phase, a);
        let mut exploded = false;
        match opts.scheme {
            StepScheme::Splitting => {
                let ln_rate = (dt / (4.0 * beta)).ln();
                q = beta * logaddexp(q / beta, ln_rate);
                // u = c − q obeys du/dt = −¼e^{−u/β}, i.e. e^{u/β} decreases by dt/(4β).
                let x = (ln_rate - (c - q) / beta).exp();
                if x >= 1.0 {
                    exploded = true;
                } else {
                    q -= beta * (-x).ln_1p();
                }
            }
            StepScheme::ClampedEuler => {
                q += (drift(phase, a, beta, mu, t, q, opts.drift_clamp) - 0.25 * base) * dt;
            }
        }
        let z: f64 = stream.sample(StandardNormal);
        q += 0.25 * base * dt + dt.sqrt() * z;
        t += dt;
        steps += 1;
        if !q.is_finite() {
            return Err(crate::Error::Range(format!("non-finite state at t = {t}")));
        }
        if exploded || q > mu + LINE_SLOPE * t + offset {
            let kind = match phase {
                PhaseKind::Minus => ExplosionKind::MinusExplosion,
                PhaseKind::Plus => {
                    count += 1;
                    ExplosionKind::PlusExplosion
                }
            };
            explosions.push((t, kind));
            phase = phase.other();
            q = -offset;
        }
    }
    let completed_beyond_horizon = phase == PhaseKind::Plus && phase.drift(a) >= LINE_SLOPE;
    if completed_beyond_horizon {
        count += 1;
    }
    Ok(FiniteBetaRun {
        beta,
        a,
        mu,
        horizon,
        explosions,
        count,
        completed_beyond_horizon,
        steps,
    })
}

/// Count histogram over `n_runs` independent runs; run `i` uses stream `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionHistogram {
    pub histogram: CountHistogram,
    pub n_runs: u64,
}

impl ExplosionHistogram {
    /// Binomial standard error of bin `c`.
    pub fn bin_stderr(&self, c: usize) -> f64 {
        let n = self.n_runs as f64;
        let p = self.histogram.counts.get(c).copied().unwrap_or(0) as f64 / n;
        (p * (1.0 - p) / n).sqrt()
    }
}

pub fn explosion_count_distribution(
    beta: f64,
    a: f64,
    mu: f64,
    n_runs: u64,
    horizon: f64,
    seed: u64,
    opts: &StiffSolverOpts,
) -> Result<ExplosionHistogram> {
    check(beta, a, mu, horizon)?;
    opts.validate()?;
    if n_runs == 0 {
        return domain("n_runs must be positive");
    }
    let histogram = (0..n_runs)
        .into_par_iter()
        .map(|i| run_q_beta(&mut RandomStream::new(seed, i), beta, a, mu, horizon, opts).map(|r| r.count))
        .try_fold(CountHistogram::default, |mut h, c| {
            h.add(c?);
            Ok::<_, crate::Error>(h)
        })
        .try_reduce(CountHistogram::default, |x, y| Ok(x.merge(&y)))?;
    Ok(ExplosionHistogram { histogram, n_runs })
}

/// Total-variation distance between two count histograms.
pub fn total_variation(p: &CountHistogram, q: &CountHistogram) -> f64 {
    let len = p.counts.len().max(q.counts.len());
    let (fp, fq) = (p.frequencies(len), q.frequencies(len));
    0.5 * fp.iter().zip(&fq).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
