//! Path-parallel Monte Carlo drivers. Replica `i` always reads stream `i` of
//! the master seed and results merge by integer sums, so the output does not
//! depend on the number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{run_phase, Boundary, PhaseEnd, SimOpts};
use super::{check_a, check_grid, count_only, cycle_count_profile, extract_points, CriticalLine, PointSample};
use crate::error::{domain, Result};
use crate::stochastic::{resample_brownian, sample_brownian, BrownianPath, RandomStream, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOpts {
    pub seed: u64,
    pub dt: f64,
    /// Grid end time; `None` selects `max(100, 40·μ)` for the largest μ used.
    pub horizon: Option<f64>,
    pub sim: SimOpts,
}

impl Default for McOpts {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 1e-3,
            horizon: None,
            sim: SimOpts::default(),
        }
    }
}

impl McOpts {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn horizon_for(&self, mu_max: f64) -> f64 {
        self.horizon.unwrap_or_else(|| (40.0 * mu_max).max(100.0))
    }

    fn grid(&self, mu_max: f64) -> Result<TimeGrid> {
        TimeGrid::covering(self.horizon_for(mu_max), self.dt)
    }
}

/// A Monte Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub hits: u64,
    pub n: u64,
}

impl Estimate {
    pub fn binomial(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            hits,
            n,
        }
    }
}

/// `counts[c]` = number of paths with cycle count `c`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    pub counts: Vec<u64>,
}

impl CountHistogram {
    pub fn add(&mut self, count: usize) {
        if self.counts.len() <= count {
            self.counts.resize(count + 1, 0);
        }
        self.counts[count] += 1;
    }

    pub fn merge(mut self, other: &Self) -> Self {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn at_least(&self, k: usize) -> u64 {
        self.counts.iter().skip(k).sum()
    }

    pub fn exceedance(&self, k: usize) -> Estimate {
        Estimate::binomial(self.at_least(k), self.total())
    }

    /// Normalised histogram over `0..len`, padding with zeros.
    pub fn frequencies(&self, len: usize) -> Vec<f64> {
        let n = self.total() as f64;
        (0..len)
            .map(|c| self.counts.get(c).copied().unwrap_or(0) as f64 / n)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub a: f64,
    pub mu_grid: Vec<f64>,
    pub histograms: Vec<CountHistogram>,
    /// Paths on which the count profile increased somewhere along the grid.
    pub violations: u64,
    pub n_paths: u64,
}

/// Fold `f` over `n_paths` independent driving paths.
fn fold_paths<A, I, F, M>(n_paths: u64, seed: u64, grid: TimeGrid, identity: I, f: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &BrownianPath, u64) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    (0..n_paths)
        .into_par_iter()
        .fold(
            || (identity(), None::<BrownianPath>),
            |(acc, buf), i| {
                let mut stream = RandomStream::new(seed, i);
                let path = match buf {
                    Some(mut p) => {
                        resample_brownian(&mut stream, grid, &mut p).expect("grid validated");
                        p
                    }
                    None => sample_brownian(&mut stream, grid).expect("grid validated"),
                };
                let acc = f(acc, &path, i);
                (acc, Some(path))
            },
        )
        .map(|(acc, _)| acc)
        .reduce(&identity, merge)
}

fn check_paths(n_paths: u64, min: u64) -> Result<()> {
    if n_paths < min {
        return domain(format!("need at least {min} paths, got {n_paths}"));
    }
    Ok(())
}

/// Estimate `P[count ≥ k]` for the process with intercept `mu`.
pub fn estimate_exceedance(a: f64, mu: f64, k: usize, n_paths: u64, mc: &McOpts) -> Result<Estimate> {
    check_a(a)?;
    CriticalLine::new(mu)?;
    if k < 1 {
        return domain("k must be at least 1");
    }
    check_paths(n_paths, 100)?;
    let grid = mc.grid(mu)?;
    let sim = mc.sim;
    let hits = fold_paths(
        n_paths,
        mc.seed,
        grid,
        || 0u64,
        |acc, path, _| acc + u64::from(count_only(path, a, mu, sim, Some(k)) >= k),
        |x, y| x + y,
    );
    Ok(Estimate::binomial(hits, n_paths))
}

/// Count histograms for every intercept of `mu_grid`, all intercepts sharing
/// each driving path. Counts are capped at `cap` when given.
pub fn simulate_count_profiles(
    a: f64,
    mu_grid: &[f64],
    n_paths: u64,
    cap: Option<usize>,
    mc: &McOpts,
) -> Result<ProfileSummary> {
    check_a(a)?;
    check_grid(mu_grid)?;
    check_paths(n_paths, 1)?;
    let grid = mc.grid(*mu_grid.last().expect("grid checked non-empty"))?;
    let sim = mc.sim;
    let m = mu_grid.len();
    let (histograms, violations) = fold_paths(
        n_paths,
        mc.seed,
        grid,
        || (vec![CountHistogram::default(); m], 0u64),
        |(mut hists, mut bad), path, _| {
            let mut prev = usize::MAX;
            let mut violated = false;
            for (h, &mu) in hists.iter_mut().zip(mu_grid) {
                let c = count_only(path, a, mu, sim, cap);
                let c = cap.map_or(c, |cap| c.min(cap));
                violated |= c > prev;
                prev = c;
                h.add(c);
            }
            bad += u64::from(violated);
            (hists, bad)
        },
        |(h1, b1), (h2, b2)| (h1.into_iter().zip(&h2).map(|(x, y)| x.merge(y)).collect(), b1 + b2),
    );
    Ok(ProfileSummary {
        a,
        mu_grid: mu_grid.to_vec(),
        histograms,
        violations,
        n_paths,
    })
}

/// Point samples from `n_paths` independent paths, in replica order.
pub fn extract_point_samples(
    a: f64,
    mu_min: f64,
    tol_mu: f64,
    max_points: Option<usize>,
    n_paths: u64,
    mu_horizon: f64,
    mc: &McOpts,
) -> Result<Vec<PointSample>> {
    check_a(a)?;
    CriticalLine::new(mu_min)?;
    check_paths(n_paths, 1)?;
    let grid = mc.grid(mu_horizon)?;
    let sim = mc.sim;
    (0..n_paths)
        .into_par_iter()
        .map_init(
            || None::<BrownianPath>,
            |buf, i| {
                let mut stream = RandomStream::new(mc.seed, i);
                match buf {
                    Some(p) => resample_brownian(&mut stream, grid, p)?,
                    None => *buf = Some(sample_brownian(&mut stream, grid)?),
                }
                let path = buf.as_ref().expect("filled above");
                extract_points(path, a, mu_min, tol_mu, sim, max_points)
            },
        )
        .collect()
}

/// Points above `min(mu_grid)` and the count profile over `mu_grid`, both
/// read off the same driving path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReplica {
    pub sample: PointSample,
    pub profile: Vec<usize>,
}

/// One [`LimitReplica`] per path, in replica order.
pub fn sample_limit_replicas(
    a: f64,
    mu_grid: &[f64],
    tol_mu: f64,
    max_points: Option<usize>,
    n_paths: u64,
    mc: &McOpts,
) -> Result<Vec<LimitReplica>> {
    check_a(a)?;
    check_grid(mu_grid)?;
    check_paths(n_paths, 1)?;
    let mu_min = mu_grid[0];
    let grid = mc.grid(*mu_grid.last().expect("grid checked non-empty"))?;
    let sim = mc.sim;
    (0..n_paths)
        .into_par_iter()
        .map_init(
            || None::<BrownianPath>,
            |buf, i| {
                let mut stream = RandomStream::new(mc.seed, i);
                match buf {
                    Some(p) => resample_brownian(&mut stream, grid, p)?,
                    None => *buf = Some(sample_brownian(&mut stream, grid)?),
                }
                let path = buf.as_ref().expect("filled above");
                Ok(LimitReplica {
                    sample: extract_points(path, a, mu_min, tol_mu, sim, max_points)?,
                    profile: cycle_count_profile(path, a, mu_grid, sim)?,
                })
            },
        )
        .collect()
}

/// Probability that a reflected Brownian motion from 0 with drift `drift`
/// reaches the line `level + slope·t` within the horizon.
pub fn estimate_line_crossing(drift: f64, slope: f64, level: f64, n_paths: u64, mc: &McOpts) -> Result<Estimate> {
    if !drift.is_finite() || !(slope >= 0.0 && slope.is_finite()) || !(level > 0.0 && level.is_finite()) {
        return domain(format!(
            "line crossing needs finite drift, slope >= 0 and level > 0, got ({drift}, {slope}, {level})"
        ));
    }
    check_paths(n_paths, 100)?;
    let grid = mc.grid(level)?;
    let sim = mc.sim;
    let boundary = Boundary { level, slope };
    let hits = fold_paths(
        n_paths,
        mc.seed,
        grid,
        || 0u64,
        |acc, path, _| acc + u64::from(matches!(run_phase(path, 0, drift, boundary, sim), PhaseEnd::Hit(_))),
        |x, y| x + y,
    );
    Ok(Estimate::binomial(hits, n_paths))
}
