//! Path-level properties of the coupled diffusions that need more paths than
//! the unit tests use.

use sbo_core::diffusion::{
    estimate_exceedance, run_r_mu, simulate_count_profiles, CriticalLine, McOpts, PhaseKind, SimOpts,
};
use sbo_core::stochastic::{sample_brownian, BrownianPath, RandomStream, TimeGrid};

fn fast(seed: u64) -> McOpts {
    McOpts {
        dt: 1e-2,
        ..McOpts::with_seed(seed)
    }
}

#[test]
fn plus_phase_completes_for_nonnegative_a() {
    let grid = TimeGrid::covering(200.0, 1e-2).unwrap();
    let line = CriticalLine::new(1.0).unwrap();
    let n = 2000;
    let mut mid_plus = 0;
    for i in 0..n {
        let path = sample_brownian(&mut RandomStream::new(31, i), grid).unwrap();
        let run = run_r_mu(&path, 1.0, line, SimOpts::default()).unwrap();
        mid_plus += usize::from(run.censored_phase == PhaseKind::Plus);
    }
    assert!((mid_plus as f64) < 0.01 * n as f64, "{mid_plus} of {n} runs end inside a plus phase");
}

#[test]
fn count_tail_decays_geometrically() {
    for &(a, mu) in &[(0.0, 0.25), (-0.5, 0.25), (1.0, 0.1)] {
        let s = simulate_count_profiles(a, &[mu], 20_000, None, &fast(32)).unwrap();
        let h = &s.histograms[0];
        let ratios: Vec<f64> = (1..h.counts.len())
            .take_while(|&k| h.at_least(k + 1) >= 200)
            .map(|k| h.at_least(k + 1) as f64 / h.at_least(k) as f64)
            .collect();
        assert!(ratios.len() >= 2, "a={a}: {:?}", h.counts);
        // P(≥ k+1 | ≥ k) does not grow and ends below a fixed ρ < 1, so the
        // tail is dominated by a geometric one.
        assert!(ratios.windows(2).all(|w| w[1] <= w[0] + 0.03), "a={a}: {ratios:?}");
        assert!(*ratios.last().unwrap() < 0.8, "a={a}: {ratios:?}");
    }
}

#[test]
fn halving_dt_is_within_noise() {
    let coarse = McOpts {
        horizon: Some(50.0),
        ..McOpts::with_seed(33)
    };
    let fine = McOpts {
        dt: 5e-4,
        seed: 34,
        ..coarse
    };
    let e1 = estimate_exceedance(0.0, 1.0, 1, 100_000, &coarse).unwrap();
    let e2 = estimate_exceedance(0.0, 1.0, 1, 100_000, &fine).unwrap();
    let se = (e1.stderr.powi(2) + e2.stderr.powi(2)).sqrt();
    assert!((e1.value - e2.value).abs() < 2.0 * se, "{e1:?} vs {e2:?}");
}

fn prefix(path: &BrownianPath, n_steps: usize) -> BrownianPath {
    let grid = TimeGrid::new(path.grid.t_start, path.grid.dt, n_steps).unwrap();
    BrownianPath::from_values(grid, path.values[..=n_steps].to_vec(), path.bridge_key()).unwrap()
}

#[test]
fn horizon_doubling_stays_within_residual_bound() {
    let grid = TimeGrid::covering(60.0, 1e-2).unwrap();
    let half = grid.n_steps / 2;
    for &(a, mu) in &[(-0.5, 0.5), (0.0, 1.0), (1.0, 0.5)] {
        let line = CriticalLine::new(mu).unwrap();
        let n = 4000;
        let (mut changed, mut bound) = (0usize, 0.0f64);
        for i in 0..n {
            let full = sample_brownian(&mut RandomStream::new(35, i), grid).unwrap();
            let short = run_r_mu(&prefix(&full, half), a, line, SimOpts::default()).unwrap();
            let long = run_r_mu(&full, a, line, SimOpts::default()).unwrap();
            changed += usize::from(short.count != long.count);
            bound += short.residual_bound;
        }
        let p = changed as f64 / n as f64;
        let b = bound / n as f64;
        let se = (b.max(1.0 / n as f64) / n as f64).sqrt();
        assert!(p <= b + 3.0 * se, "a={a}: counts changed on {p} of paths, mean bound {b}");
    }
}
