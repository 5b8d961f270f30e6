use sbo_core::finite_beta::{explosion_count_distribution, run_q_beta, ExplosionKind, StiffSolverOpts};
use sbo_core::stochastic::RandomStream;

#[test]
fn threshold_offset_is_below_noise() {
    let runs = 2000;
    let p: Vec<(f64, f64)> = [5.0, 10.0, 20.0]
        .iter()
        .map(|&q_ceiling| {
            let opts = StiffSolverOpts {
                q_ceiling,
                ..StiffSolverOpts::default()
            };
            let e = explosion_count_distribution(0.05, 0.0, 2.0, runs, 40.0, 41, &opts)
                .unwrap()
                .histogram
                .exceedance(1);
            (e.value, e.stderr)
        })
        .collect();
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            let se = (p[i].1.powi(2) + p[j].1.powi(2)).sqrt();
            assert!((p[i].0 - p[j].0).abs() < 2.0 * se, "{p:?}");
        }
    }
}

#[test]
fn explosions_alternate_starting_with_minus() {
    let opts = StiffSolverOpts::default();
    for i in 0..50 {
        let r = run_q_beta(&mut RandomStream::new(42, i), 0.1, 1.0, 0.5, 30.0, &opts).unwrap();
        for (j, &(t, kind)) in r.explosions.iter().enumerate() {
            let want = if j % 2 == 0 { ExplosionKind::MinusExplosion } else { ExplosionKind::PlusExplosion };
            assert_eq!(kind, want);
            assert!(t > 0.0 && t <= 30.0);
        }
        assert!(r.explosions.windows(2).all(|w| w[0].0 < w[1].0));
        let plus = r.explosions.iter().filter(|e| e.1 == ExplosionKind::PlusExplosion).count();
        assert_eq!(r.count, plus + usize::from(r.completed_beyond_horizon));
    }
}
