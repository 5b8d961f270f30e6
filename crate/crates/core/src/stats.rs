//! Empirical distributions and the comparisons used by the experiments.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffusion::{CountHistogram, Estimate};
use crate::error::{domain, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCDF {
    sorted: Vec<f64>,
}

impl EmpiricalCDF {
    /// Sorts the samples; NaNs are rejected.
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return domain("empirical CDF needs at least one sample");
        }
        if samples.iter().any(|x| x.is_nan()) {
            return domain("samples contain NaN");
        }
        samples.sort_by(|a, b| a.total_cmp(b));
        Ok(Self { sorted: samples })
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{samples ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.n() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.n() as f64
    }

    /// Standard error of the mean.
    pub fn mean_stderr(&self) -> f64 {
        let n = self.n() as f64;
        let m = self.mean();
        let var = self.sorted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &EmpiricalCDF, cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sample.n() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sample.sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d.min(1.0)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance_two_sample(a: &EmpiricalCDF, b: &EmpiricalCDF) -> f64 {
    let (x, y) = (&a.sorted, &b.sorted);
    let (na, nb) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Weighted least-squares fit of `ln P` against `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSlope {
    pub slope: f64,
    pub intercept: f64,
    /// From the weighted residuals, so exact inputs give 0.
    pub stderr: f64,
}

pub fn tail_slope(mu: &[f64], log_probs: &[f64], weights: &[f64]) -> Result<TailSlope> {
    let n = mu.len();
    if n < 3 || log_probs.len() != n || weights.len() != n {
        return domain("tail_slope needs at least 3 points and matching lengths");
    }
    if log_probs.iter().any(|l| !l.is_finite()) {
        return domain("a probability estimate is zero; increase n_paths");
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return domain("weights must be positive and finite");
    }
    let sw: f64 = weights.iter().sum();
    let xm = weights.iter().zip(mu).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = weights.iter().zip(log_probs).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = weights.iter().zip(mu).map(|(w, x)| w * (x - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return domain("mu values must not all coincide");
    }
    let sxy: f64 = (0..n).map(|i| weights[i] * (mu[i] - xm) * (log_probs[i] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..n)
        .map(|i| weights[i] * (log_probs[i] - intercept - slope * mu[i]).powi(2))
        .sum();
    let stderr = (rss / (n as f64 - 2.0) / sxx).sqrt();
    Ok(TailSlope { slope, intercept, stderr })
}

/// Delta-method weight `1/Var(ln p̂) = n p / (1 − p)` of a binomial estimate.
pub fn log_prob_weight(e: &Estimate) -> f64 {
    e.n as f64 * e.value / (1.0 - e.value)
}

/// `P(≥2) / P(≥1)²`, equal to 1/2 in the small-mean limit of a Poisson count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PoissonRatio {
    Estimate { ratio: f64, stderr: f64 },
    /// No path reached two points; `bound` is a 95% upper confidence bound.
    UpperBound { bound: f64 },
}

impl PoissonRatio {
    pub fn value(&self) -> f64 {
        match *self {
            PoissonRatio::Estimate { ratio, .. } => ratio,
            PoissonRatio::UpperBound { bound } => bound,
        }
    }
}

pub fn poisson_ratio(hist: &CountHistogram) -> Result<PoissonRatio> {
    let n = hist.total();
    if n == 0 {
        return domain("empty histogram");
    }
    let nf = n as f64;
    let p1 = hist.at_least(1) as f64 / nf;
    let p2 = hist.at_least(2) as f64 / nf;
    if hist.at_least(2) == 0 {
        // Rule of three for the numerator.
        let bound = if p1 > 0.0 { 3.0 / nf / (p1 * p1) } else { f64::INFINITY };
        return Ok(PoissonRatio::UpperBound { bound });
    }
    let ratio = p2 / (p1 * p1);
    let (g1, g2) = (-2.0 * p2 / (p1 * p1 * p1), 1.0 / (p1 * p1));
    let v11 = p1 * (1.0 - p1) / nf;
    let v22 = p2 * (1.0 - p2) / nf;
    let v12 = p2 * (1.0 - p1) / nf;
    let var = g1 * g1 * v11 + 2.0 * g1 * g2 * v12 + g2 * g2 * v22;
    Ok(PoissonRatio::Estimate { ratio, stderr: var.max(0.0).sqrt() })
}

/// Standard deviation of `stat` over `n_boot` resamples drawn with
/// replacement from both samples.
pub fn bootstrap_stderr<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    n_boot: usize,
    rng: &mut R,
    stat: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() || n_boot < 2 {
        return domain("bootstrap needs non-empty samples and at least 2 resamples");
    }
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    let values: Vec<f64> = (0..n_boot)
        .map(|_| {
            ra.iter_mut().for_each(|x| *x = a[rng.random_range(0..a.len())]);
            rb.iter_mut().for_each(|x| *x = b[rng.random_range(0..b.len())]);
            stat(&ra, &rb)
        })
        .collect();
    let m = values.iter().sum::<f64>() / n_boot as f64;
    Ok((values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n_boot as f64 - 1.0)).sqrt())
}

/// `(x − y) / √(sx² + sy²)`.
pub fn z_score(x: f64, sx: f64, y: f64, sy: f64) -> f64 {
    (x - y) / (sx * sx + sy * sy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RandomStream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Poisson};

    fn ecdf(v: &[f64]) -> EmpiricalCDF {
        EmpiricalCDF::new(v.to_vec()).unwrap()
    }

    #[test]
    fn ks_examples() {
        let a = ecdf(&[0.3, 0.1, 0.7]);
        assert_eq!(ks_distance_two_sample(&a, &a), 0.0);
        assert_eq!(ks_distance(&ecdf(&[0.0]), |x: f64| x.clamp(0.0, 1.0)), 1.0);
        let d = ks_distance_two_sample(&ecdf(&[1.0, 3.0, 5.0]), &ecdf(&[2.0, 4.0, 6.0]));
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert!(EmpiricalCDF::new(vec![]).is_err());
    }

    #[test]
    fn one_sample_ks_by_hand() {
        // Points 0.25 and 0.5 against U(0,1): gaps 0.25, 0.25, 0.5 (after 0.5).
        let d = ks_distance(&ecdf(&[0.5, 0.25]), |x: f64| x);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ecdf_evaluation() {
        let e = ecdf(&[2.0, 1.0, 2.0, 3.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(10.0), 1.0);
        assert_eq!(e.mean(), 2.0);
    }

    #[test]
    fn tail_slope_exact_and_constant() {
        let mu = [1.0, 2.0, 3.0, 4.0];
        let lp: Vec<f64> = mu.iter().map(|m| -m / 2.0).collect();
        let w = [1.0, 2.0, 3.0, 4.0];
        let fit = tail_slope(&mu, &lp, &w).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
        let fit = tail_slope(&mu, &[0.3; 4], &w).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(tail_slope(&mu, &[0.0, f64::NEG_INFINITY, 0.0, 0.0], &w).is_err());
        assert!(tail_slope(&mu[..2], &lp[..2], &w[..2]).is_err());
    }

    #[test]
    fn tail_slope_recovers_noisy_slope() {
        // Binomial estimates of p = 0.5 e^{−2(μ−1)}.
        let mut rng = RandomStream::new(3, 0);
        let mu = [1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5];
        let n = 200_000u64;
        let mut lp = Vec::new();
        let mut w = Vec::new();
        for &m in &mu {
            let p: f64 = 0.5 * (-2.0f64 * (m - 1.0)).exp();
            let hits = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
            let e = Estimate::binomial(hits, n);
            lp.push(e.value.ln());
            w.push(log_prob_weight(&e));
        }
        let fit = tail_slope(&mu, &lp, &w).unwrap();
        assert!((fit.slope + 2.0).abs() < 2.0 * fit.stderr.max(0.01), "{fit:?}");
    }

    #[test]
    fn poisson_ratio_on_poisson_counts() {
        let mut rng = RandomStream::new(5, 0);
        let m = 0.05;
        let pois = Poisson::new(m).unwrap();
        let mut h = CountHistogram::default();
        for _ in 0..2_000_000 {
            h.add(pois.sample(&mut rng) as usize);
        }
        let PoissonRatio::Estimate { ratio, stderr } = poisson_ratio(&h).unwrap() else {
            panic!("expected an estimate")
        };
        let q = (-m as f64).exp();
        let exact = (1.0 - q - m * q) / (1.0 - q).powi(2);
        assert!((ratio - exact).abs() < 3.0 * stderr, "{ratio} vs {exact} ± {stderr}");
        assert!((exact - 0.5).abs() < 0.01);
    }

    #[test]
    fn poisson_ratio_delta_method_matches_spread() {
        // Spread of ratios over independent replicas versus the reported stderr.
        let pois = Poisson::new(0.7).unwrap();
        let mut ratios = Vec::new();
        let mut reported = 0.0;
        for r in 0..200 {
            let mut rng = RandomStream::new(8, r);
            let mut h = CountHistogram::default();
            for _ in 0..5000 {
                h.add(pois.sample(&mut rng) as usize);
            }
            if let PoissonRatio::Estimate { ratio, stderr } = poisson_ratio(&h).unwrap() {
                ratios.push(ratio);
                reported += stderr / 200.0;
            }
        }
        let m = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let sd = (ratios.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (ratios.len() - 1) as f64).sqrt();
        assert!((sd / reported - 1.0).abs() < 0.25, "{sd} vs {reported}");
    }

    #[test]
    fn degenerate_counts_give_bounds() {
        let h = CountHistogram { counts: vec![10] };
        assert_eq!(poisson_ratio(&h).unwrap(), PoissonRatio::UpperBound { bound: f64::INFINITY });
        let h = CountHistogram { counts: vec![90, 10] };
        let PoissonRatio::UpperBound { bound } = poisson_ratio(&h).unwrap() else { panic!() };
        assert!((bound - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_of_mean_difference() {
        let mut rng = RandomStream::new(1, 0);
        let a: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = bootstrap_stderr(&a, &b, 400, &mut rng, |x, y| mean(x) - mean(y)).unwrap();
        let want = (2.0 / 12.0 / 400.0f64).sqrt();
        assert!((se / want - 1.0).abs() < 0.2, "{se} vs {want}");
    }

    proptest! {
        #[test]
        fn two_sample_ks_symmetric(a in prop::collection::vec(-5.0f64..5.0, 1..50),
                                   b in prop::collection::vec(-5.0f64..5.0, 1..50)) {
            let (ea, eb) = (ecdf(&a), ecdf(&b));
            let d = ks_distance_two_sample(&ea, &eb);
            prop_assert_eq!(d, ks_distance_two_sample(&eb, &ea));
            prop_assert!((0.0..=1.0).contains(&d));
            // Brute force over all sample points.
            let brute = a.iter().chain(&b).map(|&x| (ea.eval(x) - eb.eval(x)).abs()).fold(0.0, f64::max);
            prop_assert!((d - brute).abs() < 1e-15);
        }

        #[test]
        fn ecdf_monotone(a in prop::collection::vec(-5.0f64..5.0, 1..50), x in -6.0f64..6.0, dx in 0.0f64..3.0) {
            let e = ecdf(&a);
            let (f1, f2) = (e.eval(x), e.eval(x + dx));
            prop_assert!((0.0..=1.0).contains(&f1) && f1 <= f2);
        }
    }
}
