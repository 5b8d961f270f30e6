//! Tridiagonal β-Laguerre model and its smallest eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::stochastic::{sample_chi, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaguerreSpec {
    pub n: usize,
    pub beta: f64,
    pub a: f64,
}

impl LaguerreSpec {
    pub fn new(n: usize, beta: f64, a: f64) -> Result<Self> {
        let s = Self { n, beta, a };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return domain("matrix size must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return domain(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.a > -1.0 && self.a.is_finite()) {
            return domain(format!("parameter a must exceed -1, got {}", self.a));
        }
        Ok(())
    }
}

/// Upper bidiagonal factor: `diag[i] = χ_{(a+n−i)β}/√β` and
/// `superdiag[i] = χ_{(n−1−i)β}/√β` for 0-based `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidiagonalL {
    pub diag: Vec<f64>,
    pub superdiag: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return domain("tridiagonal needs n >= 1 diagonal and n - 1 off-diagonal entries");
        }
        Ok(Self { diag, offdiag })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Leading principal submatrix of size `m`.
    pub fn leading(&self, m: usize) -> Self {
        Self {
            diag: self.diag[..m].to_vec(),
            offdiag: self.offdiag[..m.saturating_sub(1)].to_vec(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.diag.iter().chain(&self.offdiag).any(|x| !x.is_finite()) {
            return domain("tridiagonal matrix has non-finite entries");
        }
        Ok(())
    }

    /// Gershgorin interval.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.offdiag[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

pub fn sample_laguerre(spec: LaguerreSpec, stream: &mut RandomStream) -> Result<BidiagonalL> {
    spec.validate()?;
    let LaguerreSpec { n, beta, a } = spec;
    let scale = 1.0 / beta.sqrt();
    let mut diag = Vec::with_capacity(n);
    let mut superdiag = Vec::with_capacity(n - 1);
    for i in 0..n {
        diag.push(sample_chi(stream, (a + (n - i) as f64) * beta)? * scale);
        if i + 1 < n {
            superdiag.push(sample_chi(stream, (n - 1 - i) as f64 * beta)? * scale);
        }
    }
    Ok(BidiagonalL { diag, superdiag })
}

/// `L·Lᵀ` for upper bidiagonal `L`.
pub fn gram_tridiag(l: &BidiagonalL) -> SymTridiag {
    let n = l.diag.len();
    let diag = (0..n)
        .map(|i| l.diag[i] * l.diag[i] + l.superdiag.get(i).map_or(0.0, |y| y * y))
        .collect();
    let offdiag = (0..n.saturating_sub(1)).map(|i| l.superdiag[i] * l.diag[i + 1]).collect();
    SymTridiag { diag, offdiag }
}

/// Number of eigenvalues below `sigma`: negative pivots of `T − σI = LDLᵀ`.
pub fn sturm_count(t: &SymTridiag, sigma: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..t.n() {
        let e2 = if i > 0 { t.offdiag[i - 1] * t.offdiag[i - 1] } else { 0.0 };
        d = (t.diag[i] - sigma) - if i > 0 { e2 / d } else { 0.0 };
        if d == 0.0 {
            // Perturb a zero pivot off the singular shift.
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of eigenvalues of `L·Lᵀ` below `sigma`, from the factor itself.
///
/// Writing `L·Lᵀ = U·diag(x²)·Uᵀ` with `U` unit upper bidiagonal, the shifted
/// factorization `L·Lᵀ − σI = U⁺D⁺U⁺ᵀ` is built bottom-up by the stationary
/// qd recurrence `s_n = −σ`, `s_i = y_i²·s_{i+1}/d⁺_{i+1} − σ`,
/// `d⁺_i = x_i² + s_i`. Unlike [`sturm_count`] on the assembled product, this
/// keeps relative accuracy for eigenvalues far below `ε·‖L·Lᵀ‖`.
pub fn sturm_count_factored(l: &BidiagonalL, sigma: f64) -> usize {
    let n = l.diag.len();
    let mut count = 0;
    let mut s = -sigma;
    let mut d = 0.0f64;
    for i in (0..n).rev() {
        if i + 1 < n {
            let y = l.superdiag[i];
            s = y * y * (s / d) - sigma;
        }
        d = l.diag[i] * l.diag[i] + s;
        if d == 0.0 {
            d = -f64::MIN_POSITIVE;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn check_k(n: usize, k: usize, rel_tol: f64) -> Result<()> {
    if k < 1 || k > n {
        return domain(format!("k must lie in 1..={n}, got {k}"));
    }
    if !(rel_tol > 0.0) {
        return domain("rel_tol must be positive");
    }
    Ok(())
}

/// Bisection for the `k` smallest eigenvalues given `count(σ)` and a bracket
/// `[lo0, hi0]` of the spectrum with `count(lo0) = 0`.
fn bisect_smallest(count: impl Fn(f64) -> usize, lo0: f64, hi0: f64, k: usize, rel_tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    let mut lo = lo0;
    for idx in 1..=k {
        let mut hi = hi0;
        // Invariant: count(lo) < idx ≤ count(hi).
        loop {
            let width = hi - lo;
            if width <= rel_tol * lo.abs().max(hi.abs()) {
                break;
            }
            let mid = if lo > 0.0 && hi > 4.0 * lo {
                (lo * hi).sqrt()
            } else if lo == 0.0 && hi > 1e-300 {
                // Halve the exponent rather than the value on the way down.
                hi * 2f64.powi(-((hi.log2().abs() as i32).max(1)))
            } else {
                lo + 0.5 * width
            };
            if mid <= lo || mid >= hi {
                break;
            }
            if count(mid) >= idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        out.push(0.5 * (lo + hi));
        // count(lo) < idx still brackets the next eigenvalue from below.
    }
    out
}

/// The `k` smallest eigenvalues by bisection on Sturm counts, each bracketed
/// to relative width `rel_tol` and returned as bracket midpoints.
pub fn smallest_eigenvalues(t: &SymTridiag, k: usize, rel_tol: f64) -> Result<Vec<f64>> {
    t.check_finite()?;
    check_k(t.n(), k, rel_tol)?;
    let (g_lo, g_hi) = t.gershgorin();
    let lo0 = if sturm_count(t, 0.0) == 0 { 0.0 } else { g_lo };
    Ok(bisect_smallest(|s| sturm_count(t, s), lo0, g_hi, k, rel_tol))
}

/// [`smallest_eigenvalues`] of `L·Lᵀ` with the counts of
/// [`sturm_count_factored`], accurate to `rel_tol` however small the
/// eigenvalues are.
pub fn smallest_eigenvalues_factored(l: &BidiagonalL, k: usize, rel_tol: f64) -> Result<Vec<f64>> {
    let n = l.diag.len();
    if l.superdiag.len() + 1 != n || l.diag.iter().chain(&l.superdiag).any(|v| !v.is_finite()) {
        return domain("bidiagonal factor must have finite entries and n − 1 superdiagonal entries");
    }
    check_k(n, k, rel_tol)?;
    if l.diag.iter().any(|&x| x == 0.0) {
        return domain("bidiagonal factor is singular");
    }
    let (_, g_hi) = gram_tridiag(l).gershgorin();
    Ok(bisect_smallest(|s| sturm_count_factored(l, s), 0.0, g_hi, k, rel_tol))
}

/// Eigenvalues together with `μ = β ln(1/λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub rescaled: Vec<f64>,
}

/// Eigenvalues at or below this floor are rejected by [`rescale_spectrum`].
pub const UNDERFLOW_FLOOR: f64 = 1e-280;

pub fn rescale_spectrum(eigs: &[f64], beta: f64) -> Result<SpectrumResult> {
    if !(beta > 0.0) {
        return domain("beta must be positive");
    }
    if let Some(&bad) = eigs.iter().find(|&&l| !(l > UNDERFLOW_FLOOR)) {
        return Err(Error::Range(format!(
            "eigenvalue {bad:e} is at or below the underflow floor; use a larger beta"
        )));
    }
    Ok(SpectrumResult {
        eigenvalues: eigs.to_vec(),
        rescaled: eigs.iter().map(|&l| -beta * l.ln()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Cyclic Jacobi rotations on the dense matrix.
    fn jacobi_eigenvalues(t: &SymTridiag) -> Vec<f64> {
        let n = t.n();
        let mut m = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            m[i][i] = t.diag[i];
            if i + 1 < n {
                m[i][i + 1] = t.offdiag[i];
                m[i + 1][i] = t.offdiag[i];
            }
        }
        for _sweep in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[i][j] * m[i][j])
                .sum();
            if off == 0.0 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if m[p][q] == 0.0 {
                        continue;
                    }
                    let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                    let tt = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let tt = if theta == 0.0 { 1.0 } else { tt };
                    let c = 1.0 / (tt * tt + 1.0).sqrt();
                    let s = tt * c;
                    for r in 0..n {
                        let (mp, mq) = (m[r][p], m[r][q]);
                        m[r][p] = c * mp - s * mq;
                        m[r][q] = s * mp + c * mq;
                    }
                    for r in 0..n {
                        let (mp, mq) = (m[p][r], m[q][r]);
                        m[p][r] = c * mp - s * mq;
                        m[q][r] = s * mp + c * mq;
                    }
                    m[p][q] = 0.0;
                    m[q][p] = 0.0;
                }
            }
        }
        let mut e: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    #[test]
    fn gram_by_hand() {
        let l = BidiagonalL { diag: vec![2.0, 3.0], superdiag: vec![1.0] };
        let t = gram_tridiag(&l);
        assert_eq!(t.diag, vec![5.0, 9.0]);
        assert_eq!(t.offdiag, vec![3.0]);
        let id = BidiagonalL { diag: vec![1.0; 4], superdiag: vec![0.0; 3] };
        let t = gram_tridiag(&id);
        assert_eq!(t.diag, vec![1.0; 4]);
        assert_eq!(t.offdiag, vec![0.0; 3]);
    }

    #[test]
    fn single_entry_model() {
        let spec = LaguerreSpec::new(1, 0.5, 1.0).unwrap();
        let l = sample_laguerre(spec, &mut RandomStream::new(1, 0)).unwrap();
        assert_eq!(l.diag.len(), 1);
        assert!(l.superdiag.is_empty());
        let t = gram_tridiag(&l);
        let e = smallest_eigenvalues(&t, 1, 1e-14).unwrap();
        assert!((e[0] / t.diag[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn first_diagonal_moment() {
        // diag[0]² = χ²_{(a+n)β}/β has mean a + n.
        let spec = LaguerreSpec::new(5, 0.3, 1.5).unwrap();
        let mut s = RandomStream::new(4, 0);
        let m = 100_000;
        let draws: Vec<f64> = (0..m).map(|_| sample_laguerre(spec, &mut s).unwrap().diag[0].powi(2)).collect();
        let mean = draws.iter().sum::<f64>() / m as f64;
        // Var(χ²_r/β) = 2r/β².
        let sd = (2.0 * 6.5 * 0.3 / 0.09 / m as f64).sqrt();
        assert!((mean - 6.5).abs() < 3.0 * sd, "{mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = LaguerreSpec::new(6, 1.0, 0.0).unwrap();
        let a = sample_laguerre(spec, &mut RandomStream::new(2, 3)).unwrap();
        let b = sample_laguerre(spec, &mut RandomStream::new(2, 3)).unwrap();
        assert_eq!(a, b);
        assert!(a.diag.iter().chain(&a.superdiag).all(|&x| x > 0.0));
    }

    #[test]
    fn constant_diagonal() {
        let t = SymTridiag::new(vec![2.5; 5], vec![0.0; 4]).unwrap();
        for e in smallest_eigenvalues(&t, 5, 1e-14).unwrap() {
            assert!((e - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let t = SymTridiag::new(vec![1.0, f64::NAN], vec![0.0]).unwrap();
        assert!(smallest_eigenvalues(&t, 1, 1e-12).is_err());
        let t = SymTridiag::new(vec![1.0, 2.0], vec![0.0]).unwrap();
        assert!(smallest_eigenvalues(&t, 3, 1e-12).is_err());
        assert!(smallest_eigenvalues(&t, 0, 1e-12).is_err());
        assert!(SymTridiag::new(vec![1.0], vec![0.0]).is_err());
        assert!(LaguerreSpec::new(0, 1.0, 0.0).is_err());
        assert!(LaguerreSpec::new(3, 1.0, -1.0).is_err());
    }

    #[test]
    fn matches_dense_oracle() {
        let mut worst = 0.0f64;
        for &beta in &[0.5, 1.0] {
            for &a in &[0.0, 1.0] {
                for i in 0..100 {
                    let mut s = RandomStream::new(17, i);
                    let n = 1 + (i as usize % 8);
                    let t = gram_tridiag(&sample_laguerre(LaguerreSpec::new(n, beta, a).unwrap(), &mut s).unwrap());
                    let got = smallest_eigenvalues(&t, n, 1e-13).unwrap();
                    let want = jacobi_eigenvalues(&t);
                    for j in 0..n {
                        worst = worst.max(((got[j] - want[j]) / want[j]).abs());
                        assert!(got[j] > 0.0);
                    }
                    for j in 1..n {
                        assert_eq!(sturm_count(&t, 0.5 * (got[j - 1] + got[j])), j);
                    }
                }
            }
        }
        assert!(worst < 1e-10, "worst relative error {worst:e}");
    }

    #[test]
    fn factored_matches_assembled_counts() {
        for i in 0..200 {
            let mut s = RandomStream::new(23, i);
            let n = 1 + (i as usize % 8);
            let l = sample_laguerre(LaguerreSpec::new(n, 1.0, 0.5).unwrap(), &mut s).unwrap();
            let t = gram_tridiag(&l);
            let got = smallest_eigenvalues_factored(&l, n, 1e-13).unwrap();
            let want = smallest_eigenvalues(&t, n, 1e-13).unwrap();
            for j in 0..n {
                assert!(((got[j] - want[j]) / want[j]).abs() < 1e-10, "{got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn factored_keeps_tiny_eigenvalues() {
        // det(L·Lᵀ) = Π x_i² holds to relative rounding error, so the product
        // of all computed eigenvalues checks the smallest ones.
        let mut tiny = 0.0f64;
        for &beta in &[0.1, 0.05] {
            for i in 0..100 {
                let mut s = RandomStream::new(29, i);
                let n = 2 + (i as usize % 7);
                let l = sample_laguerre(LaguerreSpec::new(n, beta, 0.0).unwrap(), &mut s).unwrap();
                let eigs = smallest_eigenvalues_factored(&l, n, 1e-14).unwrap();
                assert!(eigs.iter().all(|&e| e > 0.0));
                assert!(eigs.windows(2).all(|w| w[0] <= w[1]));
                let ln_det: f64 = l.diag.iter().map(|x| 2.0 * x.ln()).sum();
                let ln_prod: f64 = eigs.iter().map(|e| e.ln()).sum();
                assert!((ln_det - ln_prod).abs() < 1e-9, "beta {beta}: {ln_det} vs {ln_prod}");
                tiny = tiny.max(-eigs[0].log10());
            }
        }
        // The instances reach far below ε·‖T‖.
        assert!(tiny > 30.0, "{tiny}");
    }

    #[test]
    fn factored_input_checks() {
        let l = BidiagonalL { diag: vec![1.0, 0.0], superdiag: vec![1.0] };
        assert!(smallest_eigenvalues_factored(&l, 1, 1e-12).is_err());
        let l = BidiagonalL { diag: vec![1.0, 2.0], superdiag: vec![] };
        assert!(smallest_eigenvalues_factored(&l, 1, 1e-12).is_err());
        let l = BidiagonalL { diag: vec![2.0, 1.0], superdiag: vec![1.0] };
        // diag(5, 1), offdiag 1: eigenvalues 3 ± √5.
        let e = smallest_eigenvalues_factored(&l, 2, 1e-15).unwrap();
        assert!((e[0] - (3.0 - 5f64.sqrt())).abs() < 1e-14 && (e[1] - (3.0 + 5f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn rescale_examples() {
        let r = rescale_spectrum(&[1.0, (-20.0f64).exp()], 0.05).unwrap();
        assert_eq!(r.rescaled[0], 0.0);
        assert!((r.rescaled[1] - 1.0).abs() < 1e-14);
        assert!(matches!(rescale_spectrum(&[1e-300], 0.05), Err(Error::Range(_))));
        assert!(rescale_spectrum(&[0.0], 0.05).is_err());
    }

    proptest! {
        #[test]
        fn gram_positive_definite(seed in 0u64..100_000, n in 1usize..30, beta in 0.05f64..2.0, a in -0.9f64..3.0) {
            let spec = LaguerreSpec::new(n, beta, a).unwrap();
            let t = gram_tridiag(&sample_laguerre(spec, &mut RandomStream::new(seed, 0)).unwrap());
            let l = sample_laguerre(spec, &mut RandomStream::new(seed, 0)).unwrap();
            prop_assert_eq!(sturm_count_factored(&l, 0.0), 0);
            // The assembled product loses eigenvalues below ε·‖T‖, which small β produces.
            if beta >= 0.5 {
                prop_assert_eq!(sturm_count(&t, 0.0), 0);
            }
        }

        #[test]
        fn interlacing_and_order(seed in 0u64..100_000, n in 2usize..30, beta in 0.2f64..2.0) {
            let spec = LaguerreSpec::new(n, beta, 0.5).unwrap();
            let t = gram_tridiag(&sample_laguerre(spec, &mut RandomStream::new(seed, 1)).unwrap());
            let full = smallest_eigenvalues(&t, 2, 1e-12).unwrap();
            let sub = smallest_eigenvalues(&t.leading(n - 1), 1, 1e-12).unwrap();
            prop_assert!(sub[0] >= full[0] * (1.0 - 1e-10));
            prop_assert!(full[0] <= full[1]);
            let r = rescale_spectrum(&full, beta).unwrap();
            prop_assert!(r.rescaled[0] >= r.rescaled[1]);
        }
    }
}
