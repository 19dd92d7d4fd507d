//! Small statistical toolkit for checking samplers against analytic laws:
//! Wilson intervals, chi-square goodness of fit on equal-mass bins and
//! Kolmogorov-Smirnov distances.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 99% standard normal quantile, `Phi^{-1}(0.995)`.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Asymptotic Kolmogorov critical value at level 1%: `sqrt(-ln(0.005) / 2)`.
pub const KS_C_1PCT: f64 = 1.627_623_630_718_729_3;

/// Wilson score interval for `hits` successes out of `n` trials.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if hits == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if hits == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    // Keep the estimate inside its own interval despite rounding.
    (lo.min(p), hi.max(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Pearson chi-square of `observed` counts against cell probabilities
/// (which must sum to one). Degrees of freedom: cells minus one.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    assert!(observed.len() >= 2);
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let statistic = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = nf * p;
            let diff = o as f64 - e;
            diff * diff / e
        })
        .sum::<f64>();
    let dof = observed.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map(|chi| 1.0 - chi.cdf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquareTest {
        statistic,
        dof,
        p_value,
    }
}

/// Cut points `lo = e_0 < e_1 < ... < e_k = hi` splitting the mass of a
/// continuous CDF on `[lo, hi]` into `k` equal parts (bisection).
pub fn equal_mass_edges<F: Fn(f64) -> f64>(cdf: F, lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let f_lo = cdf(lo);
    let f_hi = cdf(hi);
    let mut edges = Vec::with_capacity(k + 1);
    edges.push(lo);
    for j in 1..k {
        let target = f_lo + (f_hi - f_lo) * j as f64 / k as f64;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if cdf(m) < target {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        edges.push(0.5 * (a + b));
    }
    edges.push(hi);
    edges
}

/// Histogram of `samples` on sorted `edges`; values outside are clamped
/// into the first/last bin.
pub fn histogram(samples: &[f64], edges: &[f64]) -> Vec<u64> {
    let k = edges.len() - 1;
    let mut counts = vec![0u64; k];
    for &x in samples {
        let idx = edges[1..k].partition_point(|&e| e <= x);
        counts[idx] += 1;
    }
    counts
}

/// One-sample KS distance of `sorted` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample KS distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn ks_critical_1pct(n: usize) -> f64 {
    KS_C_1PCT / (n as f64).sqrt()
}

pub fn ks_two_sample_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    KS_C_1PCT * ((n + m) / (n * m)).sqrt()
}
