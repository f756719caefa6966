//! One- and two-sample Kolmogorov–Smirnov statistics.

use alloc::vec::Vec;

use crate::math::{ln, sqrt};
use crate::oracle::quadrature::{gauss_legendre, gauss_legendre_fixed};

/// Asymptotic critical value `c(α)/√n`, `c(α) = sqrt(−ln(α/2)/2)`
/// (`c(0.01) ≈ 1.628`).
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    sqrt(-ln(alpha / 2.0) / 2.0) / sqrt(n as f64)
}

/// Critical value for two samples of sizes `n` and `m`.
pub fn ks_critical_value_two_sample(n: usize, m: usize, alpha: f64) -> f64 {
    let eff = (n * m) as f64 / (n + m) as f64;
    sqrt(-ln(alpha / 2.0) / 2.0) / sqrt(eff)
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Statistic of sorted data against precomputed CDF values at those points.
pub fn ks_statistic_sorted(sorted_sample: &[f64], cdf_values: &[f64]) -> f64 {
    let n = sorted_sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, f) in cdf_values.iter().enumerate() {
        let lo = i as f64 / n;
        let hi = (i as f64 + 1.0) / n;
        d = d.max(hi - f).max(f - lo);
    }
    d
}

/// `sup |F_n − F|` for a continuous `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let s = sorted(sample);
    let vals: Vec<f64> = s.iter().map(|x| cdf(*x)).collect();
    ks_statistic_sorted(&s, &vals)
}

/// `sup |F_n − G_m|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as f64, b.len() as f64);
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
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// CDF values `∫_lo^{x_k} pdf` at the sorted points `x_k`, accumulated
/// segment by segment with a fixed Gauss–Legendre rule; segments longer than
/// `max_seg` are subdivided.
pub fn cumulative_integrals<F: Fn(f64) -> f64>(pdf: F, lo: f64, sorted_points: &[f64], max_seg: f64) -> Vec<f64> {
    let nodes = gauss_legendre(20);
    let mut out = Vec::with_capacity(sorted_points.len());
    let mut acc = 0.0;
    let mut prev = lo;
    for &x in sorted_points {
        let len = x - prev;
        if len > 0.0 {
            let pieces = libm::ceil(len / max_seg).max(1.0) as usize;
            let h = len / pieces as f64;
            for k in 0..pieces {
                let a = prev + k as f64 * h;
                acc += gauss_legendre_fixed(&pdf, a, a + h, &nodes);
            }
        }
        out.push(acc);
        prev = x;
    }
    out
}

/// KS statistic of `sample` against the CDF of `pdf` on `[lo, ∞)`, computed
/// by [`cumulative_integrals`].
pub fn ks_statistic_numeric<F: Fn(f64) -> f64>(sample: &[f64], pdf: F, lo: f64) -> f64 {
    let s = sorted(sample);
    let cdf = cumulative_integrals(pdf, lo, &s, 0.05);
    ks_statistic_sorted(&s, &cdf)
}
