//! Goodness of fit against a homogeneous Poisson process.

use serde::{Deserialize, Serialize};

use super::point_process::PointSample;
use crate::error::{Error, Result};

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance of `gaps` from `Exp(rate)`.
pub fn ks_exponential(gaps: &[f64], rate: f64) -> f64 {
    ks_distance(gaps, |x| if x <= 0.0 { 0.0 } else { -(-rate * x).exp_m1() })
}

/// `P(K = k)` for `K ~ Poisson(mean)`, `k = 0..len`.
pub fn poisson_pmf(mean: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let mut log_p = -mean;
    for k in 0..len {
        if k > 0 {
            log_p += mean.ln() - (k as f64).ln();
        }
        out.push(if mean == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { log_p.exp() });
    }
    out
}

/// Total-variation distance between the empirical law of `counts` and Poisson(`mean`).
pub fn tv_poisson(counts: &[usize], mean: f64) -> f64 {
    if counts.is_empty() {
        return 0.0;
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    let n = counts.len() as f64;
    let mut hist = vec![0.0; max + 1];
    for &c in counts {
        hist[c] += 1.0 / n;
    }
    let pmf = poisson_pmf(mean, max + 1);
    let covered: f64 = pmf.iter().sum();
    let body: f64 = hist.iter().zip(&pmf).map(|(h, p)| (h - p).abs()).sum();
    0.5 * (body + (1.0 - covered).max(0.0))
}

/// Pearson correlation; 0 when either variable is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub intensity: f64,
    pub windows: usize,
    /// KS distance of successor gaps from `Exp(intensity)`.
    pub ks_gap: f64,
    pub gaps: usize,
    /// Window points with no successor inside the extension.
    pub censored: usize,
    /// TV distance of window counts from Poisson(`intensity * 2w`).
    pub tv_count: f64,
    /// Correlation of counts in `[-w, 0)` and `[0, w]`.
    pub half_window_correlation: f64,
    pub mean_count: f64,
}

/// Tests a family of point samples (all with the same window) against a
/// Poisson process of the given intensity per unit rescaled length.
///
/// Gaps are measured from each window point to its successor, which may lie
/// in the extension beyond `+w`. Gaps between window points only would be
/// biased towards short values because a window of finite length cannot
/// contain long ones.
pub fn poisson_tests(samples: &[PointSample], intensity: f64, min_samples: usize) -> Result<PoissonReport> {
    if samples.len() < min_samples.max(1) {
        return Err(Error::InsufficientData(format!(
            "{} samples, at least {} required",
            samples.len(),
            min_samples.max(1)
        )));
    }
    if !(intensity >= 0.0) {
        return Err(Error::InvalidArgument(format!("intensity must be nonnegative, got {intensity}")));
    }
    let w = samples[0].halfwidth;
    if samples.iter().any(|s| s.halfwidth != w) {
        return Err(Error::Window("samples use different window half-widths".into()));
    }
    let mut gaps = Vec::new();
    let mut censored = 0;
    let mut counts = Vec::with_capacity(samples.len());
    let mut left = Vec::with_capacity(samples.len());
    let mut right = Vec::with_capacity(samples.len());
    for s in samples {
        let (g, c) = s.successor_gaps();
        gaps.extend(g);
        censored += c;
        counts.push(s.points.len());
        left.push(s.count_in(-w, 0.0) as f64);
        right.push(s.points.iter().filter(|&&x| x >= 0.0).count() as f64);
    }
    let ks_gap = if gaps.is_empty() { 0.0 } else { ks_exponential(&gaps, intensity) };
    let mean_count = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Ok(PoissonReport {
        intensity,
        windows: samples.len(),
        ks_gap,
        gaps: gaps.len(),
        censored,
        tv_count: tv_poisson(&counts, intensity * 2.0 * w),
        half_window_correlation: pearson(&left, &right),
        mean_count,
    })
}
