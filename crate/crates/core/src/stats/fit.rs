//! Monte Carlo means and straight-line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    /// Mean and `sd / sqrt(n)`; the standard error is 0 below two samples.
    pub fn from_samples<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for v in values {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let stderr = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { 0.0 };
        Estimate { mean, stderr, n }
    }

    pub fn scaled(self, factor: f64) -> Self {
        Estimate { mean: self.mean * factor, stderr: self.stderr * factor.abs(), n: self.n }
    }
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub points: usize,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
}

impl LineFit {
    /// Half-width of the two-sided 95% normal interval for the slope.
    pub fn slope_ci95(&self) -> (f64, f64) {
        (self.slope - 1.96 * self.slope_stderr, self.slope + 1.96 * self.slope_stderr)
    }
}

/// Fit with absolute errors `sigma` (weights `1/σ²`), or ordinary least
/// squares with residual-based errors when `sigma` is `None`.
pub fn line_fit(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        return Err(Error::InvalidArgument("fit inputs differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("a line fit needs two points, got {n}")));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|&v| 1.0 / (v * v)).collect(),
        None => vec![1.0; n],
    };
    if w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidArgument("fit errors must be positive and finite".into()));
    }
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let sy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::InsufficientData("fit abscissae are all equal".into()));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((w, x), y)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let scale = match sigma {
        Some(_) => 1.0,
        None if n > 2 => chi2 / (n - 2) as f64,
        None => 0.0,
    };
    Ok(LineFit {
        slope,
        slope_stderr: (scale * sw / det).sqrt(),
        intercept,
        intercept_stderr: (scale * sxx / det).sqrt(),
        points: n,
        chi2,
    })
}

/// Fit of `ln y` against `ln x`, propagating `σ_y / y` as the error of `ln y`.
/// Points with `y <= 0` are dropped.
pub fn log_log_fit(x: &[f64], y: &[Estimate]) -> Result<LineFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut ls = Vec::new();
    for (&xi, yi) in x.iter().zip(y) {
        if yi.mean > 0.0 && yi.stderr > 0.0 {
            lx.push(xi.ln());
            ly.push(yi.mean.ln());
            ls.push(yi.stderr / yi.mean);
        }
    }
    line_fit(&lx, &ly, Some(&ls))
}
