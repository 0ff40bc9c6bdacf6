//! Transfer-matrix eigensolver for delta interactions on a Dirichlet interval.

use serde::{Deserialize, Serialize};

use super::{bisect_sign, isolate};
use crate::error::{Error, Result};
use crate::spectra::{Eigenvalue, Spectrum};

/// `-u'' + Σ ω_k δ(x - x_k) u` on `[0, L]` with `u(0) = u(L) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingProblem {
    length: f64,
    positions: Vec<f64>,
    strengths: Vec<f64>,
}

impl ShootingProblem {
    pub fn new(length: f64, positions: Vec<f64>, strengths: Vec<f64>) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!("interval length must be positive, got {length}")));
        }
        if positions.len() != strengths.len() {
            return Err(Error::InvalidArgument("one strength per position".into()));
        }
        if positions.iter().any(|&x| !(x > 0.0 && x < length)) {
            return Err(Error::InvalidArgument("positions must lie strictly inside (0, L)".into()));
        }
        if positions.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("positions must be strictly increasing".into()));
        }
        if strengths.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidArgument("strengths must be finite".into()));
        }
        Ok(ShootingProblem { length, positions, strengths })
    }

    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
    pub fn strengths(&self) -> &[f64] {
        &self.strengths
    }

    /// Integrates from `u(0) = 0, u'(0) = 1` at `E = -κ²`. Returns the number
    /// of zeros of `u` in `(0, L)` and `u(L)` up to a positive factor.
    pub fn shoot(&self, energy: f64) -> (usize, f64) {
        let k = (-energy).sqrt();
        let (mut u, mut du) = (0.0_f64, 1.0_f64);
        let mut x = 0.0;
        let mut zeros = 0;
        let mut sign = 1.0;
        let nodes = self.positions.iter().zip(&self.strengths).map(|(&p, &w)| (p, w)).chain([(self.length, 0.0)]);
        for (p, w) in nodes {
            let h = p - x;
            // cosh and sinh divided by e^{κh}
            let damp = (-2.0 * k * h).exp();
            let c = 0.5 * (1.0 + damp);
            let s = 0.5 * (1.0 - damp);
            let sk = if k * h < 1e-8 { h * (1.0 - k * h) } else { s / k };
            (u, du) = (u * c + du * sk, u * k * s + du * c);
            if u != 0.0 && u.signum() != sign {
                zeros += 1;
                sign = u.signum();
            }
            du += w * u;
            let scale = u.abs().max(du.abs());
            u /= scale;
            du /= scale;
            x = p;
        }
        // a zero exactly at L is the eigenvalue itself, not an interior node
        if u == 0.0 {
            return (zeros, 0.0);
        }
        (zeros, u)
    }

    /// Eigenvalues below `energy`.
    pub fn count_below(&self, energy: f64) -> usize {
        self.shoot(energy).0
    }
}

/// Every eigenvalue in `[lo, hi)`, each refined to floating-point resolution.
pub fn shoot_spectrum(problem: &ShootingProblem, window: (f64, f64)) -> Result<Spectrum> {
    let (lo, hi) = window;
    if !(lo < hi && hi < 0.0) {
        return Err(Error::InvalidArgument(format!("window must satisfy E_lo < E_hi < 0, got {window:?}")));
    }
    let count = |e: f64| Ok(problem.count_below(e));
    let brackets = isolate(&count, lo, hi, 0.0)?;
    let mismatch = |e: f64| problem.shoot(e).1;
    let eigenvalues: Vec<Eigenvalue> = brackets
        .iter()
        .map(|&(a, b, m)| Eigenvalue {
            energy: if m == 1 { bisect_sign(&mismatch, a, b) } else { 0.5 * (a + b) },
            multiplicity: m,
            unresolved: m > 1,
            residual: None,
        })
        .collect();
    let total_count = eigenvalues.iter().map(|e| e.multiplicity).sum();
    Ok(Spectrum { eigenvalues, window, total_count, jitters: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_deltas_no_negative_spectrum() {
        let p = ShootingProblem::new(2.0, vec![], vec![]).unwrap();
        assert!(shoot_spectrum(&p, (-100.0, -1e-6)).unwrap().eigenvalues.is_empty());
    }

    #[test]
    fn centred_well() {
        let p = ShootingProblem::new(20.0, vec![10.0], vec![-2.0]).unwrap();
        let s = shoot_spectrum(&p, (-3.0, -0.01)).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        // κ = tanh(10κ) to within e^{-20}
        assert!((s.eigenvalues[0].energy + 1.0).abs() < 1e-7);
        let k = (-s.eigenvalues[0].energy).sqrt();
        assert!((k - (10.0 * k).tanh()).abs() < 1e-13);
    }

    #[test]
    fn two_centres() {
        let p = ShootingProblem::new(40.0, vec![19.5, 20.5], vec![-2.0, -2.0]).unwrap();
        let s = shoot_spectrum(&p, (-3.0, -0.01)).unwrap();
        assert_eq!(s.eigenvalues.len(), 1);
        assert!((s.eigenvalues[0].energy + 1.6345).abs() < 1e-4);
    }

    #[test]
    fn validation() {
        assert!(ShootingProblem::new(2.0, vec![0.0], vec![-1.0]).is_err());
        assert!(ShootingProblem::new(2.0, vec![1.0, 0.5], vec![-1.0, -1.0]).is_err());
        let p = ShootingProblem::new(2.0, vec![], vec![]).unwrap();
        assert!(shoot_spectrum(&p, (-1.0, 0.0)).is_err());
    }
}
