//! Whole-space bound states of one or two equal centres.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Single,
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterState {
    pub parity: Parity,
    pub kappa: f64,
    pub energy: f64,
}

/// `K_0(x) = ∫_0^∞ e^{-x cosh t} dt` by the trapezoidal rule, which converges
/// geometrically for this integrand.
fn k0_quadrature(x: f64) -> f64 {
    let top = (760.0 / x).max(1.0).acosh() + 1.0;
    let n = 4000;
    let h = top / n as f64;
    let mut acc = 0.5 * (-x).exp();
    for i in 1..=n {
        acc += (-x * (i as f64 * h).cosh()).exp();
    }
    acc * h
}

/// Diagonal term of the two-centre condition at `κ`.
fn sigma(dim: Dimension, omega: f64, k: f64) -> f64 {
    match dim {
        Dimension::One => -1.0 / omega - 1.0 / (2.0 * k),
        Dimension::Two => -1.0 / omega + k.ln() / (2.0 * PI),
        Dimension::Three => 1.0 / omega + k / (4.0 * PI),
    }
}

/// Free Green's function at distance `r`, `E = -κ²`.
fn g(dim: Dimension, r: f64, k: f64) -> f64 {
    match dim {
        Dimension::One => (-k * r).exp() / (2.0 * k),
        Dimension::Two => k0_quadrature(k * r) / (2.0 * PI),
        Dimension::Three => (-k * r).exp() / (4.0 * PI * r),
    }
}

/// Root in `κ` of an increasing function, or `None` if it stays of one sign.
fn increasing_root(f: impl Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (1e-12, 1.0);
    if f(lo) >= 0.0 {
        return None;
    }
    while f(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return None;
        }
    }
    for _ in 0..300 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if f(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Bound states of one centre (`omegas.len() == 1`) or two equal centres at
/// distance `r`. Two-centre states solve `σ(κ) = ±g(r; κ)`; a missing
/// antisymmetric state is simply absent from the list.
pub fn closed_form_centers(dim: Dimension, omegas: &[f64], r: f64) -> Result<Vec<CenterState>> {
    if omegas.iter().any(|&w| !(w < 0.0)) {
        return Err(Error::InvalidArgument("couplings must be negative".into()));
    }
    let state = |parity, kappa: f64| CenterState { parity, kappa, energy: -kappa * kappa };
    match omegas {
        [w] => {
            let kappa = match dim {
                Dimension::One => -w / 2.0,
                Dimension::Two => (2.0 * PI / w).exp(),
                Dimension::Three => -4.0 * PI / w,
            };
            Ok(vec![state(Parity::Single, kappa)])
        }
        [w1, w2] => {
            if w1 != w2 {
                return Err(Error::InvalidArgument("two-centre forms need equal couplings".into()));
            }
            if !(r > 0.0) {
                return Err(Error::InvalidArgument(format!("separation must be positive, got {r}")));
            }
            let w = *w1;
            let mut out = Vec::new();
            if let Some(k) = increasing_root(|k| sigma(dim, w, k) - g(dim, r, k)) {
                out.push(state(Parity::Symmetric, k));
            }
            if let Some(k) = increasing_root(|k| sigma(dim, w, k) + g(dim, r, k)) {
                out.push(state(Parity::Antisymmetric, k));
            }
            out.sort_by(|a, b| a.energy.partial_cmp(&b.energy).expect("finite"));
            Ok(out)
        }
        _ => Err(Error::InvalidArgument(format!("one or two centres, got {}", omegas.len()))),
    }
}
