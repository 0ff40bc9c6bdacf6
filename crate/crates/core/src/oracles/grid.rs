//! Finite-difference reference for the Dirichlet interval.
//!
//! `-u''` is discretised by the three-point stencil on a uniform mesh and
//! each delta becomes the on-site weight `ω/h` at its nearest node.

use serde::{Deserialize, Serialize};

use super::isolate;
use super::shooting::ShootingProblem;
use crate::error::{Error, Result};

/// Extrapolated grid eigenvalues with error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpectrum {
    pub h: f64,
    /// `(4 E_{h/2} - E_h) / 3`.
    pub energies: Vec<f64>,
    /// `|E_{h/2} - E_h| / 3`.
    pub errors: Vec<f64>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Largest distance from a delta to the node carrying it, over `h`.
    pub max_snap: f64,
}

struct Mesh {
    h: f64,
    diag: Vec<f64>,
    off: f64,
    snap: f64,
}

impl Mesh {
    fn new(p: &ShootingProblem, h: f64) -> Result<Self> {
        let n = (p.length() / h).round() as usize;
        if n < 2 {
            return Err(Error::InvalidArgument(format!("mesh {h} too coarse for L = {}", p.length())));
        }
        let h = p.length() / n as f64;
        let mut diag = vec![2.0 / (h * h); n - 1];
        let mut snap: f64 = 0.0;
        for (&x, &w) in p.positions().iter().zip(p.strengths()) {
            let i = ((x / h).round() as usize).clamp(1, n - 1);
            snap = snap.max((x / h - i as f64).abs());
            diag[i - 1] += w / h;
        }
        Ok(Mesh { h, diag, off: -1.0 / (h * h), snap })
    }

    /// Negative pivots of `T - E`.
    fn count_below(&self, e: f64) -> usize {
        let mut neg = 0;
        let mut d = 1.0;
        for (i, &a) in self.diag.iter().enumerate() {
            d = a - e - if i == 0 { 0.0 } else { self.off * self.off / d };
            if d == 0.0 {
                d = f64::MIN_POSITIVE;
            }
            if d < 0.0 {
                neg += 1;
            }
        }
        neg
    }

    fn eigenvalues(&self, window: (f64, f64)) -> Result<Vec<f64>> {
        let count = |e: f64| Ok(self.count_below(e));
        let brackets = isolate(&count, window.0, window.1, 0.0)?;
        Ok(brackets
            .into_iter()
            .flat_map(|(mut a, mut b, m)| {
                let base = self.count_below(a);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if self.count_below(mid) > base {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                std::iter::repeat(0.5 * (a + b)).take(m)
            })
            .collect())
    }
}

/// Grid eigenvalues in `window` at meshes `h` and `h/2`, extrapolated.
/// Fails when the two meshes see different counts or an error bar exceeds
/// `tol` (relative to `max(1, |E|)`).
pub fn grid_oracle_1d(problem: &ShootingProblem, h: f64, window: (f64, f64), tol: f64) -> Result<GridSpectrum> {
    if !(window.0 < window.1 && window.1 < 0.0) {
        return Err(Error::InvalidArgument(format!("window must satisfy E_lo < E_hi < 0, got {window:?}")));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh must be positive, got {h}")));
    }
    let m1 = Mesh::new(problem, h)?;
    let m2 = Mesh::new(problem, h / 2.0)?;
    let coarse = m1.eigenvalues(window)?;
    let fine = m2.eigenvalues(window)?;
    if coarse.len() != fine.len() {
        return Err(Error::NonConvergence(format!(
            "{} eigenvalues at h = {}, {} at h/2",
            coarse.len(),
            m1.h,
            fine.len()
        )));
    }
    let energies: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let errors: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (f - c).abs() / 3.0).collect();
    if let Some((e, err)) = energies.iter().zip(&errors).find(|(e, err)| **err > tol * e.abs().max(1.0)) {
        return Err(Error::NonConvergence(format!("eigenvalue {e} has extrapolation error {err:e} > {tol:e}")));
    }
    Ok(GridSpectrum { h: m1.h, energies, errors, coarse, fine, max_snap: m1.snap.max(m2.snap) })
}
