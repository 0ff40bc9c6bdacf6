//! Checks for rank-one perturbations `A -> A + φφ^T` of symmetric matrices.

use faer::{Mat, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disorder::{CouplingField, DistributionSpec, StreamKey};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::spectra::{CountingFunction, SolverConfig};

/// A symmetric `A`, a unit vector `φ` and an interval `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePair {
    a: Mat<f64>,
    phi: Vec<f64>,
    interval: (f64, f64),
}

impl RankOnePair {
    /// `a` is read row-major. Interval endpoints within `1e-9` of an
    /// eigenvalue of `A` or `A + φφ^T` are moved off it.
    pub fn new(n: usize, a: &[f64], phi: Vec<f64>, interval: (f64, f64)) -> Result<Self> {
        if a.len() != n * n || phi.len() != n || n == 0 {
            return Err(Error::InvalidArgument(format!("need an {n}x{n} matrix and a length-{n} vector")));
        }
        let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
        let asym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (m[(i, j)] - m[(j, i)]).abs()).fold(0.0, f64::max);
        if asym > 1e-12 {
            return Err(Error::InvalidArgument(format!("A is not symmetric (max |A - A^T| = {asym:e})")));
        }
        let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidArgument(format!("|phi| = {norm}, expected 1")));
        }
        if !(interval.0 < interval.1) {
            return Err(Error::InvalidArgument(format!("empty interval {interval:?}")));
        }
        let mut pair = RankOnePair { a: m, phi, interval };
        let mut eigs = eigen(&pair.a).0;
        eigs.extend(eigen(&pair.perturbed()).0);
        let scale = eigs.iter().fold(1.0_f64, |s, e| s.max(e.abs()));
        for end in [&mut pair.interval.0, &mut pair.interval.1] {
            while eigs.iter().any(|e| (e - *end).abs() < 1e-9 * scale) {
                *end += 1e-7 * scale;
            }
        }
        Ok(pair)
    }

    /// Random symmetric `A` with entries uniform in `[-1, 1]`, uniform `φ` on
    /// the sphere (normalized Gaussian), and a random interval in `[-3, 3]`.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let mut phi: Vec<f64> = (0..n)
            .map(|_| {
                // Box-Muller
                let u: f64 = 1.0 - rng.random::<f64>();
                let v: f64 = rng.random();
                (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
            })
            .collect();
        let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        phi.iter_mut().for_each(|v| *v /= norm);
        let mut ends = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        ends.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        if ends[1] - ends[0] < 1e-3 {
            ends[1] = ends[0] + 1e-3;
        }
        Self::new(n, &a, phi, (ends[0], ends[1]))
    }

    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    /// `A + φφ^T`.
    pub fn perturbed(&self) -> Mat<f64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.a[(i, j)] + self.phi[i] * self.phi[j])
    }
}

/// Ascending eigenvalues and the squared overlaps `<v_k, ·>²` are computed
/// from this decomposition.
fn eigen(m: &Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    let evd = m.self_adjoint_eigen(Side::Lower).expect("symmetric eigendecomposition");
    let n = m.nrows();
    let vals = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    (vals, evd.U().to_owned())
}

/// `F(x) = <φ, (M - x)^{-1} φ>` from an eigendecomposition.
fn herglotz(vals: &[f64], weights: &[f64], x: f64) -> f64 {
    vals.iter().zip(weights).map(|(l, w)| w / (l - x)).sum()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankOneReport {
    pub count_a: usize,
    pub count_b: usize,
    /// `|N_A(I) - N_{A+B}(I)| <= 1` failed.
    pub count_violation: bool,
    /// `N_A(I) >= 1` but `N_{A+B}(I) < N_A(I) - 1`.
    pub lower_violation: bool,
    /// Largest `|F_{A+B} - F_A/(1+F_A)| / max(1, |F_{A+B}|)` on grid points
    /// at least `1e-4 max|λ|` from both spectra. Closer in, `1 + F_A` loses
    /// digits to cancellation and the comparison measures rounding only.
    pub formula_error: f64,
    /// Grid intervals between poles on which `F_A` failed to increase.
    pub monotonicity_violations: usize,
    /// Pairs breaking `λ_k <= μ_k <= λ_{k+1}`.
    pub interlacing_violations: usize,
    /// `φ` has nonzero weight on every eigenvector of a simple spectrum.
    pub cyclic: bool,
}

impl RankOneReport {
    pub fn violations(&self) -> usize {
        usize::from(self.count_violation) + usize::from(self.lower_violation) + self.monotonicity_violations + self.interlacing_violations
    }
}

/// Runs every check on one pair with a grid of `grid` points.
pub fn rank_one_verify(pair: &RankOnePair, grid: usize) -> RankOneReport {
    let n = pair.dim();
    let (la, va) = eigen(&pair.a);
    let (lb, vb) = eigen(&pair.perturbed());
    let overlaps = |v: &Mat<f64>| -> Vec<f64> {
        (0..n).map(|k| (0..n).map(|i| v[(i, k)] * pair.phi[i]).sum::<f64>().powi(2)).collect()
    };
    let wa = overlaps(&va);
    let wb = overlaps(&vb);
    let (a, b) = pair.interval;
    let count = |v: &[f64]| v.iter().filter(|&&e| e >= a && e <= b).count();
    let (count_a, count_b) = (count(&la), count(&lb));
    let scale = la.iter().chain(&lb).fold(1.0_f64, |s, e| s.max(e.abs()));
    let tiny = 1e-12 * scale;

    let mut interlacing_violations = 0;
    for k in 0..n {
        if lb[k] < la[k] - tiny || (k + 1 < n && lb[k] > la[k + 1] + tiny) {
            interlacing_violations += 1;
        }
    }
    let simple = la.windows(2).all(|w| w[1] - w[0] > 1e-8 * scale);
    let cyclic = simple && wa.iter().all(|&w| w > 1e-16);

    let lo = la[0].min(lb[0]) - 1.0;
    let hi = la[n - 1].max(lb[n - 1]) + 1.0;
    let grid = grid.max(2);
    let mut formula_error: f64 = 0.0;
    let mut monotonicity_violations = 0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..grid {
        let x = lo + (hi - lo) * (i as f64 + 0.5) / grid as f64;
        if la.iter().chain(&lb).any(|e| (e - x).abs() < 1e-4 * scale) {
            prev = None;
            continue;
        }
        let fa = herglotz(&la, &wa, x);
        let fb = herglotz(&lb, &wb, x);
        let rhs = fa / (1.0 + fa);
        formula_error = formula_error.max((fb - rhs).abs() / fb.abs().max(1.0));
        if let Some((px, pf)) = prev {
            let pole_between = la.iter().any(|&e| e > px && e < x);
            if !pole_between && fa <= pf {
                monotonicity_violations += 1;
            }
        }
        prev = Some((x, fa));
    }

    RankOneReport {
        count_a,
        count_b,
        count_violation: count_a.abs_diff(count_b) > 1,
        lower_violation: count_a >= 1 && count_b + 1 < count_a,
        formula_error,
        monotonicity_violations,
        interlacing_violations,
        cyclic,
    }
}

/// Eigenvalue counts in `[lo, hi)` before and after redrawing the coupling
/// at `site` with generation `key.generation + 1` of its stream.
pub fn resample_count_change(
    domain: &DomainSpec,
    omega: &CouplingField,
    site: usize,
    key: StreamKey,
    dist: Option<&DistributionSpec>,
    interval: (f64, f64),
    cfg: SolverConfig,
) -> Result<(usize, usize)> {
    let tau = omega.resample_one(site, key.next_generation(), dist)?;
    let count = |w: &CouplingField| -> Result<usize> {
        let cf = CountingFunction::new(domain, w, cfg)?;
        Ok(cf.count(interval.1)?.count - cf.count(interval.0)?.count)
    };
    Ok((count(omega)?, count(&tau)?))
}
