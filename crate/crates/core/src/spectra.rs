//! Negative eigenvalues from the characteristic matrix.
//!
//! `K(E)` is real symmetric for `E < 0` and strictly decreasing in the
//! Loewner order (`dK/dE` is minus a Gram matrix), so each eigenvalue branch
//! of `K(E)` is decreasing and crosses zero exactly where `H` has an
//! eigenvalue. The number of eigenvalues of `H` below `E` is therefore the
//! number of negative eigenvalues of `K(E)` minus the same number at a deep
//! probe energy, read off from the inertia of an `LBL^T` factorization.

use faer::Side;
use serde::{Deserialize, Serialize};

use crate::disorder::CouplingField;
use crate::domain::{BoundaryCondition, DomainSpec};
use crate::error::{Error, Result};
use crate::greens::Dimension;
use crate::kmatrix::{assemble_real, CharacteristicMatrix};

/// Direction in which the eigenvalue branches of `K(E)` move as `E` grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Eigenvalues of `H` are where branches cross from positive to negative.
    Decreasing,
    /// Eigenvalues of `H` are where branches cross from negative to positive.
    Increasing,
}

impl Orientation {
    /// With `K = 1/α - e_d + c - G^X` every dimension is decreasing.
    pub fn for_dimension(_dim: Dimension) -> Self {
        Orientation::Decreasing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute width at which root brackets stop shrinking.
    pub tol: f64,
    /// Accuracy of the Green's function image sums.
    pub green_tol: f64,
    /// Compute `min |eig K(E_j)|` for every root.
    pub residuals: bool,
    pub orientation: Option<Orientation>,
    pub method: CountingMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-11,
            green_tol: 1e-13,
            residuals: false,
            orientation: None,
            method: CountingMethod::Dense,
        }
    }
}

/// How the inertia of `K(E)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountingMethod {
    /// Assemble `K(E)` and factor it.
    #[default]
    Dense,
    /// d = 1 without periodic walls: `K = diag(1/α) - G` with `G^{-1} = T`
    /// tridiagonal, and Haynsworth inertia additivity gives
    /// `neg K = #{ω_j > 0} + neg(T + diag ω)`, a Sturm count in `O(N)`.
    Tridiagonal,
    /// `Tridiagonal` where it applies, `Dense` otherwise.
    Auto,
}

/// Inertia and determinant of a real symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertia {
    pub negative: usize,
    pub positive: usize,
    /// Pivots below `1e-12 max|K|`.
    pub near_zero: usize,
    pub log_abs_det: f64,
    pub det_sign: f64,
}

/// Inertia via Bunch-Kaufman: `K = P^T L B L^T P` with `B` block diagonal.
pub fn inertia(k: &CharacteristicMatrix<f64>) -> Inertia {
    let m = k.entries();
    let n = m.nrows();
    let mut out = Inertia { negative: 0, positive: 0, near_zero: 0, log_abs_det: 0.0, det_sign: 1.0 };
    if n == 0 {
        return out;
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].abs())
        .fold(0.0, f64::max);
    let threshold = 1e-12 * scale;
    let f = m.lblt(Side::Lower);
    let diag = f.B_diag().column_vector();
    let sub = f.B_subdiag().column_vector();
    let mut i = 0;
    while i < n {
        if i + 1 < n && sub[i] != 0.0 {
            let (a, b, c) = (diag[i], sub[i], diag[i + 1]);
            let det = a * c - b * b;
            let half_tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let (l1, l2) = (half_tr - disc, half_tr + disc);
            for l in [l1, l2] {
                if l.abs() < threshold {
                    out.near_zero += 1;
                }
                if l < 0.0 {
                    out.negative += 1;
                } else {
                    out.positive += 1;
                }
            }
            out.log_abs_det += det.abs().ln();
            out.det_sign *= det.signum();
            i += 2;
        } else {
            let d = diag[i];
            if d.abs() < threshold {
                out.near_zero += 1;
            }
            if d < 0.0 {
                out.negative += 1;
            } else {
                out.positive += 1;
            }
            out.log_abs_det += d.abs().ln();
            out.det_sign *= d.signum();
            i += 1;
        }
    }
    out
}

/// A count at one energy, with the energy actually probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountSample {
    pub count: usize,
    pub energy: f64,
    pub jittered: bool,
}

/// Counting function `N(E)` for one realization.
#[derive(Debug, Clone)]
pub struct CountingFunction<'a> {
    domain: &'a DomainSpec,
    omega: &'a CouplingField,
    cfg: SolverConfig,
    orientation: Orientation,
    baseline: usize,
    probe_energy: f64,
    chain: Option<Chain>,
}

impl<'a> CountingFunction<'a> {
    /// Locates a deep energy below which `K(E)` stays strictly diagonally
    /// dominant with every diagonal entry at its `E -> -∞` sign, so no branch
    /// crosses zero further down and the inertia there is the baseline.
    pub fn new(domain: &'a DomainSpec, omega: &'a CouplingField, cfg: SolverConfig) -> Result<Self> {
        let orientation = cfg.orientation.unwrap_or_else(|| Orientation::for_dimension(domain.dim()));
        let mut cf =
            CountingFunction { domain, omega, cfg, orientation, baseline: 0, probe_energy: f64::NAN, chain: None };
        if domain.num_sites() == 0 {
            return Ok(cf);
        }
        let chain_ok = domain.dim() == Dimension::One && domain.bc() != BoundaryCondition::Periodic;
        match cfg.method {
            CountingMethod::Tridiagonal if !chain_ok => {
                return Err(Error::InvalidArgument(
                    "tridiagonal counting needs d = 1 and a non-periodic boundary".into(),
                ));
            }
            CountingMethod::Tridiagonal | CountingMethod::Auto if chain_ok => {
                if omega.len() != domain.num_sites() {
                    return Err(Error::InvalidArgument(format!(
                        "{} couplings for {} lattice points",
                        omega.len(),
                        domain.num_sites()
                    )));
                }
                cf.orientation = Orientation::Decreasing;
                cf.chain = Some(Chain::new(domain, omega));
                return Ok(cf);
            }
            _ => {}
        }
        let limit_negative = asymptotic_negative_diagonal(domain.dim(), omega);
        let settled = |energy: f64| -> Result<Option<Inertia>> {
            let k = assemble_real(domain, omega, energy, cfg.green_tol)?;
            Ok(match dominant_diagonal(&k) {
                Some(signs) if signs == limit_negative => Some(inertia(&k)),
                _ => None,
            })
        };
        let mut energy = -1.0_f64;
        for _ in 0..60 {
            if let Some(i) = settled(energy)? {
                if settled(16.0 * energy)?.is_some() {
                    if i.negative != limit_negative.iter().filter(|&&s| s).count() {
                        return Err(Error::Orientation(format!(
                            "inertia at the deep probe E = {energy} disagrees with the diagonal"
                        )));
                    }
                    cf.baseline = cf.branches(&i);
                    cf.probe_energy = energy;
                    return Ok(cf);
                }
            }
            energy *= 4.0;
        }
        Err(Error::Orientation(format!(
            "K(E) never settled into diagonal dominance down to E = {energy}"
        )))
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
    pub fn probe_energy(&self) -> f64 {
        self.probe_energy
    }

    fn branches(&self, inertia: &Inertia) -> usize {
        match self.orientation {
            Orientation::Decreasing => inertia.negative,
            Orientation::Increasing => inertia.positive,
        }
    }

    fn count_from(&self, inertia: &Inertia, energy: f64) -> Result<usize> {
        let b = self.branches(inertia);
        if b < self.baseline {
            return Err(Error::Orientation(format!(
                "count fell below its deep-energy value ({b} < {}) at E = {energy}",
                self.baseline
            )));
        }
        Ok(b - self.baseline)
    }

    /// Inertia of `K(E)` (of `T + diag ω` on the chain path).
    fn evaluate(&self, energy: f64) -> Result<Inertia> {
        match &self.chain {
            Some(chain) => Ok(chain.inertia(energy)),
            None => Ok(inertia(&assemble_real(self.domain, self.omega, energy, self.cfg.green_tol)?)),
        }
    }

    /// `N(E)`: eigenvalues of `H` in `(-∞, E)`, counted with multiplicity.
    pub fn count(&self, energy: f64) -> Result<CountSample> {
        if !(energy < 0.0) {
            return Err(Error::InvalidArgument(format!("count_below needs E < 0, got {energy}")));
        }
        if self.domain.num_sites() == 0 {
            return Ok(CountSample { count: 0, energy, jittered: false });
        }
        let step = 10.0 * self.cfg.tol.max(1e-15 * energy.abs());
        for (e, jittered) in [(energy, false), (energy - step, true), (energy + step, true)] {
            if e >= 0.0 {
                continue;
            }
            let i = self.evaluate(e)?;
            if i.near_zero == 0 {
                return Ok(CountSample { count: self.count_from(&i, e)?, energy: e, jittered });
            }
        }
        Err(Error::Singular { sigma_min: 0.0, norm: energy.abs() })
    }

    /// Sign-carrying determinant rescaled by `ref_log`, continuous in `E`.
    fn scaled_det(&self, energy: f64, ref_log: f64) -> Result<(f64, usize)> {
        let i = self.evaluate(energy)?;
        let v = i.det_sign * (i.log_abs_det - ref_log).clamp(-700.0, 700.0).exp();
        let v = if i.log_abs_det == f64::NEG_INFINITY { 0.0 } else { v };
        Ok((v, self.branches(&i).saturating_sub(self.baseline)))
    }
}

/// Sites of a one-dimensional problem in increasing order, with the gaps
/// between them and to the walls.
#[derive(Debug, Clone)]
struct Chain {
    omega: Vec<f64>,
    /// `gaps[0]` to the left wall, `gaps[n]` to the right wall.
    gaps: Vec<f64>,
    wall: BoundaryCondition,
}

impl Chain {
    fn new(domain: &DomainSpec, omega: &CouplingField) -> Self {
        let mut sites: Vec<(f64, f64)> = domain
            .lattice()
            .iter()
            .zip(omega.values())
            .map(|(p, &w)| (p.0[0], w))
            .collect();
        sites.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite coordinates"));
        let lo = domain.origin().0[0];
        let hi = lo + domain.sides()[0];
        let n = sites.len();
        let mut gaps = Vec::with_capacity(n + 1);
        gaps.push(sites[0].0 - lo);
        gaps.extend(sites.windows(2).map(|w| w[1].0 - w[0].0));
        gaps.push(hi - sites[n - 1].0);
        Chain { omega: sites.iter().map(|s| s.1).collect(), gaps, wall: domain.bc() }
    }

    /// Dirichlet-to-Neumann value of the segment of length `h` next to a wall.
    fn wall_term(&self, kappa: f64, h: f64) -> f64 {
        match self.wall {
            BoundaryCondition::Dirichlet => kappa / (kappa * h).tanh(),
            BoundaryCondition::Neumann => kappa * (kappa * h).tanh(),
            _ => kappa,
        }
    }

    fn inertia(&self, energy: f64) -> Inertia {
        let kappa = (-energy).sqrt();
        let n = self.omega.len();
        let mut out = Inertia { negative: 0, positive: 0, near_zero: 0, log_abs_det: 0.0, det_sign: 1.0 };
        let mut prev_q = 0.0;
        let mut prev_b = 0.0;
        for i in 0..n {
            let left = if i == 0 { self.wall_term(kappa, self.gaps[0]) } else { kappa / (kappa * self.gaps[i]).tanh() };
            let right = if i + 1 == n {
                self.wall_term(kappa, self.gaps[n])
            } else {
                kappa / (kappa * self.gaps[i + 1]).tanh()
            };
            let a = left + right + self.omega[i];
            let q = if i == 0 { a } else { a - prev_b * prev_b / prev_q };
            let scale = left + right + self.omega[i].abs();
            if q.abs() <= 1e-13 * scale {
                out.near_zero += 1;
            }
            if q < 0.0 {
                out.negative += 1;
            } else {
                out.positive += 1;
            }
            out.log_abs_det += q.abs().ln();
            out.det_sign *= q.signum();
            prev_q = q;
            prev_b = if i + 1 < n { -kappa / (kappa * self.gaps[i + 1]).sinh() } else { 0.0 };
        }
        out
    }
}

/// Sign pattern (`true` = negative) of the diagonal of `K(E)` as `E -> -∞`:
/// `1/α_j` dominates in d = 1, the growing `-e_d` in d = 2, 3.
fn asymptotic_negative_diagonal(dim: Dimension, omega: &CouplingField) -> Vec<bool> {
    omega
        .values()
        .iter()
        .map(|&w| dim == Dimension::One && w > 0.0)
        .collect()
}

/// Diagonal sign pattern if every row is strictly dominant.
fn dominant_diagonal(k: &CharacteristicMatrix<f64>) -> Option<Vec<bool>> {
    let m = k.entries();
    let n = m.nrows();
    let mut negative = Vec::with_capacity(n);
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
        let d = m[(i, i)];
        if !(d.abs() > off) {
            return None;
        }
        negative.push(d < 0.0);
    }
    Some(negative)
}

/// Number of eigenvalues below `E`.
pub fn count_below(domain: &DomainSpec, omega: &CouplingField, energy: f64, tol: f64) -> Result<usize> {
    let cfg = SolverConfig { tol, ..SolverConfig::default() };
    Ok(CountingFunction::new(domain, omega, cfg)?.count(energy)?.count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub energy: f64,
    pub multiplicity: usize,
    /// The bracket shrank below `tol` with more than one root inside.
    pub unresolved: bool,
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<Eigenvalue>,
    pub window: (f64, f64),
    /// `N(E_hi) - N(E_lo)`.
    pub total_count: usize,
    /// Energies at which a singular `K` forced a shifted probe.
    pub jitters: Vec<f64>,
}

impl Spectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat(e.energy).take(e.multiplicity))
            .collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.eigenvalues.iter().map(|e| e.multiplicity).sum()
    }
}

/// All eigenvalues in `[E_lo, E_hi)` via count bisection and Illinois polish.
pub fn solve_spectrum(
    domain: &DomainSpec,
    omega: &CouplingField,
    window: (f64, f64),
    cfg: SolverConfig,
) -> Result<Spectrum> {
    let cf = CountingFunction::new(domain, omega, cfg)?;
    solve_with(&cf, window)
}

pub fn solve_with(cf: &CountingFunction<'_>, window: (f64, f64)) -> Result<Spectrum> {
    let (lo, hi) = window;
    let tol = cf.cfg.tol;
    if !(lo < hi && hi < 0.0) {
        return Err(Error::InvalidArgument(format!("window must satisfy E_lo < E_hi < 0, got {window:?}")));
    }
    let mut jitters = Vec::new();
    let probe = |e: f64, jitters: &mut Vec<f64>| -> Result<CountSample> {
        let s = cf.count(e)?;
        if s.jittered {
            jitters.push(e);
        }
        Ok(s)
    };
    let a = probe(lo, &mut jitters)?;
    let b = probe(hi, &mut jitters)?;
    if b.count < a.count {
        return Err(Error::Orientation(format!(
            "N({}) = {} exceeds N({}) = {}",
            a.energy, a.count, b.energy, b.count
        )));
    }
    let mut eigenvalues = Vec::new();
    let mut stack = vec![(a, b)];
    while let Some((a, b)) = stack.pop() {
        let jump = b.count - a.count;
        if jump == 0 {
            continue;
        }
        if jump == 1 {
            let energy = polish(cf, a.energy, b.energy, a.count)?;
            eigenvalues.push(Eigenvalue { energy, multiplicity: 1, unresolved: false, residual: None });
            continue;
        }
        if b.energy - a.energy <= tol {
            eigenvalues.push(Eigenvalue {
                energy: 0.5 * (a.energy + b.energy),
                multiplicity: jump,
                unresolved: true,
                residual: None,
            });
            continue;
        }
        let mid = probe(0.5 * (a.energy + b.energy), &mut jitters)?;
        if !(mid.energy > a.energy && mid.energy < b.energy) && b.energy - a.energy <= 100.0 * tol {
            // Singular at the midpoint and too narrow to step around it.
            eigenvalues.push(Eigenvalue {
                energy: 0.5 * (a.energy + b.energy),
                multiplicity: jump,
                unresolved: true,
                residual: None,
            });
            continue;
        }
        if mid.count < a.count || mid.count > b.count || !(mid.energy > a.energy && mid.energy < b.energy) {
            return Err(Error::Orientation(format!(
                "non-monotone count: N({}) = {}, N({}) = {}, N({}) = {}",
                a.energy, a.count, mid.energy, mid.count, b.energy, b.count
            )));
        }
        // Upper half first so that popping yields ascending order after the sort below.
        stack.push((mid, b));
        stack.push((a, mid));
    }
    eigenvalues.sort_by(|x, y| x.energy.partial_cmp(&y.energy).expect("finite roots"));
    if cf.cfg.residuals {
        for ev in &mut eigenvalues {
            let k = assemble_real(cf.domain, cf.omega, ev.energy, cf.cfg.green_tol)?;
            let eig = k.eigenvalues()?;
            ev.residual = eig.iter().map(|l| l.abs()).reduce(f64::min);
        }
    }
    Ok(Spectrum { eigenvalues, window, total_count: b.count - a.count, jitters })
}

/// Single root of `det K` in `(a, b)`, where `N` jumps from `count_a` to `count_a + 1`.
fn polish(cf: &CountingFunction<'_>, mut a: f64, mut b: f64, count_a: usize) -> Result<f64> {
    let tol = cf.cfg.tol;
    let ref_log = {
        let l = cf.evaluate(0.5 * (a + b))?.log_abs_det;
        if l.is_finite() { l } else { 0.0 }
    };
    let (mut fa, _) = cf.scaled_det(a, ref_log)?;
    let (mut fb, _) = cf.scaled_det(b, ref_log)?;
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let secant = if fa != fb && fa.is_finite() && fb.is_finite() {
            (a * fb - b * fa) / (fb - fa)
        } else {
            f64::NAN
        };
        let width = b - a;
        let x = if secant.is_finite() && secant > a + 0.01 * tol && secant < b - 0.01 * tol {
            secant
        } else {
            0.5 * (a + b)
        };
        let (fx, cx) = cf.scaled_det(x, ref_log)?;
        if fx == 0.0 {
            return Ok(x);
        }
        // The count, not the sign of det, decides the side: it is exact even
        // when det underflows.
        if cx > count_a {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        // Illinois can stall on one side; force a bisection when the bracket barely moved.
        if b - a > 0.5 * width {
            let m = 0.5 * (a + b);
            let (fm, cm) = cf.scaled_det(m, ref_log)?;
            if cm > count_a {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            side = 0;
        }
    }
    Ok(0.5 * (a + b))
}

/// Result of comparing sorted eigenvalues of `K(E)` along an energy grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Largest step against the expected direction (0 if none).
    pub max_violation: f64,
    pub monotone: bool,
    /// Sorted eigenvalues at each grid point.
    pub branches: Vec<Vec<f64>>,
}

/// Checks that every sorted eigenvalue of `K(E)` moves in `direction` along
/// the sorted grid. Sorting is a valid branch matching here: a Loewner-
/// monotone family moves all ordered eigenvalues the same way.
pub fn branch_monotonicity_check(
    domain: &DomainSpec,
    omega: &CouplingField,
    grid: &[f64],
    direction: Orientation,
    green_tol: f64,
) -> Result<MonotonicityReport> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|&e| !(e < 0.0)) {
        return Err(Error::InvalidArgument("energy grid must be increasing and negative".into()));
    }
    let branches = grid
        .iter()
        .map(|&e| assemble_real(domain, omega, e, green_tol)?.eigenvalues())
        .collect::<Result<Vec<_>>>()?;
    let mut max_violation: f64 = 0.0;
    for w in branches.windows(2) {
        for (x, y) in w[0].iter().zip(&w[1]) {
            let step = y - x;
            let against = match direction {
                Orientation::Decreasing => step,
                Orientation::Increasing => -step,
            };
            let slack = 1e-12 * x.abs().max(y.abs()).max(1.0);
            if against > slack {
                max_violation = max_violation.max(against);
            }
        }
    }
    Ok(MonotonicityReport { max_violation, monotone: max_violation == 0.0, branches })
}
