//! Rescaled eigenvalue point processes.

use serde::{Deserialize, Serialize};

use crate::disorder::CouplingField;
use crate::domain::{BoundaryCondition, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::spectra::{solve_with, CountingFunction, SolverConfig, Spectrum};

use super::fit::Estimate;

/// Rescaling `x = |Λ| (E - E_0)` together with the observed window.
///
/// Points are recorded on `[-w, w]`. The optional extension `(w, w + ext]`
/// holds the points just above the window, used only to close the last gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LesWindow {
    pub e0: f64,
    pub volume: f64,
    pub halfwidth: f64,
    pub extension: f64,
}

impl LesWindow {
    pub fn new(e0: f64, volume: f64, halfwidth: f64) -> Result<Self> {
        Self::extended(e0, volume, halfwidth, 0.0)
    }

    pub fn extended(e0: f64, volume: f64, halfwidth: f64, extension: f64) -> Result<Self> {
        if !(volume > 0.0 && halfwidth > 0.0 && extension >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "window needs |Λ| > 0, w > 0, ext >= 0; got {volume}, {halfwidth}, {extension}"
            )));
        }
        let win = LesWindow { e0, volume, halfwidth, extension };
        if !(win.physical().1 < 0.0) {
            return Err(Error::Window(format!("physical window {:?} reaches E >= 0", win.physical())));
        }
        Ok(win)
    }

    /// `[E_0 - w/|Λ|, E_0 + (w + ext)/|Λ|]`.
    pub fn physical(&self) -> (f64, f64) {
        (self.e0 - self.halfwidth / self.volume, self.e0 + (self.halfwidth + self.extension) / self.volume)
    }

    pub fn rescale(&self, energy: f64) -> f64 {
        self.volume * (energy - self.e0)
    }

    pub fn unscale(&self, x: f64) -> f64 {
        self.e0 + x / self.volume
    }
}

/// One realization of the rescaled process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub realization: u64,
    /// Sorted points in `[-w, w]`, repeated by multiplicity.
    pub points: Vec<f64>,
    /// Sorted points in `(w, w + ext]`.
    pub beyond: Vec<f64>,
    pub halfwidth: f64,
    pub extension: f64,
    pub e0: f64,
    pub volume: f64,
}

impl PointSample {
    /// Sample from already rescaled points in `[-w, w + ext]`.
    pub fn from_points(realization: u64, mut pts: Vec<f64>, halfwidth: f64, extension: f64, e0: f64, volume: f64) -> Result<Self> {
        if pts.iter().any(|x| !x.is_finite() || *x < -halfwidth || *x > halfwidth + extension) {
            return Err(Error::Window(format!("points outside [-{halfwidth}, {}]", halfwidth + extension)));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite points"));
        let split = pts.partition_point(|&x| x <= halfwidth);
        let beyond = pts.split_off(split);
        Ok(PointSample { realization, points: pts, beyond, halfwidth, extension, e0, volume })
    }

    pub fn window(&self) -> LesWindow {
        LesWindow { e0: self.e0, volume: self.volume, halfwidth: self.halfwidth, extension: self.extension }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in `[a, b)`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.points.partition_point(|&x| x < b) - self.points.partition_point(|&x| x < a)
    }

    /// Distance from each window point to the next point of the sample
    /// (possibly in the extension), and the number of window points with no
    /// observed successor.
    pub fn successor_gaps(&self) -> (Vec<f64>, usize) {
        let all: Vec<f64> = self.points.iter().chain(&self.beyond).copied().collect();
        let gaps: Vec<f64> = (0..self.points.len()).filter_map(|i| all.get(i + 1).map(|n| n - all[i])).collect();
        let censored = self.points.len() - gaps.len();
        (gaps, censored)
    }

    /// Eigenvalues recovered from the window points.
    pub fn physical(&self) -> Vec<f64> {
        self.points.iter().map(|&x| self.e0 + x / self.volume).collect()
    }
}

/// Rescales a spectrum solved on exactly `window.physical()`.
pub fn build_les(realization: u64, spectrum: &Spectrum, window: &LesWindow) -> Result<PointSample> {
    let (lo, hi) = window.physical();
    let slack = 1e-12 * lo.abs().max(1.0);
    if (spectrum.window.0 - lo).abs() > slack || (spectrum.window.1 - hi).abs() > slack {
        return Err(Error::Window(format!(
            "spectrum solved on {:?}, rescaling expects {:?}",
            spectrum.window,
            (lo, hi)
        )));
    }
    let top = window.halfwidth + window.extension;
    let pts = spectrum
        .energies()
        .into_iter()
        .map(|e| window.rescale(e).clamp(-window.halfwidth, top))
        .collect();
    PointSample::from_points(realization, pts, window.halfwidth, window.extension, window.e0, window.volume)
}

/// Solves `H` on `window.physical()` and rescales.
pub fn les_sample(
    realization: u64,
    domain: &DomainSpec,
    omega: &CouplingField,
    window: &LesWindow,
    cfg: SolverConfig,
) -> Result<PointSample> {
    let cf = CountingFunction::new(domain, omega, cfg)?;
    let spectrum = solve_with(&cf, window.physical())?;
    build_les(realization, &spectrum, window)
}

/// How the subcube side is chosen from `L^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tiling {
    /// `round(L / L^α)` blocks per axis with integer sides differing by at
    /// most one, so the block count follows `L^(1-α)` closely.
    #[default]
    Balanced,
    /// Equal sides `ℓ`, the largest divisor of `L` not exceeding `⌈L^α⌉`.
    Divisor,
}

/// One subcube with the indices of its sites in the parent lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub domain: DomainSpec,
    pub sites: Vec<usize>,
}

/// Tiling of a cube `Λ_L` into Dirichlet subcubes `Λ_ℓ^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcubeArray {
    pub alpha: f64,
    pub tiling: Tiling,
    /// Block sides along one axis (the same on every axis).
    pub sides: Vec<f64>,
    pub blocks: Vec<Block>,
    parent_volume: f64,
    parent_sites: usize,
}

impl SubcubeArray {
    pub fn new(domain: &DomainSpec, alpha: f64, tiling: Tiling) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let d = domain.dim().get();
        let all = domain.sides();
        let side = all[0];
        if all[..d].iter().any(|&s| s != side) {
            return Err(Error::Domain { op: "SubcubeArray", detail: "the domain must be a cube".into() });
        }
        let whole = side.floor();
        let frac = side - whole;
        let target = side.powf(alpha);
        let sides: Vec<f64> = match tiling {
            Tiling::Balanced => {
                let n = ((side / target).round() as usize).clamp(1, whole.max(1.0) as usize);
                let base = (whole as usize) / n;
                let extra = (whole as usize) % n;
                (0..n).map(|i| (base + usize::from(i < extra)) as f64).collect()
            }
            Tiling::Divisor => {
                if frac != 0.0 {
                    return Err(Error::Domain { op: "SubcubeArray", detail: format!("divisor tiling needs integer L, got {side}") });
                }
                let cap = target.ceil() as usize;
                let l = (1..=cap.min(whole as usize)).rev().find(|k| (whole as usize) % k == 0).unwrap_or(1);
                vec![l as f64; whole as usize / l]
            }
        };
        let mut sides = sides;
        if let Some(last) = sides.last_mut() {
            *last += frac;
        }
        let mut cuts = vec![0.0];
        for s in &sides {
            cuts.push(cuts.last().unwrap() + s);
        }
        let nb = sides.len();
        let origin = domain.origin();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); nb.pow(d as u32)];
        for (idx, p) in domain.lattice().iter().enumerate() {
            let mut flat = 0;
            for a in (0..d).rev() {
                let c = p.0[a] - origin.0[a];
                let k = cuts[1..].partition_point(|&cut| cut <= c).min(nb - 1);
                if c == cuts[k] && k > 0 {
                    return Err(Error::Domain {
                        op: "SubcubeArray",
                        detail: format!("lattice point {:?} lies on a block face", &p.0[..d]),
                    });
                }
                flat = flat * nb + k;
            }
            members[flat].push(idx);
        }
        let mut blocks = Vec::with_capacity(members.len());
        for (flat, sites) in members.into_iter().enumerate() {
            let mut o = [0.0; 3];
            let mut s = [0.0; 3];
            let mut rest = flat;
            for a in 0..d {
                let k = rest % nb;
                rest /= nb;
                o[a] = origin.0[a] + cuts[k];
                s[a] = sides[k];
            }
            let pts: Vec<Point> = sites.iter().map(|&i| domain.lattice()[i]).collect();
            let block = DomainSpec::boxed(domain.dim(), Point(o), s, BoundaryCondition::Dirichlet, pts)
                .map_err(|e| Error::Domain { op: "SubcubeArray", detail: e.to_string() })?;
            blocks.push(Block { domain: block, sites });
        }
        Ok(SubcubeArray {
            alpha,
            tiling,
            sides,
            blocks,
            parent_volume: domain.volume(),
            parent_sites: domain.num_sites(),
        })
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Largest block side.
    pub fn ell(&self) -> f64 {
        self.sides.iter().copied().fold(0.0, f64::max)
    }

    /// Couplings of block `p`.
    pub fn restrict(&self, p: usize, omega: &CouplingField) -> Result<CouplingField> {
        self.check(omega)?;
        CouplingField::fixed(self.blocks[p].sites.iter().map(|&i| omega.values()[i]).collect())
    }

    fn check(&self, omega: &CouplingField) -> Result<()> {
        if omega.len() != self.parent_sites {
            return Err(Error::InvalidArgument(format!(
                "{} couplings for a tiling of {} sites",
                omega.len(),
                self.parent_sites
            )));
        }
        Ok(())
    }
}

/// The union over blocks of the block spectra, each rescaled with the parent
/// volume `|Λ_L|`.
pub fn build_zeta(
    realization: u64,
    omega: &CouplingField,
    array: &SubcubeArray,
    window: &LesWindow,
    cfg: SolverConfig,
) -> Result<PointSample> {
    if (window.volume - array.parent_volume).abs() > 1e-12 * array.parent_volume {
        return Err(Error::Window(format!(
            "zeta rescales by |Λ_L| = {}, window uses {}",
            array.parent_volume, window.volume
        )));
    }
    let mut pts = Vec::new();
    for p in 0..array.len() {
        let w = array.restrict(p, omega)?;
        let s = les_sample(realization, &array.blocks[p].domain, &w, window, cfg)?;
        pts.extend(s.points);
        pts.extend(s.beyond);
    }
    PointSample::from_points(realization, pts, window.halfwidth, window.extension, window.e0, window.volume)
}

/// Eigenvalue count of each block in the physical interval `[lo, hi)`.
pub fn block_counts(omega: &CouplingField, array: &SubcubeArray, interval: (f64, f64), cfg: SolverConfig) -> Result<Vec<usize>> {
    (0..array.len())
        .map(|p| {
            let w = array.restrict(p, omega)?;
            let cf = CountingFunction::new(&array.blocks[p].domain, &w, cfg)?;
            Ok(cf.count(interval.1)?.count - cf.count(interval.0)?.count)
        })
        .collect()
}

/// `f(x) = Σ a_i τ_i / ((x - σ_i)² + τ_i²)` with `a_i, τ_i > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    terms: Vec<(f64, f64, f64)>,
}

impl TestFunction {
    pub fn new(terms: Vec<(f64, f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("a test function needs at least one term".into()));
        }
        if let Some(t) = terms.iter().find(|(a, s, t)| !(*a > 0.0 && *t > 0.0 && a.is_finite() && t.is_finite() && s.is_finite())) {
            return Err(Error::InvalidArgument(format!("term {t:?} needs a > 0, tau > 0")));
        }
        Ok(TestFunction { terms })
    }

    pub fn single(a: f64, sigma: f64, tau: f64) -> Result<Self> {
        Self::new(vec![(a, sigma, tau)])
    }

    pub fn terms(&self) -> &[(f64, f64, f64)] {
        &self.terms
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(a, s, t)| a * t / ((x - s).powi(2) + t * t)).sum()
    }

    /// `ξ[f]` over the window points.
    pub fn pair(&self, sample: &PointSample) -> f64 {
        sample.points.iter().map(|&x| self.eval(x)).sum()
    }

    /// `∫ (1 - e^{-f})` over `[-w, w]`, or the whole line when `halfwidth` is `None`.
    pub fn poisson_exponent(&self, halfwidth: Option<f64>) -> f64 {
        // x = c + s tan θ maps the line onto a bounded interval on which the
        // integrand stays smooth, including at θ = ±π/2.
        let n = self.terms.len() as f64;
        let c = self.terms.iter().map(|t| t.1).sum::<f64>() / n;
        let s = self.terms.iter().map(|t| t.2).sum::<f64>() / n;
        let tail = self.terms.iter().map(|&(a, _, t)| a * t).sum::<f64>() / s;
        let g = |theta: f64| {
            let half = std::f64::consts::FRAC_PI_2;
            if half - theta.abs() < 1e-12 {
                return tail;
            }
            let x = c + s * theta.tan();
            let sec2 = 1.0 + theta.tan().powi(2);
            -(-self.eval(x)).exp_m1() * s * sec2
        };
        let (t0, t1) = match halfwidth {
            Some(w) => (((-w - c) / s).atan(), ((w - c) / s).atan()),
            None => (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        };
        simpson(g, t0, t1, 20_000)
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Monte Carlo `E e^{-ξ[f]}`.
pub fn laplace_functional(samples: &[PointSample], f: &TestFunction) -> Result<Estimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    Ok(Estimate::from_samples(samples.iter().map(|s| (-f.pair(s)).exp())))
}

/// Laplace functional `exp(-λ ∫ (1 - e^{-f}))` of a Poisson process of
/// intensity `λ`, restricted to `[-w, w]` when `halfwidth` is given.
pub fn poisson_laplace(f: &TestFunction, intensity: f64, halfwidth: Option<f64>) -> f64 {
    (-intensity * f.poisson_exponent(halfwidth)).exp()
}

/// Paired differences `e^{-ξ[f]} - e^{-ζ[f]}` over common realizations.
pub fn xi_zeta_gap(xi: &[PointSample], zeta: &[PointSample], f: &TestFunction) -> Result<Estimate> {
    if xi.len() != zeta.len() || xi.is_empty() {
        return Err(Error::Pairing(format!("{} xi samples against {} zeta samples", xi.len(), zeta.len())));
    }
    for (a, b) in xi.iter().zip(zeta) {
        if a.realization != b.realization || a.halfwidth != b.halfwidth || a.e0 != b.e0 || a.volume != b.volume {
            return Err(Error::Pairing(format!(
                "realization {} (w = {}) paired with {} (w = {})",
                a.realization, a.halfwidth, b.realization, b.halfwidth
            )));
        }
    }
    Ok(Estimate::from_samples(xi.iter().zip(zeta).map(|(a, b)| (-f.pair(a)).exp() - (-f.pair(b)).exp())))
}
