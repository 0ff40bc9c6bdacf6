//! Monte Carlo estimators over an ensemble of coupling fields.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::disorder::CouplingField;
use crate::domain::DomainSpec;
use crate::kmatrix::{assemble, CONDITION_CAP};

use super::fit::{line_fit, log_log_fit, Estimate, LineFit};
use super::point_process::{block_counts, SubcubeArray};

fn check_nonempty(ens: &Ensemble) -> Result<()> {
    if ens.is_empty() {
        return Err(Error::InsufficientData("empty ensemble".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosPoint {
    pub energy: f64,
    pub dos: Estimate,
}

/// `n̂(E_0)`: mean count in `[E_0 - δ/2, E_0 + δ/2)` per unit volume and energy.
pub fn estimate_dos(ens: &Ensemble, e0: f64, delta: f64) -> Result<Estimate> {
    Ok(dos_scan(ens, &[e0], delta)?[0].dos)
}

/// `n̂` at each energy, from a single counting pass per realization.
pub fn dos_scan(ens: &Ensemble, energies: &[f64], delta: f64) -> Result<Vec<DosPoint>> {
    check_nonempty(ens)?;
    let counts = ens.interval_counts(&dos_intervals(energies, delta)?)?;
    Ok(dos_from_counts(&counts, energies, delta, ens.volume()))
}

/// The windows `[E - δ/2, E + δ/2)` counted by [`dos_scan`].
pub fn dos_intervals(energies: &[f64], delta: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if let Some(e) = energies.iter().find(|&&e| !(e + delta / 2.0 < 0.0)) {
        return Err(Error::Window(format!("window around {e} of width {delta} reaches E >= 0")));
    }
    Ok(energies.iter().map(|&e| (e - delta / 2.0, e + delta / 2.0)).collect())
}

/// `n̂` from per-realization counts in the [`dos_intervals`] windows.
pub fn dos_from_counts(counts: &[Vec<usize>], energies: &[f64], delta: f64, volume: f64) -> Vec<DosPoint> {
    let scale = 1.0 / (volume * delta);
    energies
        .iter()
        .enumerate()
        .map(|(k, &energy)| DosPoint {
            energy,
            dos: Estimate::from_samples(counts.iter().map(|row| row[k] as f64)).scaled(scale),
        })
        .collect()
}

/// Energy of the largest `n̂` in a scan.
pub fn propose_e0(scan: &[DosPoint]) -> Option<f64> {
    scan.iter()
        .filter(|p| p.dos.mean.is_finite())
        .max_by(|a, b| a.dos.mean.partial_cmp(&b.dos.mean).expect("finite"))
        .map(|p| p.energy)
}

/// Moments of `X = X(I_η)`, `I_η = [E_0 - η, E_0 + η)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub eta: f64,
    pub mean: Estimate,
    pub p_nonzero: Estimate,
    pub second_moment: Estimate,
    /// `E[X (X - 1)]`.
    pub factorial: Estimate,
    /// `E[X (X - 1)] / (|Λ| η)²`.
    pub minami_ratio: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountScan {
    pub e0: f64,
    pub volume: f64,
    pub realizations: usize,
    pub rows: Vec<CountRow>,
    /// Log-log slope of `E[X]` against `η`.
    pub wegner_fit: Option<LineFit>,
    /// Log-log slope of `E[X (X - 1)]` against `η`.
    pub minami_fit: Option<LineFit>,
}

/// Wegner and Minami moments of the counts in shrinking windows around `E_0`.
pub fn count_scan(ens: &Ensemble, e0: f64, etas: &[f64]) -> Result<CountScan> {
    check_nonempty(ens)?;
    let counts = ens.interval_counts(&count_intervals(e0, etas)?)?;
    Ok(count_scan_from(&counts, e0, etas, ens.volume()))
}

/// The windows `[E_0 - η, E_0 + η)` counted by [`count_scan`].
pub fn count_intervals(e0: f64, etas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if let Some(eta) = etas.iter().find(|&&h| !(h > 0.0 && e0 + h < 0.0)) {
        return Err(Error::Window(format!("eta = {eta} around E_0 = {e0} leaves (-inf, 0)")));
    }
    Ok(etas.iter().map(|&h| (e0 - h, e0 + h)).collect())
}

/// [`CountScan`] from per-realization counts in the [`count_intervals`] windows.
pub fn count_scan_from(counts: &[Vec<usize>], e0: f64, etas: &[f64], volume: f64) -> CountScan {
    let rows: Vec<CountRow> = etas
        .iter()
        .enumerate()
        .map(|(k, &eta)| {
            let x = || counts.iter().map(move |row| row[k] as f64);
            let factorial = Estimate::from_samples(x().map(|v| v * (v - 1.0)));
            CountRow {
                eta,
                mean: Estimate::from_samples(x()),
                p_nonzero: Estimate::from_samples(x().map(|v| if v >= 1.0 { 1.0 } else { 0.0 })),
                second_moment: Estimate::from_samples(x().map(|v| v * v)),
                factorial,
                minami_ratio: factorial.scaled(1.0 / (volume * eta).powi(2)),
            }
        })
        .collect();
    let means: Vec<Estimate> = rows.iter().map(|r| r.mean).collect();
    let facts: Vec<Estimate> = rows.iter().map(|r| r.factorial).collect();
    CountScan {
        e0,
        volume,
        realizations: counts.len(),
        wegner_fit: log_log_fit(etas, &means).ok(),
        minami_fit: log_log_fit(etas, &facts).ok(),
        rows,
    }
}

pub fn wegner_scan(ens: &Ensemble, e0: f64, etas: &[f64]) -> Result<CountScan> {
    count_scan(ens, e0, etas)
}

pub fn minami_scan(ens: &Ensemble, e0: f64, etas: &[f64]) -> Result<CountScan> {
    count_scan(ens, e0, etas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublePointReport {
    pub blocks: usize,
    pub ell: f64,
    /// `Σ_p P{η^p(I) >= 2}`.
    pub rate: Estimate,
    /// `P{η^p(I) >= 1}` per block.
    pub occupancy: Vec<f64>,
    pub max_occupancy: f64,
}

/// Double-point rate and block occupancies of a subcube array over the
/// physical interval `[lo, hi)`.
pub fn double_point_rate(ens: &Ensemble, array: &SubcubeArray, interval: (f64, f64)) -> Result<DoublePointReport> {
    check_nonempty(ens)?;
    if !(interval.0 < interval.1 && interval.1 < 0.0) {
        return Err(Error::Window(format!("interval {interval:?} must lie below 0")));
    }
    let per = ens.map(|_, field| block_counts(field, array, interval, ens.solver))?;
    let n = per.len() as f64;
    let mut occupancy = vec![0.0; array.len()];
    for row in &per {
        for (o, &c) in occupancy.iter_mut().zip(row) {
            if c >= 1 {
                *o += 1.0 / n;
            }
        }
    }
    Ok(DoublePointReport {
        blocks: array.len(),
        ell: array.ell(),
        rate: Estimate::from_samples(per.iter().map(|row| row.iter().filter(|&&c| c >= 2).count() as f64)),
        max_occupancy: occupancy.iter().copied().fold(0.0, f64::max),
        occupancy,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub distance: f64,
    pub moment: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FracMomentReport {
    pub z: (f64, f64),
    pub s: f64,
    /// Decay rate: minus the slope of `ln E|K^{-1}_ij|^s` against distance.
    pub gamma: f64,
    pub gamma_stderr: f64,
    pub ci95: (f64, f64),
    pub fit: LineFit,
    pub bins: Vec<DistanceBin>,
    /// Bins left out of the fit because they fell to the rounding floor.
    pub dropped_bins: usize,
    /// Realizations with numerically singular `K(z)`.
    pub skipped: usize,
}

/// Fractional moments of `K(z)^{-1}` binned by rounded site distance, with
/// an exponential fit over distances `>= 1`.
pub fn frac_moment_decay(ens: &Ensemble, z: Complex64, s: f64, max_distance: Option<f64>) -> Result<FracMomentReport> {
    check_nonempty(ens)?;
    check_frac_args(z, s)?;
    let per = ens.map(|_, field| {
        frac_moment_row(&ens.domain, field, z, s, max_distance, ens.solver.green_tol, CONDITION_CAP)
    })?;
    frac_moment_fit(&per, z, s)
}

fn check_frac_args(z: Complex64, s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("s must lie in (0, 1), got {s}")));
    }
    if !(z.re < 0.0) {
        return Err(Error::InvalidArgument(format!("Re z must be negative, got {z}")));
    }
    Ok(())
}

/// One realization's mean of `|K^{-1}_ij|^s` over pairs at each rounded
/// distance, or `None` when `σ_min(K) < cond_cap ||K||`.
pub fn frac_moment_row(
    domain: &DomainSpec,
    field: &CouplingField,
    z: Complex64,
    s: f64,
    max_distance: Option<f64>,
    green_tol: f64,
    cond_cap: f64,
) -> Result<Option<BTreeMap<u64, f64>>> {
    check_frac_args(z, s)?;
    let dim = domain.dim();
    let lattice = domain.lattice();
    let k = assemble(domain, field, z, green_tol)?;
    let inv = match k.check_conditioning_with(cond_cap).and_then(|_| k.inverse_unchecked()) {
        Ok(m) => m,
        Err(Error::Singular { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for i in 0..lattice.len() {
        for j in (i + 1)..lattice.len() {
            let r = lattice[i].distance(&lattice[j], dim).round();
            if r < 1.0 || max_distance.is_some_and(|m| r > m) {
                continue;
            }
            let e = sums.entry(r as u64).or_insert((0.0, 0));
            e.0 += inv[(i, j)].norm().powf(s);
            e.1 += 1;
        }
    }
    Ok(Some(sums.into_iter().map(|(r, (t, c))| (r, t / c as f64)).collect()))
}

/// Decay fit over per-realization rows from [`frac_moment_row`].
pub fn frac_moment_fit(per: &[Option<BTreeMap<u64, f64>>], z: Complex64, s: f64) -> Result<FracMomentReport> {
    let skipped = per.iter().filter(|p| p.is_none()).count();
    let good: Vec<&BTreeMap<u64, f64>> = per.iter().flatten().collect();
    if good.is_empty() {
        return Err(Error::InsufficientData("every realization was singular".into()));
    }
    let mut keys: Vec<u64> = good.iter().flat_map(|m| m.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let bins: Vec<DistanceBin> = keys
        .iter()
        .map(|&r| DistanceBin {
            distance: r as f64,
            moment: Estimate::from_samples(good.iter().filter_map(|m| m.get(&r).copied())),
        })
        .collect();
    // |K^{-1}_ij| below ~1e-12 of the nearest-neighbour value is rounding
    let floor = bins.first().map_or(0.0, |b| b.moment.mean) * 1e-12f64.powf(s);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut sig = Vec::new();
    for b in &bins {
        if b.moment.mean > floor && b.moment.mean > 0.0 && b.moment.n >= 2 {
            x.push(b.distance);
            y.push(b.moment.mean.ln());
            sig.push((b.moment.stderr / b.moment.mean).max(1e-12));
        }
    }
    let fit = line_fit(&x, &y, Some(&sig))?;
    let gamma = -fit.slope;
    Ok(FracMomentReport {
        z: (z.re, z.im),
        s,
        gamma,
        gamma_stderr: fit.slope_stderr,
        ci95: (gamma - 1.96 * fit.slope_stderr, gamma + 1.96 * fit.slope_stderr),
        fit,
        dropped_bins: bins.len() - x.len(),
        bins,
        skipped,
    })
}

/// Exponent `p` of `γ ∝ |E|^p` from decay rates at several energies.
pub fn decay_trend(energies: &[f64], rates: &[(f64, f64)]) -> Result<LineFit> {
    let x: Vec<f64> = energies.iter().map(|e| e.abs()).collect();
    let y: Vec<Estimate> = rates.iter().map(|&(mean, stderr)| Estimate { mean, stderr, n: 0 }).collect();
    log_log_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::DistributionSpec;
    use crate::domain::{BoundaryCondition, DomainSpec, Point};
    use crate::greens::Dimension;
    use crate::stats::point_process::Tiling;

    fn single_site(n: u64) -> Ensemble {
        let dom = DomainSpec::with_lattice(Dimension::One, 60.0, BoundaryCondition::FreeSpace, vec![Point::new1(30.0)]).unwrap();
        Ensemble::new(dom, DistributionSpec::uniform(1.0, 3.0).unwrap(), 11, n)
    }

    #[test]
    fn single_site_window_probability() {
        // bound state at -ω²/4 falls in [-1.21, -0.81) iff |ω| in [1.8, 2.2)
        let ens = single_site(20_000);
        let dos = estimate_dos(&ens, -1.01, 0.4).unwrap();
        let p = dos.scaled(60.0 * 0.4);
        assert!((p.mean - 0.2).abs() < 4.0 * p.stderr, "{p:?}");
        let scan = count_scan(&ens, -1.01, &[0.2, 0.05]).unwrap();
        assert!((scan.rows[0].mean.mean - p.mean).abs() < 1e-15);
        for r in &scan.rows {
            assert_eq!(r.factorial.mean, 0.0);
            assert!(r.p_nonzero.mean <= r.mean.mean && r.mean.mean <= r.second_moment.mean);
        }
    }

    #[test]
    fn empty_and_invalid() {
        let ens = single_site(0);
        assert!(matches!(estimate_dos(&ens, -1.0, 0.1), Err(Error::InsufficientData(_))));
        let ens = single_site(5);
        assert!(estimate_dos(&ens, -0.01, 0.1).is_err());
        assert!(count_scan(&ens, -1.0, &[2.0]).is_err());
        let scan = dos_scan(&ens, &[-30.0], 1.0).unwrap();
        assert_eq!(scan[0].dos.mean, 0.0);
        assert_eq!(propose_e0(&dos_scan(&ens, &[-30.0, -1.0], 1.0).unwrap()), Some(-1.0));
    }

    #[test]
    fn frac_moment_single_site() {
        // d = 3, z = -1, ω = -1: K = -1 + 1/(4π), |K^{-1}|^{1/2} ≈ 1.0424
        let dom = DomainSpec::with_lattice(Dimension::Three, 40.0, BoundaryCondition::FreeSpace, vec![Point::new3(20.0, 20.0, 20.0)]).unwrap();
        let omega = crate::disorder::CouplingField::constant(1, -1.0).unwrap();
        let k = assemble(&dom, &omega, Complex64::new(-1.0, 0.0), 1e-13).unwrap();
        let v = k.inverse_entry(0, 0).unwrap().norm().powf(0.5);
        assert!((k.entries()[(0, 0)].re + 0.9204225284540523).abs() < 1e-12);
        assert!((v - 1.0424).abs() < 1e-4);
    }

    #[test]
    fn frac_moment_decays_in_1d() {
        let dom = DomainSpec::cube(Dimension::One, 20.0, BoundaryCondition::Dirichlet).unwrap();
        let ens = Ensemble::new(dom, DistributionSpec::default(), 2, 40);
        let rep = frac_moment_decay(&ens, Complex64::new(-4.0, 0.0), 0.5, None).unwrap();
        assert!(rep.ci95.0 > 0.0, "{rep:?}");
        assert_eq!(rep.skipped, 0);
        assert!(rep.bins[0].distance == 1.0);
    }

    #[test]
    fn double_points_vanish_for_single_site_blocks() {
        let dom = DomainSpec::cube(Dimension::One, 16.0, BoundaryCondition::Dirichlet).unwrap();
        let arr = SubcubeArray::new(&dom, 0.0001, Tiling::Balanced).unwrap();
        assert_eq!(arr.len(), 16);
        let ens = Ensemble::new(dom, DistributionSpec::default(), 4, 30);
        let rep = double_point_rate(&ens, &arr, (-3.0, -0.2)).unwrap();
        assert_eq!(rep.rate.mean, 0.0);
        assert_eq!(rep.occupancy.len(), 16);
    }
}
