//! Random coupling fields.
//!
//! Every draw is a pure function of `(master_seed, realization, generation,
//! site)`: the realization selects a ChaCha stream and the site and
//! generation select a disjoint block of that stream. Fields can therefore be
//! generated in any order or in parallel and still agree bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Couplings live on `[-b, -a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// Uniform on `[-b, -a]`; `a = b` is the point mass at `-a`.
    Uniform { a: f64, b: f64 },
    /// Normal law conditioned on `[-b, -a]`.
    TruncatedGaussian { a: f64, b: f64, mean: f64, std_dev: f64 },
    /// Density `density[i]` on `[edges[i], edges[i + 1])`, with
    /// `edges[0] = -b` and `edges[last] = -a`.
    PiecewiseDensity { edges: Vec<f64>, density: Vec<f64> },
}

impl Default for DistributionSpec {
    fn default() -> Self {
        DistributionSpec::Uniform { a: 1.0, b: 3.0 }
    }
}

impl DistributionSpec {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = DistributionSpec::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_gaussian(a: f64, b: f64, mean: f64, std_dev: f64) -> Result<Self> {
        let d = DistributionSpec::TruncatedGaussian { a, b, mean, std_dev };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise(edges: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        let d = DistributionSpec::PiecewiseDensity { edges, density };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Distribution(msg));
        match self {
            DistributionSpec::Uniform { a, b } => {
                if !(*a > 0.0 && a <= b && b.is_finite()) {
                    return bad(format!("uniform support needs 0 < a <= b < inf, got a = {a}, b = {b}"));
                }
            }
            DistributionSpec::TruncatedGaussian { a, b, mean, std_dev } => {
                if !(*a > 0.0 && a < b && b.is_finite()) {
                    return bad(format!("support needs 0 < a < b < inf, got a = {a}, b = {b}"));
                }
                if !(mean.is_finite() && *std_dev > 0.0 && std_dev.is_finite()) {
                    return bad(format!("need finite mean and positive std_dev, got {mean}, {std_dev}"));
                }
            }
            DistributionSpec::PiecewiseDensity { edges, density } => {
                if edges.len() < 2 || density.len() + 1 != edges.len() {
                    return bad("piecewise density needs n + 1 edges for n pieces".into());
                }
                if edges.windows(2).any(|w| !(w[0] < w[1])) || !edges.iter().all(|e| e.is_finite()) {
                    return bad("edges must be finite and strictly increasing".into());
                }
                if !(edges[edges.len() - 1] < 0.0) {
                    return bad("support must lie in (-inf, 0)".into());
                }
                if density.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return bad("densities must be finite and nonnegative".into());
                }
                let mass: f64 = density
                    .iter()
                    .zip(edges.windows(2))
                    .map(|(p, w)| p * (w[1] - w[0]))
                    .sum();
                if (mass - 1.0).abs() > 1e-12 {
                    return bad(format!("density integrates to {mass}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// `(-b, -a)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DistributionSpec::Uniform { a, b } | DistributionSpec::TruncatedGaussian { a, b, .. } => (-b, -a),
            DistributionSpec::PiecewiseDensity { edges, .. } => (edges[0], edges[edges.len() - 1]),
        }
    }

    /// Essential supremum of the density; infinite for a point mass.
    pub fn density_sup(&self) -> f64 {
        match self {
            DistributionSpec::Uniform { a, b } => 1.0 / (b - a),
            DistributionSpec::TruncatedGaussian { .. } => {
                let (lo, hi) = self.support();
                let n = 2000;
                (0..=n)
                    .map(|i| self.density(lo + (hi - lo) * i as f64 / n as f64))
                    .fold(0.0, f64::max)
            }
            DistributionSpec::PiecewiseDensity { density, .. } => density.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match self {
            DistributionSpec::Uniform { a, b } => 1.0 / (b - a),
            DistributionSpec::TruncatedGaussian { mean, std_dev, .. } => {
                let mass = normal_cdf((hi - mean) / std_dev) - normal_cdf((lo - mean) / std_dev);
                let u = (x - mean) / std_dev;
                (-0.5 * u * u).exp() / (std_dev * (2.0 * std::f64::consts::PI).sqrt() * mass)
            }
            DistributionSpec::PiecewiseDensity { edges, density } => {
                let i = edges.partition_point(|&e| e <= x).saturating_sub(1).min(density.len() - 1);
                density[i]
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Uniform { a, b } => -0.5 * (a + b),
            DistributionSpec::PiecewiseDensity { edges, density } => density
                .iter()
                .zip(edges.windows(2))
                .map(|(p, w)| p * 0.5 * (w[1] * w[1] - w[0] * w[0]))
                .sum(),
            DistributionSpec::TruncatedGaussian { mean, std_dev, .. } => {
                let (lo, hi) = self.support();
                let (al, be) = ((lo - mean) / std_dev, (hi - mean) / std_dev);
                let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                mean + std_dev * (phi(al) - phi(be)) / (normal_cdf(be) - normal_cdf(al))
            }
        }
    }

    /// One draw. Consumes a variable number of words for the truncated
    /// Gaussian, a single word pair otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, hi) = self.support();
        match self {
            DistributionSpec::Uniform { a, b } => {
                if a == b {
                    return -a;
                }
                lo + (hi - lo) * rng.random::<f64>()
            }
            DistributionSpec::TruncatedGaussian { mean, std_dev, .. } => {
                // Uniform proposal on the support, accepted against the
                // Gaussian envelope normalized to its maximum on the support.
                let peak = mean.clamp(lo, hi);
                let log_peak = -0.5 * ((peak - mean) / std_dev).powi(2);
                loop {
                    let x = lo + (hi - lo) * rng.random::<f64>();
                    let log_w = -0.5 * ((x - mean) / std_dev).powi(2) - log_peak;
                    if rng.random::<f64>().ln() <= log_w {
                        return x;
                    }
                }
            }
            DistributionSpec::PiecewiseDensity { edges, density } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, p) in density.iter().enumerate() {
                    let mass = p * (edges[i + 1] - edges[i]);
                    if u < acc + mass && mass > 0.0 {
                        return (edges[i] + (u - acc) / p).min(edges[i + 1]);
                    }
                    acc += mass;
                }
                // u landed in the 1e-12 rounding slack: last piece with mass.
                let last = density.iter().rposition(|&p| p > 0.0).unwrap_or(density.len() - 1);
                edges[last + 1]
            }
        }
    }
}

/// Standard normal CDF via the complementary error function.
fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function, relative accuracy about 1.2e-7 (Chebyshev fit
/// of `erfc(x) = t exp(-x^2 + P(t))`). Only used for normalization constants.
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let r = t * poly.exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

/// Address of a coupling field in the random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub realization: u64,
    /// 0 for the original field, `>= 1` for successive resamplings.
    pub generation: u8,
}

impl StreamKey {
    pub fn new(master_seed: u64, realization: u64) -> Self {
        StreamKey { master_seed, realization, generation: 0 }
    }

    pub fn next_generation(self) -> Self {
        StreamKey { generation: self.generation.wrapping_add(1), ..self }
    }

    /// Generator for one site. Sites are `2^24` words apart and each
    /// generation owns a `2^16`-word slot within the site's block.
    pub fn site_rng(&self, site: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.realization);
        rng.set_word_pos(((site as u128) << 24) | ((self.generation as u128) << 16));
        rng
    }
}

/// Couplings `ω_j`, one per lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingField {
    values: Vec<f64>,
    dist: Option<DistributionSpec>,
    key: Option<StreamKey>,
}

impl CouplingField {
    /// A deterministic field; every value must be finite and nonzero.
    pub fn fixed(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|w| !w.is_finite() || **w == 0.0) {
            return Err(Error::InvalidArgument(format!("couplings must be finite and nonzero, got {bad}")));
        }
        Ok(CouplingField { values, dist: None, key: None })
    }

    pub fn constant(n: usize, omega: f64) -> Result<Self> {
        Self::fixed(vec![omega; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn distribution(&self) -> Option<&DistributionSpec> {
        self.dist.as_ref()
    }
    pub fn key(&self) -> Option<StreamKey> {
        self.key
    }

    /// Copy with site `j` redrawn from `dist` (or the field's own law) using
    /// generation `key.generation` of the site's stream.
    pub fn resample_one(&self, site: usize, key: StreamKey, dist: Option<&DistributionSpec>) -> Result<Self> {
        if site >= self.values.len() {
            return Err(Error::Index { index: site, len: self.values.len() });
        }
        let law = match (dist, &self.dist) {
            (Some(d), _) => d,
            (None, Some(d)) => d,
            (None, None) => {
                return Err(Error::Distribution("field has no law to resample from".into()));
            }
        };
        law.validate()?;
        let mut out = self.clone();
        out.values[site] = law.sample(&mut key.site_rng(site));
        Ok(out)
    }
}

/// iid couplings for `n_sites` sites from stream `key`.
pub fn sample_couplings(dist: &DistributionSpec, n_sites: usize, key: StreamKey) -> Result<CouplingField> {
    dist.validate()?;
    let mut base = key.site_rng(0);
    let values = (0..n_sites)
        .map(|site| {
            base.set_word_pos(((site as u128) << 24) | ((key.generation as u128) << 16));
            dist.sample(&mut base)
        })
        .collect();
    Ok(CouplingField { values, dist: Some(dist.clone()), key: Some(key) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(dist: &DistributionSpec, n: usize, seed: u64) -> Vec<f64> {
        sample_couplings(dist, n, StreamKey::new(seed, 0)).unwrap().values().to_vec()
    }

    #[test]
    fn degenerate_support() {
        let d = DistributionSpec::uniform(2.0, 2.0).unwrap();
        assert!(draws(&d, 50, 1).iter().all(|&w| w == -2.0));
    }

    #[test]
    fn uniform_mean() {
        let v = draws(&DistributionSpec::default(), 100_000, 7);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean + 2.0).abs() < 0.004 + 1e-12, "mean {mean}");
        assert!(v.iter().all(|&w| (-3.0..=-1.0).contains(&w)));
    }

    #[test]
    fn uniform_cdf_within_dkw_band() {
        let mut v = draws(&DistributionSpec::default(), 100_000, 11);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len() as f64;
        let eps = ((2.0_f64 / 0.01).ln() / (2.0 * n)).sqrt();
        let worst = v
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x + 3.0) / 2.0;
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst < eps, "{worst} vs {eps}");
    }

    #[test]
    fn realizations_are_uncorrelated() {
        let d = DistributionSpec::default();
        let xs: Vec<f64> = (0..10_000)
            .map(|r| sample_couplings(&d, 1, StreamKey::new(3, r)).unwrap().values()[0])
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let var: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        assert!((cov / var).abs() < 0.01, "rho = {}", cov / var);
    }

    #[test]
    fn determinism_and_order_independence() {
        let d = DistributionSpec::default();
        let key = StreamKey::new(42, 5);
        let a = sample_couplings(&d, 64, key).unwrap();
        let b = sample_couplings(&d, 64, key).unwrap();
        assert_eq!(a, b);
        for site in [0, 17, 63] {
            assert_eq!(d.sample(&mut key.site_rng(site)), a.values()[site]);
        }
        let c = sample_couplings(&d, 64, StreamKey::new(42, 6)).unwrap();
        assert_ne!(a.values(), c.values());
        // a longer field extends a shorter one
        let long = sample_couplings(&d, 100, key).unwrap();
        assert_eq!(&long.values()[..64], a.values());
    }

    #[test]
    fn resample_changes_exactly_one_site() {
        let d = DistributionSpec::default();
        let key = StreamKey::new(9, 2);
        let f = sample_couplings(&d, 30, key).unwrap();
        let g = f.resample_one(12, key.next_generation(), None).unwrap();
        let diff: Vec<usize> = (0..30).filter(|&i| f.values()[i] != g.values()[i]).collect();
        assert_eq!(diff, vec![12]);
        let other = DistributionSpec::uniform(4.0, 5.0).unwrap();
        let h = f.resample_one(3, key.next_generation(), Some(&other)).unwrap();
        assert!((-5.0..=-4.0).contains(&h.values()[3]));
        assert!(matches!(f.resample_one(30, key, None), Err(Error::Index { index: 30, len: 30 })));
        assert!(CouplingField::fixed(vec![-1.0]).unwrap().resample_one(0, key, None).is_err());
    }

    #[test]
    fn validation() {
        assert!(DistributionSpec::uniform(0.0, 1.0).is_err());
        assert!(DistributionSpec::uniform(2.0, 1.0).is_err());
        assert!(DistributionSpec::truncated_gaussian(1.0, 1.0, -2.0, 1.0).is_err());
        assert!(DistributionSpec::piecewise(vec![-3.0, -2.0, -1.0], vec![0.5, 0.4]).is_err());
        assert!(DistributionSpec::piecewise(vec![-3.0, -2.0, -1.0], vec![0.25, 0.75]).is_ok());
        assert!(CouplingField::fixed(vec![-1.0, 0.0]).is_err());
        assert!(CouplingField::fixed(vec![f64::NAN]).is_err());
    }

    #[test]
    fn piecewise_and_gaussian_moments() {
        let pw = DistributionSpec::piecewise(vec![-3.0, -2.0, -1.0], vec![0.25, 0.75]).unwrap();
        assert!((pw.mean() + 1.75).abs() < 1e-15);
        let tg = DistributionSpec::truncated_gaussian(1.0, 3.0, -2.5, 0.5).unwrap();
        for (d, seed) in [(&pw, 1), (&tg, 2)] {
            let v = draws(d, 100_000, seed);
            let (lo, hi) = d.support();
            assert!(v.iter().all(|&w| w >= lo && w <= hi));
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
            let se = (var / v.len() as f64).sqrt();
            assert!((m - d.mean()).abs() < 5.0 * se, "{d:?}: {m} vs {}", d.mean());
        }
        assert!((pw.density(-2.5) - 0.25).abs() < 1e-15 && pw.density(-0.5) == 0.0);
        assert_eq!(pw.density_sup(), 0.75);
    }

    #[test]
    fn gaussian_density_normalized() {
        let tg = DistributionSpec::truncated_gaussian(1.0, 3.0, -1.2, 0.7).unwrap();
        let n = 20_000;
        let h = 2.0 / n as f64;
        let mass: f64 = (0..n).map(|i| tg.density(-3.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}
