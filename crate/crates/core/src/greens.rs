//! Free-space Green's functions of `-Δ - z` on R^d, the spectral parameter
//! `κ = sqrt(-z)` and the renormalized on-site energies `e_d`.
//!
//! Every formula is written through `κ` with `Re κ > 0`, so each kernel decays
//! like `exp(-κ r)` for `z` off the cut `[0, ∞)`.

use std::f64::consts::PI;
use std::fmt::Debug;

use num_complex::{Complex64, ComplexFloat};
use serde::{Deserialize, Serialize};

use crate::bessel::{k0_complex, k0_real};
use crate::error::{Error, Result};

/// Spatial dimension of the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dimension {
    One,
    Two,
    Three,
}

impl Dimension {
    pub fn get(self) -> usize {
        match self {
            Dimension::One => 1,
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn new(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Dimension::One),
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            _ => Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {d}"))),
        }
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;
    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.get()
    }
}

/// Scalar field the kernels are evaluated in: `f64` on the negative real axis,
/// `Complex64` elsewhere.
pub trait Scalar:
    ComplexFloat<Real = f64> + From<f64> + faer::traits::ComplexField<Real = f64> + Send + Sync + Debug + 'static
{
    fn k0(self) -> Self;
    fn to_complex(self) -> Complex64;
    fn from_real(x: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn k0(self) -> Self {
        k0_real(self)
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
}

impl Scalar for Complex64 {
    #[inline]
    fn k0(self) -> Self {
        k0_complex(self)
    }
    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// A complex energy `z` together with `κ = sqrt(-z)`, `Re κ > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParam {
    z: Complex64,
    kappa: Complex64,
}

impl SpectralParam {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || (z.im == 0.0 && z.re >= 0.0) {
            return Err(Error::EnergyOnCut { re: z.re, im: z.im });
        }
        let kappa = if z.im == 0.0 {
            Complex64::new((-z.re).sqrt(), 0.0)
        } else {
            (-z).sqrt()
        };
        Ok(SpectralParam { z, kappa })
    }

    pub fn real(energy: f64) -> Result<Self> {
        Self::new(Complex64::new(energy, 0.0))
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn kappa(&self) -> Complex64 {
        self.kappa
    }

    pub fn is_real(&self) -> bool {
        self.z.im == 0.0
    }
}

/// Convenience wrapper: `κ(z)` for a complex energy.
pub fn kappa(z: Complex64) -> Result<SpectralParam> {
    SpectralParam::new(z)
}

/// Free Green's function `G_0(r; z)` of `-Δ` on R^d.
pub fn free_green(dim: Dimension, r: f64, param: &SpectralParam) -> Result<Complex64> {
    let bad = match dim {
        Dimension::One => !(r >= 0.0),
        _ => !(r > 0.0),
    };
    if bad || !r.is_finite() {
        return Err(Error::Domain {
            op: "free_green",
            detail: format!("distance {r} not admissible in d = {}", dim.get()),
        });
    }
    Ok(free_kernel(dim, r, param.kappa()))
}

/// Renormalized on-site value `e_d` of the free Green's function.
pub fn effective_energy(dim: Dimension, param: &SpectralParam) -> Complex64 {
    effective_kernel(dim, param.kappa())
}

/// Effective coupling `α_{d,j}` entering the characteristic matrix as `1/α`.
pub fn effective_coupling(dim: Dimension, omega: f64) -> f64 {
    match dim {
        Dimension::One | Dimension::Two => -omega,
        Dimension::Three => omega,
    }
}

#[inline]
pub(crate) fn free_kernel<S: Scalar>(dim: Dimension, r: f64, kappa: S) -> S {
    let r_s = S::from_real(r);
    match dim {
        Dimension::One => (-(kappa * r_s)).exp() / (S::from_real(2.0) * kappa),
        Dimension::Two => (kappa * r_s).k0() / S::from_real(2.0 * PI),
        Dimension::Three => (-(kappa * r_s)).exp() / S::from_real(4.0 * PI * r),
    }
}

#[inline]
pub(crate) fn effective_kernel<S: Scalar>(dim: Dimension, kappa: S) -> S {
    match dim {
        Dimension::One => S::from_real(0.5) / kappa,
        Dimension::Two => -kappa.ln() / S::from_real(2.0 * PI),
        Dimension::Three => -kappa / S::from_real(4.0 * PI),
    }
}

/// Upper bound for `|G_0(r)|` using only `Re κ`, valid for every `r > 0`.
pub(crate) fn free_kernel_bound(dim: Dimension, r: f64, kappa_re: f64, kappa_abs: f64) -> f64 {
    let decay = (-kappa_re * r).exp();
    match dim {
        Dimension::One => decay / (2.0 * kappa_abs),
        // K0(x) < sqrt(pi / (2x)) e^{-x} for all x > 0, and |K0(w)| <= K0(Re w).
        Dimension::Two => (PI / (2.0 * kappa_re * r)).sqrt() * decay / (2.0 * PI),
        Dimension::Three => decay / (4.0 * PI * r),
    }
}
