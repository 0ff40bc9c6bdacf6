//! The characteristic matrix `K(z)`.
//!
//! ```text
//! K_jk = (1/α_j - e_d(z) + c(x_j, x_j)) δ_jk - G^X(x_j, x_k; z) (1 - δ_jk)
//! ```
//!
//! `z` is an eigenvalue of the point-interaction Hamiltonian exactly when
//! `K(z)` is singular, and `K(z)^{-1}` is the finite-rank part of its
//! resolvent. In free space the corrector `c` vanishes.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disorder::CouplingField;
use crate::domain::{domain_green, BoundaryCondition, DomainSpec, GreenEvaluator, Point};
use crate::error::{Error, Result};
use crate::greens::{effective_coupling, effective_kernel, Dimension, Scalar, SpectralParam};

/// Smallest singular value below `CONDITION_CAP * ||K||` is treated as singular.
pub const CONDITION_CAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Free-space Laplacian, interactions confined to the box.
    TruncatedWholeSpace,
    /// Laplacian with boundary conditions on the box.
    BoxBc,
}

impl Variant {
    pub fn of(domain: &DomainSpec) -> Self {
        match domain.bc() {
            BoundaryCondition::FreeSpace => Variant::TruncatedWholeSpace,
            _ => Variant::BoxBc,
        }
    }
}

/// `K = t + diag(v) - e_d I`, with the corrector carried on the diagonal of `t`.
#[derive(Debug, Clone)]
pub struct Split<S: Scalar> {
    pub t: Mat<S>,
    pub v: Vec<f64>,
    pub e_d: S,
}

#[derive(Debug, Clone)]
pub struct CharacteristicMatrix<S: Scalar> {
    entries: Mat<S>,
    z: Complex64,
    variant: Variant,
    split: Option<Split<S>>,
}

impl<S: Scalar> CharacteristicMatrix<S> {
    pub fn entries(&self) -> MatRef<'_, S> {
        self.entries.as_ref()
    }
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
    pub fn z(&self) -> Complex64 {
        self.z
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn split(&self) -> Option<&Split<S>> {
        self.split.as_ref()
    }

    /// Fails with [`Error::Singular`] when `σ_min < CONDITION_CAP ||K||_2`.
    pub fn check_conditioning(&self) -> Result<()> {
        self.check_conditioning_with(CONDITION_CAP)
    }

    pub fn check_conditioning_with(&self, cap: f64) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Ok(());
        }
        let sv = self
            .entries
            .singular_values()
            .map_err(|e| Error::NonConvergence(format!("singular value decomposition: {e:?}")))?;
        let norm = sv[0];
        let sigma_min = sv[n - 1];
        if !(sigma_min > cap * norm) || !norm.is_finite() {
            return Err(Error::Singular { sigma_min, norm });
        }
        Ok(())
    }

    /// `K^{-1} rhs`. Real `K` uses a Bunch-Kaufman `LBL^T` factorization;
    /// complex symmetric `K` is not Hermitian and goes through pivoted LU.
    pub fn solve(&self, rhs: MatRef<'_, S>) -> Result<Mat<S>> {
        self.check_conditioning()?;
        Ok(self.solve_unchecked(rhs))
    }

    fn solve_unchecked(&self, rhs: MatRef<'_, S>) -> Mat<S> {
        if <S as faer::traits::ComplexField>::IS_REAL {
            self.entries.lblt(Side::Lower).solve(rhs)
        } else {
            self.entries.partial_piv_lu().solve(rhs)
        }
    }

    pub fn inverse(&self) -> Result<Mat<S>> {
        self.check_conditioning()?;
        self.inverse_unchecked()
    }

    /// `K^{-1}` without the conditioning check.
    pub fn inverse_unchecked(&self) -> Result<Mat<S>> {
        let n = self.dim();
        Ok(self.solve_unchecked(Mat::<S>::identity(n, n).as_ref()))
    }

    /// `[K^{-1}]_ij`.
    pub fn inverse_entry(&self, i: usize, j: usize) -> Result<S> {
        let n = self.dim();
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::Index { index: idx, len: n });
            }
        }
        let rhs = Mat::<S>::from_fn(n, 1, |r, _| if r == j { S::from_real(1.0) } else { S::from_real(0.0) });
        Ok(self.solve(rhs.as_ref())?[(i, 0)])
    }
}

impl CharacteristicMatrix<f64> {
    /// Eigenvalues of the real symmetric `K(E)`, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        self.entries
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::NonConvergence(format!("symmetric eigensolver: {e:?}")))
    }
}

fn check_field(domain: &DomainSpec, omega: &CouplingField) -> Result<()> {
    if omega.len() != domain.num_sites() {
        return Err(Error::InvalidArgument(format!(
            "{} couplings for {} lattice points",
            omega.len(),
            domain.num_sites()
        )));
    }
    if let Some(w) = omega.values().iter().find(|w| !w.is_finite() || **w == 0.0) {
        return Err(Error::InvalidArgument(format!("coupling {w} is not finite and nonzero")));
    }
    Ok(())
}

pub(crate) fn build<S: Scalar>(
    domain: &DomainSpec,
    omega: &CouplingField,
    kappa: S,
    z: Complex64,
    tol: f64,
    keep_split: bool,
) -> Result<CharacteristicMatrix<S>> {
    check_field(domain, omega)?;
    let eval = GreenEvaluator::new(domain, kappa, tol)?;
    let variant = Variant::of(domain);
    let dim = domain.dim();
    let sites = domain.lattice();
    let n = sites.len();
    let e_d = effective_kernel(dim, kappa);
    let mut t = Mat::<S>::zeros(n, n);
    for j in 0..n {
        if variant == Variant::BoxBc {
            t[(j, j)] = eval.corrector(&sites[j], &sites[j]);
        }
        for i in (j + 1)..n {
            let g = -eval.green(&sites[i], &sites[j]);
            t[(i, j)] = g;
            t[(j, i)] = g;
        }
    }
    let v: Vec<f64> = omega.values().iter().map(|&w| 1.0 / effective_coupling(dim, w)).collect();
    let (entries, split) = if keep_split {
        let mut k = t.clone();
        for j in 0..n {
            k[(j, j)] = k[(j, j)] + S::from_real(v[j]) - e_d;
        }
        (k, Some(Split { t, v, e_d }))
    } else {
        let mut k = t;
        for j in 0..n {
            k[(j, j)] = k[(j, j)] + S::from_real(v[j]) - e_d;
        }
        (k, None)
    };
    Ok(CharacteristicMatrix { entries, z, variant, split })
}

/// `K(z)` at a complex energy off `[0, ∞)`.
pub fn assemble(
    domain: &DomainSpec,
    omega: &CouplingField,
    z: Complex64,
    tol: f64,
) -> Result<CharacteristicMatrix<Complex64>> {
    let p = SpectralParam::new(z)?;
    build(domain, omega, p.kappa(), z, tol, false)
}

/// `K(z)` together with its split `t + v - e_d`.
pub fn assemble_split(
    domain: &DomainSpec,
    omega: &CouplingField,
    z: Complex64,
    tol: f64,
) -> Result<CharacteristicMatrix<Complex64>> {
    let p = SpectralParam::new(z)?;
    build(domain, omega, p.kappa(), z, tol, true)
}

/// Real symmetric `K(E)` for `E < 0`.
pub fn assemble_real(domain: &DomainSpec, omega: &CouplingField, energy: f64, tol: f64) -> Result<CharacteristicMatrix<f64>> {
    let p = SpectralParam::real(energy)?;
    build(domain, omega, p.kappa().re, p.z(), tol, false)
}

/// `[K(z)^{-1}]_ij`.
pub fn k_inverse_entry(k: &CharacteristicMatrix<Complex64>, i: usize, j: usize) -> Result<Complex64> {
    k.inverse_entry(i, j)
}

/// Resolvent kernel of the point-interaction Hamiltonian,
/// `G^X(x, y) + Σ_jk G^X(x, x_j) [K^{-1}]_jk G^X(x_k, y)`.
pub fn resolvent_kernel(
    domain: &DomainSpec,
    omega: &CouplingField,
    x: &Point,
    y: &Point,
    z: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let p = SpectralParam::new(z)?;
    let base = domain_green(domain, x, y, &p, tol)?;
    let n = domain.num_sites();
    if n == 0 {
        check_field(domain, omega)?;
        return Ok(base);
    }
    let dim = domain.dim();
    if dim != Dimension::One {
        for s in domain.lattice() {
            if s.distance(x, dim) == 0.0 || s.distance(y, dim) == 0.0 {
                return Err(Error::Domain {
                    op: "resolvent_kernel",
                    detail: "x and y must avoid the interaction points".into(),
                });
            }
        }
    }
    let k = assemble(domain, omega, z, tol)?;
    let eval = GreenEvaluator::new(domain, p.kappa(), tol)?;
    let sites = domain.lattice();
    let gy = Mat::<Complex64>::from_fn(n, 1, |j, _| eval.green(&sites[j], y));
    let sol = k.solve(gy.as_ref())?;
    let corr: Complex64 = (0..n).map(|j| eval.green(x, &sites[j]) * sol[(j, 0)]).sum();
    Ok(base + corr)
}
