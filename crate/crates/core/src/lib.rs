//! Point interactions in one, two and three dimensions.
//!
//! The spectrum of `-Δ` perturbed by delta interactions at a finite set of
//! points is encoded in the zeros of a finite characteristic matrix `K(E)`.
//! This crate assembles that matrix in free space and in boxes with
//! Dirichlet, Neumann or periodic walls, locates and counts eigenvalues,
//! samples random coupling fields and runs the statistics used to study the
//! local spectral structure of random point-interaction models.

pub mod bessel;
pub mod disorder;
pub mod domain;
pub mod error;
pub mod greens;
pub mod kmatrix;
pub mod oracles;
pub mod ensemble;
pub mod spectra;
pub mod stats;

pub use domain::{BoundaryCondition, DomainSpec, Point};
pub use error::{Error, Result};
pub use greens::{Dimension, SpectralParam};
