//! Point processes, estimators and goodness-of-fit tests.

pub mod estimators;
pub mod fit;
pub mod gof;
pub mod point_process;

pub use fit::{line_fit, log_log_fit, Estimate, LineFit};
pub use gof::{ks_exponential, pearson, poisson_tests, tv_poisson, PoissonReport};
pub use point_process::{
    block_counts, build_les, build_zeta, laplace_functional, les_sample, poisson_laplace, xi_zeta_gap, Block,
    LesWindow, PointSample, SubcubeArray, TestFunction, Tiling,
};
