//! Independent reference solvers used to validate the characteristic-matrix
//! path. None of them touches `kmatrix` or `spectra` internals.

pub mod closed_form;
pub mod grid;
pub mod rank_one;
pub mod shooting;

pub use closed_form::{closed_form_centers, CenterState, Parity};
pub use grid::{grid_oracle_1d, GridSpectrum};
pub use rank_one::{rank_one_verify, RankOnePair, RankOneReport};
pub use shooting::{shoot_spectrum, ShootingProblem};

use crate::error::Result;

/// Brackets `[a, b)` each holding exactly one jump of a counting function
/// `N(E) = #{eigenvalues < E}`, refined by bisection down to width `min_width`.
/// Brackets still holding several eigenvalues at that width are returned with
/// their jump.
pub(crate) fn isolate(
    count: &dyn Fn(f64) -> Result<usize>,
    lo: f64,
    hi: f64,
    min_width: f64,
) -> Result<Vec<(f64, f64, usize)>> {
    let mut out = Vec::new();
    let mut stack = vec![(lo, hi, count(lo)?, count(hi)?)];
    while let Some((a, b, na, nb)) = stack.pop() {
        if nb <= na {
            continue;
        }
        let mid = 0.5 * (a + b);
        if nb - na == 1 || b - a <= min_width || mid <= a || mid >= b {
            out.push((a, b, nb - na));
            continue;
        }
        let nm = count(mid)?;
        stack.push((mid, b, nm, nb));
        stack.push((a, mid, na, nm));
    }
    out.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"));
    Ok(out)
}

/// Bisection on a sign change of `f` in `[a, b]` to floating-point resolution.
pub(crate) fn bisect_sign(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
