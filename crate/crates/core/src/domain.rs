//! Boxes, interaction lattices and the boundary-condition Green's functions
//! `G^X = G_0 - c^X` built from image sums.
//!
//! A source `y` in a box of sides `L_i` has, per axis, the images
//! `2nL + y` (sign `+1`) and `2nL - y` (sign `-1` for Dirichlet, `+1` for
//! Neumann); periodic boxes use the translates `y + nL`. The full image set is
//! the product over axes with the product of signs. For `Re κ > 0` the sum
//! converges exponentially; it is cut at a radius chosen from a rigorous
//! geometric tail bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{free_kernel, free_kernel_bound, Dimension, Scalar, SpectralParam};

/// Largest image index per axis before the sum is declared non-convergent.
const MAX_IMAGE_INDEX: i64 = 60;
const AXIS_CAPACITY: usize = 4 * MAX_IMAGE_INDEX as usize + 2;

/// Minimum distance from an interaction point to the box boundary.
pub const BOUNDARY_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn new1(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }
    pub fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }
    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > 3 {
            return Err(Error::InvalidArgument(format!(
                "a point needs 1 to 3 coordinates, got {}",
                coords.len()
            )));
        }
        let mut p = [0.0; 3];
        p[..coords.len()].copy_from_slice(coords);
        Ok(Point(p))
    }

    pub fn distance(&self, other: &Point, dim: Dimension) -> f64 {
        (0..dim.get())
            .map(|i| (self.0[i] - other.0[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
    Periodic,
    /// No boundary: the potential is confined to the box but the Laplacian
    /// acts on all of R^d.
    FreeSpace,
}

/// Geometry of one finite-volume problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    dim: Dimension,
    origin: Point,
    sides: [f64; 3],
    bc: BoundaryCondition,
    lattice: Vec<Point>,
}

impl DomainSpec {
    /// The cube `[0, L]^d` with the default lattice `(Z^d + 1/2) ∩ [0, L]^d`.
    pub fn cube(dim: Dimension, side: f64, bc: BoundaryCondition) -> Result<Self> {
        let sides = [side; 3];
        let lattice = default_lattice(dim, Point([0.0; 3]), sides)?;
        Self::boxed(dim, Point([0.0; 3]), sides, bc, lattice)
    }

    /// The cube `[0, L]^d` with a caller-supplied set of interaction points.
    pub fn with_lattice(
        dim: Dimension,
        side: f64,
        bc: BoundaryCondition,
        lattice: Vec<Point>,
    ) -> Result<Self> {
        Self::boxed(dim, Point([0.0; 3]), [side; 3], bc, lattice)
    }

    /// A general axis-aligned box `origin + [0, sides_0] x ... `.
    pub fn boxed(
        dim: Dimension,
        origin: Point,
        sides: [f64; 3],
        bc: BoundaryCondition,
        lattice: Vec<Point>,
    ) -> Result<Self> {
        let d = dim.get();
        if sides[..d].iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("box sides must be positive, got {:?}", &sides[..d])));
        }
        let mut clean_sides = [0.0; 3];
        clean_sides[..d].copy_from_slice(&sides[..d]);
        let mut clean_origin = [0.0; 3];
        clean_origin[..d].copy_from_slice(&origin.0[..d]);
        let lattice: Vec<Point> = lattice
            .into_iter()
            .map(|p| {
                let mut q = [0.0; 3];
                q[..d].copy_from_slice(&p.0[..d]);
                Point(q)
            })
            .collect();
        let spec = DomainSpec {
            dim,
            origin: Point(clean_origin),
            sides: clean_sides,
            bc,
            lattice,
        };
        spec.validate_lattice()?;
        Ok(spec)
    }

    fn validate_lattice(&self) -> Result<()> {
        let d = self.dim.get();
        if self.bc != BoundaryCondition::FreeSpace {
            for p in &self.lattice {
                let margin = self.boundary_distance(p);
                if margin < BOUNDARY_MARGIN - 1e-12 {
                    return Err(Error::Domain {
                        op: "DomainSpec",
                        detail: format!(
                            "lattice point {:?} is {margin} from the boundary (< {BOUNDARY_MARGIN})",
                            &p.0[..d]
                        ),
                    });
                }
            }
        }
        let mut sorted: Vec<&Point> = self.lattice.iter().collect();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite coordinates"));
        if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain {
                op: "DomainSpec",
                detail: "lattice points must be pairwise distinct".into(),
            });
        }
        if self.lattice.iter().any(|p| p.0.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidArgument("lattice coordinates must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> Dimension {
        self.dim
    }
    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn sides(&self) -> [f64; 3] {
        self.sides
    }
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }
    pub fn lattice(&self) -> &[Point] {
        &self.lattice
    }
    pub fn num_sites(&self) -> usize {
        self.lattice.len()
    }

    /// Volume `|Λ|` of the box.
    pub fn volume(&self) -> f64 {
        self.sides[..self.dim.get()].iter().product()
    }

    /// Same geometry and lattice, different boundary condition.
    pub fn with_bc(&self, bc: BoundaryCondition) -> Result<Self> {
        Self::boxed(self.dim, self.origin, self.sides, bc, self.lattice.clone())
    }

    /// Distance from `p` to the boundary (negative outside).
    pub fn boundary_distance(&self, p: &Point) -> f64 {
        (0..self.dim.get())
            .map(|i| {
                let local = p.0[i] - self.origin.0[i];
                local.min(self.sides[i] - local)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `p` lies in the open box.
    pub fn contains(&self, p: &Point) -> bool {
        self.boundary_distance(p) > 0.0
    }
}

/// `(Z^d + 1/2)` points of the box, first axis fastest.
pub fn default_lattice(dim: Dimension, origin: Point, sides: [f64; 3]) -> Result<Vec<Point>> {
    let d = dim.get();
    let mut counts = [1usize; 3];
    for i in 0..d {
        if !(sides[i] >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "side {} too small to hold a lattice point with margin 1/2",
                sides[i]
            )));
        }
        counts[i] = (sides[i] + 1e-9).floor() as usize;
    }
    let mut pts = Vec::with_capacity(counts[..d].iter().product());
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let idx = [i, j, k];
                let mut p = [0.0; 3];
                for a in 0..d {
                    p[a] = origin.0[a] + idx[a] as f64 + 0.5;
                }
                pts.push(Point(p));
            }
        }
    }
    Ok(pts)
}

/// One image of a source point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Image {
    pub position: Point,
    pub sign: f64,
}

/// The truncated image set of a source: every image within
/// `truncation_radius` of the box, and a bound on everything dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageExpansion {
    pub images: Vec<Image>,
    pub truncation_radius: f64,
    pub tail_bound: f64,
}

/// `G^X(x, y; z)` for the boundary condition of `spec`, accurate to `tol`.
pub fn domain_green(
    spec: &DomainSpec,
    x: &Point,
    y: &Point,
    param: &SpectralParam,
    tol: f64,
) -> Result<Complex64> {
    let eval = GreenEvaluator::new(spec, param.kappa(), tol)?;
    eval.check_points("domain_green", x, y)?;
    if spec.dim != Dimension::One && x.distance(y, spec.dim) == 0.0 {
        return Err(Error::Domain {
            op: "domain_green",
            detail: "x = y is singular for d = 2, 3".into(),
        });
    }
    Ok(eval.green(x, y))
}

/// The corrector `c(x) = G_0(x, y) - G^X(x, y)`; finite at `x = y`.
pub fn corrector(
    spec: &DomainSpec,
    x: &Point,
    y: &Point,
    param: &SpectralParam,
    tol: f64,
) -> Result<Complex64> {
    let eval = GreenEvaluator::new(spec, param.kappa(), tol)?;
    eval.check_points("corrector", x, y)?;
    Ok(eval.corrector(x, y))
}

/// Images of `y` that can contribute to `G^X(x, y)` for some `x` in the box.
pub fn image_expansion(
    spec: &DomainSpec,
    y: &Point,
    param: &SpectralParam,
    tol: f64,
) -> Result<ImageExpansion> {
    let k = param.kappa();
    let eval = GreenEvaluator::new(spec, k, tol)?;
    eval.check_points("image_expansion", y, y)?;
    let d = spec.dim.get();
    let mut images = Vec::new();
    let mut axis: [Vec<(f64, f64)>; 3] = Default::default();
    for a in 0..d {
        let local = y.0[a] - spec.origin.0[a];
        let len = spec.sides[a];
        for (pos, sign) in axis_images(spec.bc, local, len, eval.max_index) {
            let gap = if pos < 0.0 {
                -pos
            } else if pos > len {
                pos - len
            } else {
                0.0
            };
            if gap <= eval.cutoff {
                axis[a].push((pos + spec.origin.0[a], sign));
            }
        }
    }
    for a in d..3 {
        axis[a].push((0.0, 1.0));
    }
    for &(p0, s0) in &axis[0] {
        for &(p1, s1) in &axis[1] {
            for &(p2, s2) in &axis[2] {
                let position = Point([p0, p1, p2]);
                let gap2: f64 = (0..d)
                    .map(|a| {
                        let lo = spec.origin.0[a];
                        let hi = lo + spec.sides[a];
                        let c = position.0[a];
                        if c < lo {
                            (lo - c).powi(2)
                        } else if c > hi {
                            (c - hi).powi(2)
                        } else {
                            0.0
                        }
                    })
                    .sum();
                if gap2.sqrt() <= eval.cutoff {
                    images.push(Image { position, sign: s0 * s1 * s2 });
                }
            }
        }
    }
    Ok(ImageExpansion {
        images,
        truncation_radius: eval.cutoff,
        tail_bound: eval.tail_bound,
    })
}

fn axis_images(
    bc: BoundaryCondition,
    local: f64,
    len: f64,
    max_index: i64,
) -> impl Iterator<Item = (f64, f64)> {
    let reflect_sign = match bc {
        BoundaryCondition::Dirichlet => -1.0,
        _ => 1.0,
    };
    (-max_index..=max_index).flat_map(move |n| {
        let shift = n as f64;
        let v: [(f64, f64); 2] = match bc {
            BoundaryCondition::Periodic => [(local + shift * len, 1.0), (f64::NAN, 0.0)],
            BoundaryCondition::FreeSpace => [(local, 1.0), (f64::NAN, 0.0)],
            _ => [
                (2.0 * shift * len + local, 1.0),
                (2.0 * shift * len - local, reflect_sign),
            ],
        };
        v.into_iter().filter(|(_, s)| *s != 0.0)
    })
}

#[derive(Clone, Copy)]
struct AxisTerm {
    offset: f64,
    sign: f64,
    identity: bool,
}

/// Evaluates `G^X` and `c^X` for one box at one `κ`. Immutable once built.
#[derive(Debug, Clone)]
pub(crate) struct GreenEvaluator<S: Scalar> {
    dim: Dimension,
    bc: BoundaryCondition,
    origin: Point,
    sides: [f64; 3],
    kappa: S,
    cutoff: f64,
    tail_bound: f64,
    max_index: i64,
}

impl<S: Scalar> GreenEvaluator<S> {
    pub(crate) fn new(spec: &DomainSpec, kappa: S, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let kc = kappa.to_complex();
        if !(kc.re > 0.0) {
            return Err(Error::InvalidArgument(format!("Re kappa must be positive, got {kc}")));
        }
        let mut eval = GreenEvaluator {
            dim: spec.dim,
            bc: spec.bc,
            origin: spec.origin,
            sides: spec.sides,
            kappa,
            cutoff: 0.0,
            tail_bound: 0.0,
            max_index: 0,
        };
        if spec.bc == BoundaryCondition::FreeSpace {
            return Ok(eval);
        }
        let (cutoff, tail) = eval.choose_cutoff(kc.re, kc.norm(), tol)?;
        eval.tail_bound = tail;
        eval.set_cutoff(cutoff, kc.re, tol)?;
        Ok(eval)
    }

    fn set_cutoff(&mut self, cutoff: f64, kappa_re: f64, tol: f64) -> Result<()> {
        let d = self.dim.get();
        let lmin = self.sides[..d].iter().cloned().fold(f64::INFINITY, f64::min);
        let period = match self.bc {
            BoundaryCondition::Periodic => lmin,
            _ => 2.0 * lmin,
        };
        let needed = (cutoff / period).ceil() as i64 + 1;
        if needed > MAX_IMAGE_INDEX {
            return Err(Error::Convergence {
                tol,
                kappa_l: kappa_re * lmin,
                required: kappa_re * lmin * needed as f64 / MAX_IMAGE_INDEX as f64,
            });
        }
        self.cutoff = cutoff;
        self.max_index = needed;
        Ok(())
    }

    /// Smallest radius (in steps of a quarter side) whose tail bound is below `tol`.
    fn choose_cutoff(&self, kappa_re: f64, kappa_abs: f64, tol: f64) -> Result<(f64, f64)> {
        let d = self.dim.get();
        let lmin = self.sides[..d].iter().cloned().fold(f64::INFINITY, f64::min);
        let step = 0.25 * lmin;
        let limit = 2.0 * lmin * MAX_IMAGE_INDEX as f64;
        let mut radius = step;
        while radius <= limit {
            let tail = self.tail(radius, kappa_re, kappa_abs);
            if tail <= tol {
                return Ok((radius, tail));
            }
            radius += step;
        }
        Err(Error::Convergence {
            tol,
            kappa_l: kappa_re * lmin,
            required: ((1.0 / tol).ln() / (2.0 * MAX_IMAGE_INDEX as f64)).max(kappa_re * lmin),
        })
    }

    /// Bound on the summed magnitude of all images farther than `radius`.
    fn tail(&self, radius: f64, kappa_re: f64, kappa_abs: f64) -> f64 {
        let d = self.dim.get();
        let lmin = self.sides[..d].iter().cloned().fold(f64::INFINITY, f64::min);
        let count = |rho: f64| -> f64 {
            (0..d).map(|a| 2.0 * rho / self.sides[a] + 4.0).product()
        };
        let mut total = 0.0;
        for k in 0..100_000 {
            let inner = radius + k as f64 * lmin;
            let term = count(inner + lmin) * free_kernel_bound(self.dim, inner, kappa_re, kappa_abs);
            total += term;
            if term <= 1e-16 * total || term == 0.0 {
                break;
            }
        }
        total
    }

    pub(crate) fn check_points(&self, op: &'static str, x: &Point, y: &Point) -> Result<()> {
        if self.bc == BoundaryCondition::FreeSpace {
            return Ok(());
        }
        let inside = |p: &Point| {
            (0..self.dim.get()).all(|i| {
                let local = p.0[i] - self.origin.0[i];
                local > 0.0 && local < self.sides[i]
            })
        };
        if !inside(x) || !inside(y) {
            return Err(Error::Domain {
                op,
                detail: "points must lie in the open box".into(),
            });
        }
        Ok(())
    }

    fn axis_terms(&self, axis: usize, x: &Point, y: &Point, out: &mut [AxisTerm; AXIS_CAPACITY]) -> usize {
        let local_x = x.0[axis] - self.origin.0[axis];
        let local_y = y.0[axis] - self.origin.0[axis];
        let len = self.sides[axis];
        let mut n = 0;
        let mut push = |offset: f64, sign: f64, identity: bool, n: &mut usize| {
            if identity || offset.abs() <= self.cutoff {
                out[*n] = AxisTerm { offset, sign, identity };
                *n += 1;
            }
        };
        match self.bc {
            BoundaryCondition::FreeSpace => push(local_x - local_y, 1.0, true, &mut n),
            BoundaryCondition::Periodic => {
                for k in -self.max_index..=self.max_index {
                    push(local_x - local_y - k as f64 * len, 1.0, k == 0, &mut n);
                }
            }
            BoundaryCondition::Dirichlet | BoundaryCondition::Neumann => {
                let reflect = if self.bc == BoundaryCondition::Dirichlet { -1.0 } else { 1.0 };
                for k in -self.max_index..=self.max_index {
                    let shift = 2.0 * k as f64 * len;
                    push(local_x - shift - local_y, 1.0, k == 0, &mut n);
                    push(local_x - shift + local_y, reflect, false, &mut n);
                }
            }
        }
        n
    }

    /// Signed sum of `G_0` over images, optionally skipping the identity image.
    fn image_sum(&self, x: &Point, y: &Point, include_identity: bool) -> S {
        let d = self.dim.get();
        let mut terms = [[AxisTerm { offset: 0.0, sign: 1.0, identity: true }; AXIS_CAPACITY]; 3];
        let mut counts = [1usize; 3];
        for a in 0..d {
            counts[a] = self.axis_terms(a, x, y, &mut terms[a]);
        }
        let cut2 = self.cutoff * self.cutoff;
        let mut acc = S::from_real(0.0);
        for t0 in &terms[0][..counts[0]] {
            let r0 = t0.offset * t0.offset;
            if !t0.identity && r0 > cut2 {
                continue;
            }
            for t1 in &terms[1][..counts[1]] {
                let r1 = r0 + t1.offset * t1.offset;
                let id01 = t0.identity && t1.identity;
                if !id01 && r1 > cut2 {
                    continue;
                }
                for t2 in &terms[2][..counts[2]] {
                    let r2 = r1 + t2.offset * t2.offset;
                    let identity = id01 && t2.identity;
                    if identity {
                        if !include_identity {
                            continue;
                        }
                    } else if r2 > cut2 {
                        continue;
                    }
                    let sign = t0.sign * t1.sign * t2.sign;
                    acc = acc + S::from_real(sign) * free_kernel(self.dim, r2.sqrt(), self.kappa);
                }
            }
        }
        acc
    }

    /// `G^X(x, y)`; requires `x != y` in d = 2, 3.
    #[inline]
    pub(crate) fn green(&self, x: &Point, y: &Point) -> S {
        self.image_sum(x, y, true)
    }

    /// `c^X(x, y) = G_0(x, y) - G^X(x, y)`.
    #[inline]
    pub(crate) fn corrector(&self, x: &Point, y: &Point) -> S {
        -self.image_sum(x, y, false)
    }
}
