//! Forward iteration: orbits, itinerary matrices, critical-segment images
//! and sensitivity diagnostics.

mod critical;

pub use critical::{convex_hull, critical_images, CriticalImages, CriticalOptions, Segment, SegmentImage};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};
use crate::map_model::PwlMap;

/// Divergence radius.
pub const R_DIV: f64 = 1e8;
/// Radius of the convergence ball around the fixed point.
pub const EPS_FIX: f64 = 1e-10;
pub const DEFAULT_TRANSIENT: usize = 10_000;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitOptions {
    pub r_div: f64,
    pub eps_fix: f64,
    /// First step whose point is kept in [`Orbit::points`].
    pub record_from: usize,
    /// Keep every `record_stride`-th point after `record_from`.
    pub record_stride: usize,
    /// When false no points are kept (the itinerary still is).
    pub record_points: bool,
    pub record_itinerary: bool,
    /// Stop as soon as the orbit is inside the convergence ball of a
    /// contracting piece.
    pub stop_on_convergence: bool,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            r_div: R_DIV,
            eps_fix: EPS_FIX,
            record_from: 0,
            record_stride: 1,
            record_points: true,
            record_itinerary: true,
            stop_on_convergence: true,
        }
    }
}

impl OrbitOptions {
    fn validate(&self) -> Result<()> {
        if !(self.r_div > self.eps_fix && self.eps_fix > 0.0) {
            return Err(Error::InvalidOption(format!(
                "need r_div > eps_fix > 0, got r_div = {}, eps_fix = {}",
                self.r_div, self.eps_fix
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidOption("record_stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrbitStatus {
    Bounded,
    /// Entered the `eps_fix` ball of the fixed point of a contracting piece.
    /// For the affine catalog map this is the fixed point of the governing
    /// piece rather than the origin.
    ConvergedToOrigin,
    Diverged,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitPoint {
    pub step: usize,
    pub point: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub initial: Point,
    pub points: Vec<OrbitPoint>,
    /// Region index of `X_j` for every step `j` taken (the symbolic sequence).
    pub itinerary: Vec<u8>,
    pub status: OrbitStatus,
    pub steps: usize,
    pub last: Point,
}

/// Classification of a single point against the thresholds.
#[inline]
fn point_status(map: &PwlMap, x: &Point, region: usize, opts: &OrbitOptions) -> Option<OrbitStatus> {
    if !x.is_finite() || x.norm_sq() > opts.r_div * opts.r_div {
        return Some(OrbitStatus::Diverged);
    }
    if opts.stop_on_convergence {
        let info = map.piece_info(region);
        if info.contracting {
            if let Some(fp) = info.fixed_point {
                if (*x - fp).norm_sq() < opts.eps_fix * opts.eps_fix {
                    return Some(OrbitStatus::ConvergedToOrigin);
                }
            }
        }
    }
    None
}

/// Iterates `map` from `x0` for at most `n_max` steps, stopping early on
/// divergence or (optionally) convergence.
pub fn iterate(map: &PwlMap, x0: &Point, n_max: usize, opts: &OrbitOptions) -> Result<Orbit> {
    opts.validate()?;
    if n_max == 0 {
        return Err(Error::InvalidOption("n_max must be at least 1".into()));
    }
    map.region_of(x0)?;
    let mut points = Vec::new();
    let mut itinerary = Vec::new();
    if opts.record_itinerary {
        itinerary.reserve(n_max.min(1 << 20));
    }
    let mut x = *x0;
    let mut status = OrbitStatus::Bounded;
    let mut steps = 0;
    loop {
        let r = map.locate(&x);
        if let Some(s) = point_status(map, &x, r, opts) {
            status = s;
            break;
        }
        if opts.record_points
            && steps >= opts.record_from
            && (steps - opts.record_from).is_multiple_of(opts.record_stride)
        {
            points.push(OrbitPoint { step: steps, point: x });
        }
        if steps == n_max {
            break;
        }
        if opts.record_itinerary {
            itinerary.push(r as u8);
        }
        x = map.regions()[r].piece.apply(&x);
        steps += 1;
    }
    Ok(Orbit {
        initial: *x0,
        points,
        itinerary,
        status,
        steps,
        last: x,
    })
}

/// Ordered Jacobian product `A_k = J_{j_k} ... J_{j_1}` along the first `k`
/// steps of the orbit of `x0`.
pub fn itinerary_matrix(map: &PwlMap, x0: &Point, k: usize) -> Result<Matrix> {
    map.region_of(x0)?;
    let mut a = Matrix::identity(map.dim());
    let mut x = *x0;
    for step in 0..k {
        if !x.is_finite() || x.norm() > R_DIV {
            return Err(Error::Diverged { step });
        }
        let r = map.locate(&x);
        a = *map.jacobian(r) * a;
        x = map.regions()[r].piece.apply(&x);
    }
    if !x.is_finite() || x.norm() > R_DIV {
        return Err(Error::Diverged { step: k });
    }
    Ok(a)
}

/// Product of Jacobians for a given symbolic sequence (first symbol applied first).
pub fn sequence_matrix(map: &PwlMap, sequence: &[u8]) -> Matrix {
    sequence
        .iter()
        .fold(Matrix::identity(map.dim()), |acc, &r| *map.jacobian(r as usize) * acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTime {
    At(usize),
    Never(usize),
}

/// First step at which the orbits of `x0` and `x0 + eps * direction` lie in
/// different regions. `direction` defaults to the first coordinate axis.
pub fn sensitivity_split_time(
    map: &PwlMap,
    x0: &Point,
    eps: f64,
    n_max: usize,
    direction: Option<Point>,
) -> Result<SplitTime> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidOption(format!("separation must be >= 0, got {eps}")));
    }
    map.region_of(x0)?;
    let dir = match direction {
        Some(d) => {
            let n = d.norm();
            if n == 0.0 || d.dim() != map.dim() {
                return Err(Error::InvalidOption("direction must be a nonzero vector of the map dimension".into()));
            }
            d.scale(1.0 / n)
        }
        None => Point::unit_first(map.dim()),
    };
    let mut a = *x0;
    let mut b = *x0 + dir.scale(eps);
    for step in 0..=n_max {
        for p in [&a, &b] {
            if !p.is_finite() || p.norm() > R_DIV {
                return Err(Error::Diverged { step });
            }
        }
        let (ra, rb) = (map.locate(&a), map.locate(&b));
        if ra != rb {
            return Ok(SplitTime::At(step));
        }
        if step == n_max {
            break;
        }
        a = map.regions()[ra].piece.apply(&a);
        b = map.regions()[rb].piece.apply(&b);
    }
    Ok(SplitTime::Never(n_max))
}
