//! First-return maps of a planar map on a segment of a ray `y = m x`.
//!
//! A point of the ray comes back to it only if the ray is an eigenvector of
//! the itinerary product along the way, so every branch of the return map
//! is linear with slope equal to that eigenvalue.

use rayon::prelude::*;

use crate::circle_map::CircleMap1D;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};
use crate::map_model::PwlMap;
use crate::orbit::{sequence_matrix, R_DIV};

pub const K_MAX: usize = 10_000;
pub const B_MAX: usize = 64;
pub const PROBES: usize = 2048;
pub const BISECTION_TOL: f64 = 1e-12;
pub const ANGLE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnOptions {
    pub k_max: usize,
    pub b_max: usize,
    pub probes: usize,
    pub bisection_tol: f64,
    /// Maximum angle between a returning iterate and the ray.
    pub angle_tol: f64,
    /// Landing window is the segment widened by this fraction of its length
    /// on each side, so that segments estimated from samples still catch
    /// the returns of their own points.
    pub slack: f64,
}

impl Default for ReturnOptions {
    fn default() -> Self {
        ReturnOptions {
            k_max: K_MAX,
            b_max: B_MAX,
            probes: PROBES,
            bisection_tol: BISECTION_TOL,
            angle_tol: ANGLE_TOL,
            slack: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnBranch {
    pub left: f64,
    pub right: f64,
    pub slope: f64,
    pub return_time: usize,
    pub sequence: Vec<u8>,
    pub matrix: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnMap1D {
    /// Slope of the ray.
    pub m: f64,
    pub domain: (f64, f64),
    pub branches: Vec<ReturnBranch>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReturnFailure {
    /// A probe did not come back within `k_max` steps.
    ReturnTime { abscissa: f64, k_max: usize },
    /// More than `b_max` distinct symbolic sequences on the segment.
    BranchCount { found: usize, b_max: usize },
    Unsupported(String),
}

impl std::fmt::Display for ReturnFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReturnFailure::ReturnTime { abscissa, k_max } => {
                write!(f, "return-time: x = {abscissa} did not return within {k_max} steps")
            }
            ReturnFailure::BranchCount { found, b_max } => {
                write!(f, "branch-count: more than {b_max} branches (at least {found})")
            }
            ReturnFailure::Unsupported(why) => write!(f, "unsupported: {why}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReturnOutcome {
    Map(ReturnMap1D),
    Failure(ReturnFailure),
}

impl ReturnOutcome {
    pub fn map(&self) -> Option<&ReturnMap1D> {
        match self {
            ReturnOutcome::Map(m) => Some(m),
            ReturnOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&ReturnFailure> {
        match self {
            ReturnOutcome::Map(_) => None,
            ReturnOutcome::Failure(f) => Some(f),
        }
    }
}

impl ReturnMap1D {
    pub fn breakpoints(&self) -> Vec<f64> {
        self.branches.iter().skip(1).map(|b| b.left).collect()
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.slope).collect()
    }

    pub fn branch_of(&self, x: f64) -> usize {
        self.branches
            .iter()
            .skip(1)
            .take_while(|b| b.left <= x)
            .count()
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.branches[self.branch_of(x)].slope * x
    }

    pub fn to_circle_map(&self) -> Result<CircleMap1D> {
        CircleMap1D::from_branches(self.breakpoints(), self.slopes(), Some(self.domain))
    }
}

struct Probe {
    x: f64,
    landing: f64,
    sequence: Vec<u8>,
}

/// Iterates `(x, m x)` until it lands back on the same half-line inside the
/// window. `Ok(None)` if that takes more than `k_max` steps.
fn probe(map: &PwlMap, m: f64, x: f64, window: (f64, f64), opts: &ReturnOptions) -> Result<Option<Probe>> {
    let norm_dir = (1.0 + m * m).sqrt();
    let mut p = Point::xy(x, m * x);
    let mut sequence = Vec::new();
    for _ in 0..opts.k_max {
        let r = map.locate(&p);
        sequence.push(r as u8);
        p = map.regions()[r].piece.apply(&p);
        let n = p.norm();
        if !p.is_finite() || n > R_DIV {
            return Err(Error::ProbeEscaped {
                abscissa: x,
                what: "return-map probe",
            });
        }
        let sin = (p.x() * m - p.y()).abs() / (n * norm_dir);
        if sin <= opts.angle_tol && p.x() * x > 0.0 && p.x() >= window.0 && p.x() <= window.1 {
            return Ok(Some(Probe {
                x,
                landing: p.x(),
                sequence,
            }));
        }
    }
    Ok(None)
}

/// Return map on the abscissae `seg` of the ray `y = m x`.
pub fn build_return_map(map: &PwlMap, m: f64, seg: (f64, f64), opts: &ReturnOptions) -> Result<ReturnOutcome> {
    if map.dim() != 2 {
        return Ok(ReturnOutcome::Failure(ReturnFailure::Unsupported(format!(
            "dimension {}",
            map.dim()
        ))));
    }
    if !map.is_homogeneous() {
        return Ok(ReturnOutcome::Failure(ReturnFailure::Unsupported(
            "map has affine pieces".into(),
        )));
    }
    let (a, b) = (seg.0.min(seg.1), seg.0.max(seg.1));
    if !(a.is_finite() && b.is_finite() && m.is_finite()) || a == b {
        return Err(Error::InvalidOption(format!("bad segment [{a}, {b}] on slope {m}")));
    }
    if a <= 0.0 && b >= 0.0 {
        return Err(Error::SegmentContainsOrigin(a, b));
    }
    if opts.probes < 2 || opts.k_max == 0 {
        return Err(Error::InvalidOption("need at least 2 probes and k_max >= 1".into()));
    }
    let pad = opts.slack * (b - a);
    let window = (a - pad, b + pad);
    let n = opts.probes;
    let probes: Vec<Option<Probe>> = (0..n)
        .into_par_iter()
        .map(|i| probe(map, m, a + (b - a) * (i as f64 + 0.5) / n as f64, window, opts))
        .collect::<Result<_>>()?;
    let mut done = Vec::with_capacity(n);
    for (i, p) in probes.into_iter().enumerate() {
        match p {
            Some(p) => done.push(p),
            None => {
                return Ok(ReturnOutcome::Failure(ReturnFailure::ReturnTime {
                    abscissa: a + (b - a) * (i as f64 + 0.5) / n as f64,
                    k_max: opts.k_max,
                }))
            }
        }
    }

    // contiguous runs of identical sequences
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 1..=done.len() {
        if i == done.len() || done[i].sequence != done[start].sequence {
            runs.push((start, i - 1));
            start = i;
        }
    }
    if runs.len() > opts.b_max {
        return Ok(ReturnOutcome::Failure(ReturnFailure::BranchCount {
            found: runs.len(),
            b_max: opts.b_max,
        }));
    }

    let mut cuts = vec![a];
    for w in runs.windows(2) {
        let left = &done[w[0].1];
        let (mut lo, mut hi) = (left.x, done[w[1].0].x);
        let tol = opts.bisection_tol * lo.abs().max(hi.abs()).max(1.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match probe(map, m, mid, window, opts)? {
                Some(p) if p.sequence == left.sequence => lo = mid,
                Some(_) => hi = mid,
                None => {
                    return Ok(ReturnOutcome::Failure(ReturnFailure::ReturnTime {
                        abscissa: mid,
                        k_max: opts.k_max,
                    }))
                }
            }
        }
        cuts.push(0.5 * (lo + hi));
    }
    cuts.push(b);

    let branches = runs
        .iter()
        .enumerate()
        .map(|(j, &(s, e))| {
            let rep = &done[(s + e) / 2];
            ReturnBranch {
                left: cuts[j],
                right: cuts[j + 1],
                slope: rep.landing / rep.x,
                return_time: rep.sequence.len(),
                sequence: rep.sequence.clone(),
                matrix: sequence_matrix(map, &rep.sequence),
            }
        })
        .collect();
    Ok(ReturnOutcome::Map(ReturnMap1D {
        m,
        domain: (a, b),
        branches,
    }))
}

/// Largest `|A_k (1, m) - lambda (1, m)|` over the branches.
pub fn verify_branch_eigen(rm: &ReturnMap1D) -> f64 {
    let v = Point::xy(1.0, rm.m);
    rm.branches
        .iter()
        .map(|b| (b.matrix.apply(&v) - v.scale(b.slope)).norm())
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport {
    pub side: Side,
    pub conforms: bool,
    pub violations: Vec<String>,
    /// Branches with slope exactly 1 (every point is a fixed point of the return).
    pub identity_branches: Vec<usize>,
}

/// Checks the two-branch shape of a return map: on a segment with `x > 0`
/// the first branch expands and the second contracts, mirrored for `x < 0`.
pub fn return_geometry_check(rm: &ReturnMap1D) -> GeometryReport {
    let side = if rm.domain.0 > 0.0 {
        Side::Positive
    } else {
        Side::Negative
    };
    let mut violations = Vec::new();
    let identity_branches: Vec<usize> = rm
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| (b.slope - 1.0).abs() <= 1e-12)
        .map(|(i, _)| i)
        .collect();
    for &i in &identity_branches {
        violations.push(format!("branch {i} has slope 1 (nonhyperbolic identity branch)"));
    }
    if rm.branches.len() != 2 {
        violations.push(format!("expected two branches, found {}", rm.branches.len()));
    } else {
        let (first, second) = (rm.branches[0].slope, rm.branches[1].slope);
        let (want_first_expanding, label) = match side {
            Side::Positive => (true, "right-side"),
            Side::Negative => (false, "left-side"),
        };
        let ok = if want_first_expanding {
            first > 1.0 && second > 0.0 && second < 1.0
        } else {
            first > 0.0 && first < 1.0 && second > 1.0
        };
        if !ok {
            violations.push(format!(
                "{label} segment needs slopes ({}) but has ({first}, {second})",
                if want_first_expanding { "> 1, < 1" } else { "< 1, > 1" }
            ));
        }
    }
    GeometryReport {
        side,
        conforms: violations.is_empty(),
        violations,
        identity_branches,
    }
}

/// Searches for a sub-segment on which the return map has exactly one
/// breakpoint: for each pair of adjacent branches, rebuilds the map on the
/// interval their slopes make invariant. Heuristic; `None` if no pair works.
pub fn single_breakpoint_segment(map: &PwlMap, rm: &ReturnMap1D, opts: &ReturnOptions) -> Result<Option<ReturnMap1D>> {
    if rm.branches.len() == 2 {
        return Ok(Some(rm.clone()));
    }
    for w in rm.branches.windows(2) {
        let xi = w[1].left;
        let cm = match CircleMap1D::two_branch(w[0].slope, w[1].slope, xi) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let Ok((lo, hi)) = crate::circle_map::invariant_interval(&cm) else {
            continue;
        };
        if lo * hi <= 0.0 {
            continue;
        }
        if let ReturnOutcome::Map(sub) = build_return_map(map, rm.m, (lo, hi), opts)? {
            if sub.branches.len() == 2 {
                return Ok(Some(sub));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{make_catalog_map, CatalogId, Params};

    fn saddle_segment_map() -> PwlMap {
        make_catalog_map(
            &CatalogId::T2,
            &Params::new()
                .with("al", 0.8)
                .with("bl", 2.0)
                .with("dl", 0.9)
                .with("ar", 1.1)
                .with("br", 1.5)
                .with("dr", -0.8),
        )
        .unwrap()
    }

    #[test]
    fn saddle_segment_two_unit_time_branches() {
        let rm = build_return_map(&saddle_segment_map(), 0.0, (-1.1, -0.8), &ReturnOptions::default())
            .unwrap()
            .map()
            .cloned()
            .unwrap();
        assert_eq!(rm.branches.len(), 2);
        assert_eq!(rm.slopes(), vec![0.8, 1.1]);
        assert!(rm.branches.iter().all(|b| b.return_time == 1));
        assert!((rm.branches[1].left + 1.0).abs() < 1e-11);
        assert!(verify_branch_eigen(&rm) < 1e-12);
        let g = return_geometry_check(&rm);
        assert_eq!(g.side, Side::Negative);
        assert!(g.conforms, "{:?}", g.violations);
    }

    #[test]
    fn corrupted_slope_is_caught() {
        let mut rm = build_return_map(&saddle_segment_map(), 0.0, (-1.1, -0.8), &ReturnOptions::default())
            .unwrap()
            .map()
            .cloned()
            .unwrap();
        rm.branches[0].slope = 0.7;
        assert!(verify_branch_eigen(&rm) > 0.05);
    }

    #[test]
    fn geometry_violations() {
        let mut rm = build_return_map(&saddle_segment_map(), 0.0, (-1.1, -0.8), &ReturnOptions::default())
            .unwrap()
            .map()
            .cloned()
            .unwrap();
        rm.branches[0].slope = 1.2;
        assert!(!return_geometry_check(&rm).conforms);
        rm.branches[0].slope = 1.0;
        let g = return_geometry_check(&rm);
        assert_eq!(g.identity_branches, vec![0]);
        assert!(!g.conforms);
    }

    #[test]
    fn segment_through_origin_is_rejected() {
        assert!(matches!(
            build_return_map(&saddle_segment_map(), 0.0, (-1.0, 1.0), &ReturnOptions::default()),
            Err(Error::SegmentContainsOrigin(..))
        ));
    }

    #[test]
    fn return_map_feeds_circle_map() {
        let rm = build_return_map(&saddle_segment_map(), 0.0, (-1.1, -0.8), &ReturnOptions::default())
            .unwrap()
            .map()
            .cloned()
            .unwrap();
        let cm = rm.to_circle_map().unwrap();
        let r = crate::circle_map::rotation_number(&cm, &Default::default()).unwrap();
        assert!((r.rho - 0.29930).abs() < 1e-3);
    }
}
