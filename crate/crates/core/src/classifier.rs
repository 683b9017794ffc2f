//! Attractor classification: fixed point, divergence, segments reducible to
//! a circle map, or a weird quasiperiodic attractor (WQA).
//!
//! The cascade is a heuristic. A bounded orbit whose tail lies on finitely
//! many lines through the origin and whose return map on one of them is a
//! circle map is a segment attractor. A bounded orbit with neither property
//! is a WQA. Anything that does not fit cleanly is UNRESOLVED.

use rstar::{primitives::GeomWithData, RTree};

use crate::circle_map::{cm_classify, CircleMap1D, CmVerdict, RotationOptions, RotationResult};
use crate::error::{Error, Result};
use crate::first_return::{
    build_return_map, single_breakpoint_segment, ReturnFailure, ReturnMap1D, ReturnOptions, ReturnOutcome,
};
use crate::linalg::{Matrix, Point};
use crate::map_model::{CatalogId, Params, PwlMap};
use crate::orbit::{iterate, OrbitOptions, OrbitStatus, SplitTime, DEFAULT_SAMPLES, DEFAULT_TRANSIENT, R_DIV};

pub const L_MAX: usize = 64;
pub const EPS_LINE: f64 = 1e-4;
pub const ANGULAR_BINS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions {
    pub transient: usize,
    pub samples: usize,
    pub r_div: f64,
    pub eps_fix: f64,
    pub l_max: usize,
    pub eps_line: f64,
    pub angular_bins: usize,
    /// Longest period searched for in the tail.
    pub max_period: usize,
    pub lyapunov_steps: usize,
    /// Separation used for the sensitivity diagnostic; 0 disables it.
    pub sensitivity_eps: f64,
    pub return_opts: ReturnOptions,
    pub rotation_opts: RotationOptions,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            transient: DEFAULT_TRANSIENT,
            samples: DEFAULT_SAMPLES,
            r_div: R_DIV,
            eps_fix: crate::orbit::EPS_FIX,
            l_max: L_MAX,
            eps_line: EPS_LINE,
            angular_bins: ANGULAR_BINS,
            max_period: 1000,
            lyapunov_steps: DEFAULT_SAMPLES,
            sensitivity_eps: 1e-9,
            return_opts: ReturnOptions::default(),
            rotation_opts: RotationOptions::default(),
        }
    }
}

impl ClassifyOptions {
    fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            r_div: self.r_div,
            eps_fix: self.eps_fix,
            record_from: self.transient,
            record_itinerary: true,
            ..OrbitOptions::default()
        }
    }
}

/// Post-transient tail of an orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorSample {
    pub points: Vec<Point>,
    /// Region index of each point.
    pub regions: Vec<u8>,
    pub map_id: CatalogId,
    pub params: Params,
    pub initial: Point,
    pub transient: usize,
}

impl AttractorSample {
    pub fn from_points(points: Vec<Point>) -> Self {
        let n = points.len();
        AttractorSample {
            points,
            regions: vec![0; n],
            map_id: CatalogId::Custom("sample".into()),
            params: Params::new(),
            initial: Point::zeros(2),
            transient: 0,
        }
    }

    pub fn radius(&self) -> f64 {
        self.points.iter().map(Point::norm).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OmegaLimit {
    /// The orbit converged or diverged before the sample was complete.
    Terminal { status: OrbitStatus, step: usize },
    Sample(AttractorSample),
}

pub fn omega_limit_sample(map: &PwlMap, x0: &Point, opts: &ClassifyOptions) -> Result<OmegaLimit> {
    if opts.samples == 0 {
        return Err(Error::EmptySample);
    }
    let orbit = iterate(map, x0, opts.transient + opts.samples - 1, &opts.orbit_options())?;
    if orbit.status != OrbitStatus::Bounded {
        return Ok(OmegaLimit::Terminal {
            status: orbit.status,
            step: orbit.steps,
        });
    }
    let regions = orbit.points.iter().map(|p| map.locate(&p.point) as u8).collect();
    Ok(OmegaLimit::Sample(AttractorSample {
        points: orbit.points.into_iter().map(|p| p.point).collect(),
        regions,
        map_id: map.id().clone(),
        params: map.params().clone(),
        initial: *x0,
        transient: opts.transient,
    }))
}

/// A line through the origin with unit direction `direction`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportLine {
    pub direction: Point,
    /// Angle in `[0, pi)` for planar samples.
    pub angle: f64,
    pub count: usize,
    /// Largest distance of a member point from the line.
    pub scatter: f64,
}

impl SupportLine {
    /// Slope `m` of `y = m x`, `None` for a vertical line.
    pub fn slope(&self) -> Option<f64> {
        let d = self.direction;
        (d.x().abs() > 1e-12).then(|| d.y() / d.x())
    }
}

fn line_from_direction(u: Point, count: usize, scatter: f64) -> SupportLine {
    let angle = u.y().atan2(u.x()).rem_euclid(std::f64::consts::PI);
    SupportLine {
        direction: u,
        angle,
        count,
        scatter,
    }
}

/// Lines through the origin carrying the sample, if there are at most
/// `l_max` of them and every point lies within `eps_line * radius` of one.
pub fn line_support_test(sample: &AttractorSample, opts: &ClassifyOptions) -> Option<Vec<SupportLine>> {
    let pts: Vec<Point> = sample.points.iter().copied().filter(|p| p.norm() > 0.0).collect();
    if pts.is_empty() {
        return None;
    }
    let radius = sample.radius();
    let tol = opts.eps_line * radius;
    if pts[0].dim() == 2 {
        planar_lines(&pts, tol, opts)
    } else {
        spatial_lines(&pts, tol, opts.l_max)
    }
}

fn planar_lines(pts: &[Point], tol: f64, opts: &ClassifyOptions) -> Option<Vec<SupportLine>> {
    let pi = std::f64::consts::PI;
    let nb = opts.angular_bins.max(1);
    let mut angles: Vec<(f64, usize)> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (p.y().atan2(p.x()).rem_euclid(pi), i))
        .collect();
    angles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let bin = |a: f64| (((a / pi) * nb as f64) as usize).min(nb - 1);

    // occupied bins, grouped into runs of adjacent bins
    let mut occupied = vec![false; nb];
    for &(a, _) in &angles {
        occupied[bin(a)] = true;
    }
    let runs = occupied.windows(2).filter(|w| w[0] && !w[1]).count() + usize::from(occupied[nb - 1]);
    if runs > opts.l_max {
        return None;
    }

    // inside the runs, separate lines by gaps in the exact angle
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev: Option<f64> = None;
    for &(a, i) in &angles {
        let split = match prev {
            None => true,
            Some(p) => a - p > opts.eps_line || bin(a) > bin(p) + 1,
        };
        if split {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(i);
        prev = Some(a);
    }
    // the angle wraps at pi: merge first and last group if they are one line
    if groups.len() > 1 {
        let first = angles[0].0;
        let last = angles[angles.len() - 1].0;
        if first + pi - last <= opts.eps_line {
            let tail = groups.pop().unwrap();
            groups[0].extend(tail);
        }
    }
    if groups.len() > opts.l_max {
        return None;
    }
    let mut lines = Vec::with_capacity(groups.len());
    for g in groups {
        // direction from the member farthest from the origin
        let far = g
            .iter()
            .map(|&i| pts[i])
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        let u = far.scale(1.0 / far.norm());
        let scatter = g.iter().map(|&i| pts[i].distance_to_line(&u)).fold(0.0, f64::max);
        if scatter > tol {
            return None;
        }
        lines.push(line_from_direction(u, g.len(), scatter));
    }
    lines.sort_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap());
    Some(lines)
}

/// Greedy clustering of points onto lines through the origin.
fn spatial_lines(pts: &[Point], tol: f64, l_max: usize) -> Option<Vec<SupportLine>> {
    let mut dirs: Vec<(Point, usize, f64)> = Vec::new();
    for p in pts {
        let hit = dirs.iter_mut().find(|(u, _, _)| p.distance_to_line(u) <= tol);
        match hit {
            Some((u, count, scatter)) => {
                *count += 1;
                *scatter = scatter.max(p.distance_to_line(u));
            }
            None => {
                if dirs.len() == l_max {
                    return None;
                }
                dirs.push((p.scale(1.0 / p.norm()), 1, 0.0));
            }
        }
    }
    Some(
        dirs.into_iter()
            .map(|(u, c, s)| SupportLine {
                direction: u,
                angle: f64::NAN,
                count: c,
                scatter: s,
            })
            .collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Divergent,
    FixedPoint,
    SegmentCircle,
    Wqa,
    Unresolved,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Divergent => "DIVERGENT",
            Verdict::FixedPoint => "FIXED_POINT",
            Verdict::SegmentCircle => "SEGMENT_CIRCLE",
            Verdict::Wqa => "WQA",
            Verdict::Unresolved => "UNRESOLVED",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evidence {
    pub terminal_step: Option<usize>,
    pub support_lines: Option<Vec<SupportLine>>,
    pub return_map: Option<ReturnMap1D>,
    pub return_failure: Option<ReturnFailure>,
    pub circle_verdict: Option<CmVerdict>,
    pub rotation: Option<RotationResult>,
    pub lyapunov: Option<f64>,
    pub split_time: Option<SplitTime>,
    /// Period and `det(I - A_k)` of a cycle found in the tail.
    pub cycle: Option<(usize, f64)>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

impl Classification {
    /// One-line description, e.g. `SEGMENT_CIRCLE quasiperiodic rho=0.29930`.
    pub fn summary(&self) -> String {
        let mut s = self.verdict.label().to_string();
        if let Some(cv) = &self.evidence.circle_verdict {
            s.push(' ');
            s.push_str(cv.label());
        }
        if let Some(r) = &self.evidence.rotation {
            s.push_str(&format!(" rho={:.5}", r.rho));
        }
        if let Some(f) = &self.evidence.return_failure {
            s.push_str(&format!(" [{f}]"));
        }
        if let Some(l) = self.evidence.lyapunov {
            s.push_str(&format!(" lyap={l:.4}"));
        }
        for n in &self.evidence.notes {
            s.push_str(&format!(" ({n})"));
        }
        s
    }
}

/// Tail period: smallest `k <= max_k` with `|x_{n-k} - x_n|` tiny.
fn tail_period(points: &[Point], max_k: usize) -> Option<usize> {
    let last = points.last()?;
    let tol = 1e-9 * last.norm().max(1.0);
    (1..=max_k.min(points.len() - 1)).find(|&k| points[points.len() - 1 - k].distance(last) < tol)
}

/// Connected pieces of the sample lying on `line`, on the half-line with
/// more points, as abscissa intervals weighted by point count.
fn line_components(sample: &AttractorSample, line: &SupportLine, tol: f64) -> Vec<(f64, f64, usize)> {
    let u = line.direction;
    let mut xs: Vec<f64> = sample
        .points
        .iter()
        .filter(|p| p.norm() > 0.0 && p.distance_to_line(&u) <= tol)
        .map(|p| p.x())
        .collect();
    let pos = xs.iter().filter(|&&x| x > 0.0).count();
    let neg = xs.iter().filter(|&&x| x < 0.0).count();
    xs.retain(|&x| if pos >= neg { x > 0.0 } else { x < 0.0 });
    if xs.is_empty() {
        return Vec::new();
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let extent = xs[xs.len() - 1] - xs[0];
    let gap = (1e-3 * extent).max(20.0 * extent / xs.len() as f64);
    let mut comps = Vec::new();
    let mut start = 0;
    for i in 1..=xs.len() {
        if i == xs.len() || xs[i] - xs[i - 1] > gap {
            comps.push((xs[start], xs[i - 1], i - start));
            start = i;
        }
    }
    comps
}

/// Return map reduced to a circle map, preferring a two-branch segment.
fn reduce_to_circle(map: &PwlMap, rm: ReturnMap1D, opts: &ClassifyOptions) -> Result<(ReturnMap1D, CircleMap1D)> {
    let rm = single_breakpoint_segment(map, &rm, &opts.return_opts)?.unwrap_or(rm);
    let cm = if rm.branches.len() == 2 {
        let (l, r) = (&rm.branches[0], &rm.branches[1]);
        CircleMap1D::two_branch(l.slope, r.slope, r.left)?
    } else {
        rm.to_circle_map()?
    };
    Ok((rm, cm))
}

pub fn classify_attractor(map: &PwlMap, x0: &Point, opts: &ClassifyOptions) -> Result<Classification> {
    let sample = match omega_limit_sample(map, x0, opts)? {
        OmegaLimit::Terminal { status, step } => {
            let verdict = match status {
                OrbitStatus::Diverged => Verdict::Divergent,
                _ => Verdict::FixedPoint,
            };
            return Ok(Classification {
                verdict,
                evidence: Evidence {
                    terminal_step: Some(step),
                    ..Evidence::default()
                },
            });
        }
        OmegaLimit::Sample(s) => s,
    };
    classify_sample(map, &sample, opts)
}

/// The cascade applied to an already collected bounded sample.
pub fn classify_sample(map: &PwlMap, sample: &AttractorSample, opts: &ClassifyOptions) -> Result<Classification> {
    let mut ev = Evidence::default();
    let last = *sample.points.last().ok_or(Error::EmptySample)?;
    if opts.lyapunov_steps > 0 {
        ev.lyapunov = lyapunov_max(map, &last, opts.lyapunov_steps).ok();
    }
    if opts.sensitivity_eps > 0.0 {
        ev.split_time = crate::orbit::sensitivity_split_time(map, &last, opts.sensitivity_eps, opts.samples, None).ok();
    }
    let radius = sample.radius();
    let lines = line_support_test(sample, opts);
    ev.support_lines = lines.clone();

    // a cycle in the tail must be nonhyperbolic
    if let Some(k) = tail_period(&sample.points, opts.max_period) {
        let n = sample.points.len();
        let seq = &sample.regions[n - 1 - k..n - 1];
        let a = crate::orbit::sequence_matrix(map, seq);
        let p1 = a.char_poly_at_one();
        ev.cycle = Some((k, p1));
        if p1.abs() > 1e-6 {
            ev.notes.push(format!("hyperbolic {k}-cycle detected, det(I - A) = {p1:e}"));
            return Ok(Classification {
                verdict: Verdict::Unresolved,
                evidence: ev,
            });
        }
        return Ok(classify_cycle(map, sample, k, a, lines, ev, opts));
    }

    // lines found within eps_line must also carry the tail exactly, as
    // genuine segments do; thin WQAs hugging an eigenvector do not
    let mut approximate = false;
    let mut probe_point = last;
    if sample.points[0].dim() == 2 {
        if let Some(lines) = &lines {
            match best_component(sample, lines, opts.eps_line * radius) {
                Component::Exact { a, b, m } => return classify_on_lines(map, (a, b, m), ev, opts),
                Component::Approximate { residual, worst } => {
                    ev.notes.push(format!("support lines are approximate (angular residual {residual:.1e})"));
                    approximate = true;
                    probe_point = worst;
                }
                Component::Missing => {
                    ev.notes.push("support lines carry no segment".into());
                    return Ok(Classification {
                        verdict: Verdict::Unresolved,
                        evidence: ev,
                    });
                }
            }
        }
    }

    if conservative_candidate(map, sample) {
        ev.notes.push("conservative-region candidate".into());
        return Ok(Classification {
            verdict: Verdict::Unresolved,
            evidence: ev,
        });
    }
    let candidates = std::iter::once(probe_point).chain(sample.points.iter().rev().copied());
    match wqa_return_attempt(map, candidates, opts)? {
        ReturnOutcome::Failure(f) => {
            ev.return_failure = Some(f);
            if lines.is_some() && !approximate {
                ev.notes.push("finite ray support but no return map".into());
                return Ok(Classification {
                    verdict: Verdict::Unresolved,
                    evidence: ev,
                });
            }
            if !approximate {
                ev.notes.push(format!("line support failed with L_max = {}", opts.l_max));
            }
            Ok(Classification {
                verdict: Verdict::Wqa,
                evidence: ev,
            })
        }
        ReturnOutcome::Map(rm) => {
            ev.notes.push("return map exists on a ray through the tail; the attractor may be a union of more radial segments than L_max".into());
            ev.return_map = Some(rm);
            Ok(Classification {
                verdict: Verdict::Unresolved,
                evidence: ev,
            })
        }
    }
}

/// Largest angular residual allowed for a tail lying exactly on a ray.
const EXACT_RAY_TOL: f64 = 1e-8;

enum Component {
    Exact { a: f64, b: f64, m: f64 },
    Approximate { residual: f64, worst: Point },
    Missing,
}

/// The most populated segment over all support lines.
fn best_component(sample: &AttractorSample, lines: &[SupportLine], tol: f64) -> Component {
    let mut best: Option<(f64, f64, usize, &SupportLine)> = None;
    for line in lines {
        if line.slope().is_none() {
            continue;
        }
        for (a, b, n) in line_components(sample, line, tol) {
            if b > a && best.is_none_or(|c| n > c.2) {
                best = Some((a, b, n, line));
            }
        }
    }
    let Some((a, b, _, line)) = best else {
        return Component::Missing;
    };
    let u = line.direction;
    let mut residual = 0.0;
    let mut worst = u;
    for p in &sample.points {
        let n = p.norm();
        if n == 0.0 || p.distance_to_line(&u) > tol || p.x() < a || p.x() > b {
            continue;
        }
        let r = p.distance_to_line(&u) / n;
        if r > residual {
            residual = r;
            worst = *p;
        }
    }
    if residual <= EXACT_RAY_TOL {
        Component::Exact {
            a,
            b,
            m: line.slope().unwrap(),
        }
    } else {
        Component::Approximate { residual, worst }
    }
}

fn classify_on_lines(
    map: &PwlMap,
    (a, b, m): (f64, f64, f64),
    mut ev: Evidence,
    opts: &ClassifyOptions,
) -> Result<Classification> {
    match build_return_map(map, m, (a, b), &opts.return_opts)? {
        ReturnOutcome::Failure(f) => {
            ev.notes.push("finite line support but no return map".into());
            ev.return_failure = Some(f);
            Ok(Classification {
                verdict: Verdict::Unresolved,
                evidence: ev,
            })
        }
        ReturnOutcome::Map(rm) => {
            let (rm, cm) = reduce_to_circle(map, rm, opts)?;
            let cv = cm_classify(&cm, &opts.rotation_opts);
            ev.rotation = crate::circle_map::rotation_number(&cm, &opts.rotation_opts).ok();
            ev.circle_verdict = Some(cv);
            ev.return_map = Some(rm);
            let verdict = match cv {
                CmVerdict::PeriodicFilled { .. } | CmVerdict::Quasiperiodic { .. } => Verdict::SegmentCircle,
                _ => {
                    ev.notes.push("return map is not a circle map".into());
                    Verdict::Unresolved
                }
            };
            Ok(Classification { verdict, evidence: ev })
        }
    }
}

/// A nonhyperbolic cycle: either a segment filled with cycles (one
/// eigenvalue 1, the other inside the unit circle) or a conservative region.
fn classify_cycle(
    map: &PwlMap,
    sample: &AttractorSample,
    k: usize,
    a: Matrix,
    lines: Option<Vec<SupportLine>>,
    mut ev: Evidence,
    opts: &ClassifyOptions,
) -> Classification {
    let unresolved = |mut ev: Evidence, note: String| {
        ev.notes.push(note);
        Classification {
            verdict: Verdict::Unresolved,
            evidence: ev,
        }
    };
    if (a - Matrix::identity(a.dim())).max_abs() <= 1e-9 {
        return unresolved(ev, format!("conservative-region candidate: {k}-cycle with identity product"));
    }
    if map.dim() != 2 || lines.is_none() || a.det().abs() >= 1.0 {
        return unresolved(ev, format!("nonhyperbolic {k}-cycle"));
    }
    let p = *sample.points.last().unwrap();
    if p.x().abs() < 1e-12 {
        return unresolved(ev, format!("nonhyperbolic {k}-cycle on a vertical ray"));
    }
    let m = p.y() / p.x();
    let w = 1e-3 * p.x().abs();
    let seg = (p.x() - w, p.x() + w);
    let ropts = ReturnOptions {
        probes: 64,
        ..opts.return_opts
    };
    match build_return_map(map, m, seg, &ropts) {
        Ok(ReturnOutcome::Map(rm)) if rm.branches.iter().all(|b| (b.slope - 1.0).abs() <= 1e-9) => {
            let tail = &sample.regions[sample.regions.len() - k..];
            let rho = tail.iter().filter(|&&r| r == 0).count() as f64 / k as f64;
            ev.circle_verdict = Some(CmVerdict::PeriodicFilled { period: k as u32, rho });
            ev.return_map = Some(rm);
            Classification {
                verdict: Verdict::SegmentCircle,
                evidence: ev,
            }
        }
        _ => unresolved(ev, format!("nonhyperbolic {k}-cycle without a return map")),
    }
}

/// Every piece visited by the tail preserves area.
fn conservative_candidate(map: &PwlMap, sample: &AttractorSample) -> bool {
    let mut seen = [false; 256];
    for &r in &sample.regions {
        seen[r as usize] = true;
    }
    (0..map.regions().len())
        .filter(|&r| seen[r])
        .all(|r| (map.jacobian(r).det().abs() - 1.0).abs() <= 1e-12)
}

/// Tries a return map on a short segment of the ray through a tail point;
/// for a WQA no probe comes back to the ray.
fn wqa_return_attempt(
    map: &PwlMap,
    candidates: impl Iterator<Item = Point>,
    opts: &ClassifyOptions,
) -> Result<ReturnOutcome> {
    if map.dim() != 2 {
        return Ok(ReturnOutcome::Failure(ReturnFailure::Unsupported(format!(
            "dimension {}",
            map.dim()
        ))));
    }
    for p in candidates.take(100) {
        let n = p.norm();
        if n == 0.0 || p.x().abs() < 1e-6 * n {
            continue;
        }
        let m = p.y() / p.x();
        let w = 1e-2 * p.x().abs();
        let seg = (p.x() - w, p.x() + w);
        // fail fast: two probes before the full grid
        let quick = ReturnOptions {
            probes: 2,
            ..opts.return_opts
        };
        match build_return_map(map, m, seg, &quick) {
            Ok(ReturnOutcome::Failure(f)) => return Ok(ReturnOutcome::Failure(f)),
            Ok(ReturnOutcome::Map(_)) => return build_return_map(map, m, seg, &opts.return_opts),
            Err(Error::ProbeEscaped { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(ReturnOutcome::Failure(ReturnFailure::Unsupported(
        "no usable ray through the sample".into(),
    )))
}

/// Largest Lyapunov exponent: growth of one tangent vector, renormalized
/// every step.
pub fn lyapunov_max(map: &PwlMap, x0: &Point, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidOption("lyapunov needs n >= 1".into()));
    }
    map.region_of(x0)?;
    let dim = map.dim();
    let mut v = Point::new(&vec![1.0 / (dim as f64).sqrt(); dim]);
    let mut x = *x0;
    let mut sum = 0.0;
    for step in 0..n {
        let r = map.locate(&x);
        v = map.jacobian(r).apply(&v);
        let g = v.norm();
        if g == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        sum += g.ln();
        v = v.scale(1.0 / g);
        x = map.regions()[r].piece.apply(&x);
        if !x.is_finite() || x.norm() > R_DIV {
            return Err(Error::Diverged { step: step + 1 });
        }
    }
    Ok(sum / n as f64)
}

type Indexed = GeomWithData<[f64; 3], ()>;

fn tree(points: &[Point]) -> RTree<Indexed> {
    RTree::bulk_load(points.iter().map(|p| GeomWithData::new(p.padded(), ())).collect())
}

fn directed(from: &[Point], to: &RTree<Indexed>) -> f64 {
    from.iter()
        .map(|p| {
            let q = p.padded();
            to.nearest_neighbor(q)
                .map(|n| {
                    let c = n.geom();
                    ((q[0] - c[0]).powi(2) + (q[1] - c[1]).powi(2) + (q[2] - c[2]).powi(2)).sqrt()
                })
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the point clouds.
pub fn attractor_distance(a: &AttractorSample, b: &AttractorSample) -> Result<f64> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::EmptySample);
    }
    let (ta, tb) = (tree(&a.points), tree(&b.points));
    Ok(directed(&a.points, &tb).max(directed(&b.points, &ta)))
}

/// Largest distance from a point of `from` to the cloud `to` (one-sided).
pub fn distance_to_sample(from: &[Point], to: &AttractorSample) -> Result<f64> {
    if from.is_empty() || to.points.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(directed(from, &tree(&to.points)))
}

/// Spatial index over a reference sample for repeated one-sided queries.
pub struct SampleIndex {
    tree: RTree<Indexed>,
}

impl SampleIndex {
    pub fn new(sample: &AttractorSample) -> Result<Self> {
        if sample.points.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(SampleIndex {
            tree: tree(&sample.points),
        })
    }

    pub fn distance_from(&self, pts: &[Point]) -> f64 {
        directed(pts, &self.tree)
    }
}
