//! One-dimensional piecewise-linear homogeneous maps: invariant intervals,
//! rotation numbers and the periodic / quasiperiodic dichotomy.
//!
//! Rotation numbers count how often the orbit visits the leftmost branch.
//! For the two-branch map with breakpoint `h` that is the branch `x < h`,
//! so `rho = ln sR / (ln sR - ln sL)` whatever the sign of `h`.

use crate::error::{Error, Result};

pub const RATIONALITY_TOL: f64 = 1e-9;
pub const MAX_PQ: u32 = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct CircleMap1D {
    /// Sorted interior breakpoints; branch `i` covers `[b_{i-1}, b_i)`.
    breakpoints: Vec<f64>,
    slopes: Vec<f64>,
    /// Interval the map is studied on (return maps carry their segment).
    domain: Option<(f64, f64)>,
}

impl CircleMap1D {
    /// `x' = sL x` for `x < h`, `x' = sR x` otherwise.
    pub fn two_branch(s_l: f64, s_r: f64, h: f64) -> Result<Self> {
        for (name, v) in [("sL", s_l), ("sR", s_r), ("h", h)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    param: name.into(),
                    reason: "must be finite".into(),
                });
            }
        }
        if h == 0.0 {
            return Err(Error::InvalidParameter {
                param: "h".into(),
                reason: "the discontinuity must not pass through the fixed point".into(),
            });
        }
        Ok(CircleMap1D {
            breakpoints: vec![h],
            slopes: vec![s_l, s_r],
            domain: None,
        })
    }

    pub fn from_branches(breakpoints: Vec<f64>, slopes: Vec<f64>, domain: Option<(f64, f64)>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidOption(format!(
                "{} slopes need {} breakpoints, got {}",
                slopes.len(),
                slopes.len().saturating_sub(1),
                breakpoints.len()
            )));
        }
        if slopes.iter().chain(&breakpoints).any(|v| !v.is_finite()) {
            return Err(Error::InvalidOption("slopes and breakpoints must be finite".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidOption("breakpoints must be strictly increasing".into()));
        }
        if let Some((a, b)) = domain {
            if !(a < b) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidOption(format!("bad domain [{a}, {b}]")));
            }
        }
        Ok(CircleMap1D {
            breakpoints,
            slopes,
            domain,
        })
    }

    pub fn with_domain(mut self, a: f64, b: f64) -> Self {
        self.domain = Some((a.min(b), a.max(b)));
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> Option<(f64, f64)> {
        self.domain
    }

    /// `(sL, sR, h)` if the map has exactly one breakpoint.
    pub fn as_two_branch(&self) -> Option<(f64, f64, f64)> {
        match (self.breakpoints.as_slice(), self.slopes.as_slice()) {
            ([h], [l, r]) => Some((*l, *r, *h)),
            _ => None,
        }
    }

    #[inline]
    pub fn branch_of(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.slopes[self.branch_of(x)] * x
    }

    pub fn iterate_n(&self, mut x: f64, n: usize) -> f64 {
        for _ in 0..n {
            x = self.apply(x);
        }
        x
    }

    /// True when the branch images of the invariant interval tile it.
    pub fn is_circle_homeomorphism(&self) -> bool {
        invariant_interval(self).is_ok()
    }
}

/// Two-branch slope condition: the branch on the side of `O` expands, the
/// other contracts, and both preserve orientation.
fn two_branch_interval(s_l: f64, s_r: f64, h: f64) -> Result<(f64, f64)> {
    let ok = if h > 0.0 {
        s_l > 1.0 && s_r > 0.0 && s_r < 1.0
    } else {
        s_r > 1.0 && s_l > 0.0 && s_l < 1.0
    };
    if ok {
        let (a, b) = (s_r * h, s_l * h);
        return Ok((a.min(b), a.max(b)));
    }
    let reason = if s_l.abs() < 1.0 && s_r.abs() < 1.0 {
        "both branches contract: O attracts".to_string()
    } else if s_l.abs() > 1.0 && s_r.abs() > 1.0 {
        "both branches expand: orbits diverge".to_string()
    } else {
        format!("slopes sL = {s_l}, sR = {s_r} with h = {h} do not give a circle homeomorphism")
    };
    Err(Error::NoInvariantInterval(reason))
}

/// Absorbing interval `[sR h, sL h]` (sorted) of a two-branch map, or the
/// domain of a multi-branch map whose branch images tile it.
pub fn invariant_interval(f: &CircleMap1D) -> Result<(f64, f64)> {
    if let Some((s_l, s_r, h)) = f.as_two_branch() {
        return two_branch_interval(s_l, s_r, h);
    }
    let (a, b) = f
        .domain
        .ok_or_else(|| Error::NoInvariantInterval("multi-branch map without a domain".into()))?;
    if tiles(f, a, b, 1e-9) {
        Ok((a, b))
    } else {
        Err(Error::NoInvariantInterval(format!(
            "branch images do not tile [{a}, {b}]"
        )))
    }
}

/// Whether the images of the branch pieces of `[a, b]` cover it without gap
/// or overlap, to relative tolerance `tol`.
fn tiles(f: &CircleMap1D, a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    let mut cuts = vec![a];
    cuts.extend(f.breakpoints.iter().copied().filter(|&c| c > a && c < b));
    cuts.push(b);
    let mut images: Vec<(f64, f64)> = cuts
        .windows(2)
        .map(|w| {
            let s = f.slopes[f.branch_of(0.5 * (w[0] + w[1]))];
            let (u, v) = (s * w[0], s * w[1]);
            (u.min(v), u.max(v))
        })
        .collect();
    images.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let eps = tol * scale;
    if (images[0].0 - a).abs() > eps || (images[images.len() - 1].1 - b).abs() > eps {
        return false;
    }
    images.windows(2).all(|w| (w[0].1 - w[1].0).abs() <= eps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RotationMethod {
    ClosedForm,
    OrbitFrequency,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationResult {
    pub rho: f64,
    pub certificate: Option<(u32, u32)>,
    pub method: RotationMethod,
    /// Branch frequency along an orbit, kept as a cross-check of the closed form.
    pub orbit_estimate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationOptions {
    pub orbit_len: usize,
    pub transient: usize,
    pub max_pq: u32,
    pub tol: f64,
    /// Orbit start; defaults to the middle of the invariant interval.
    pub x0: Option<f64>,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions {
            orbit_len: 100_000,
            transient: 100,
            max_pq: MAX_PQ,
            tol: RATIONALITY_TOL,
            x0: None,
        }
    }
}

/// Frequency of the leftmost branch along an orbit.
pub fn branch_frequency(f: &CircleMap1D, x0: f64, transient: usize, n: usize) -> f64 {
    let mut x = f.iterate_n(x0, transient);
    let mut hits = 0usize;
    for _ in 0..n {
        let b = f.branch_of(x);
        if b == 0 {
            hits += 1;
        }
        x *= f.slopes[b];
    }
    hits as f64 / n as f64
}

pub fn rotation_number(f: &CircleMap1D, opts: &RotationOptions) -> Result<RotationResult> {
    let (a, b) = invariant_interval(f)?;
    let x0 = opts.x0.unwrap_or(0.5 * (a + b));
    let estimate = (opts.orbit_len > 0).then(|| branch_frequency(f, x0, opts.transient, opts.orbit_len));
    match f.as_two_branch() {
        Some((s_l, s_r, _)) => {
            let certificate = rationality_test(s_l, s_r, opts.max_pq, opts.tol);
            let rho = match certificate {
                Some((p, q)) => p as f64 / (p + q) as f64,
                None => s_r.ln() / (s_r.ln() - s_l.ln()),
            };
            Ok(RotationResult {
                rho,
                certificate,
                method: RotationMethod::ClosedForm,
                orbit_estimate: estimate,
            })
        }
        None => {
            let rho = estimate.ok_or_else(|| {
                Error::InvalidOption("a multi-branch map needs orbit_len > 0".into())
            })?;
            Ok(RotationResult {
                rho,
                certificate: None,
                method: RotationMethod::OrbitFrequency,
                orbit_estimate: estimate,
            })
        }
    }
}

/// Smallest `(p, q)` by `p + q` with `|p ln sL + q ln sR| <= tol (p + q)`.
pub fn rationality_test(s_l: f64, s_r: f64, max_pq: u32, tol: f64) -> Option<(u32, u32)> {
    if !(s_l > 0.0 && s_r > 0.0) || max_pq < 1 {
        return None;
    }
    let (ll, lr) = (s_l.ln(), s_r.ln());
    for n in 2..=max_pq {
        for p in 1..n {
            let q = n - p;
            if (p as f64 * ll + q as f64 * lr).abs() <= tol * n as f64 {
                return Some((p, q));
            }
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CmVerdict {
    /// The invariant interval is filled with nonhyperbolic cycles of this period.
    PeriodicFilled { period: u32, rho: f64 },
    Quasiperiodic { rho: f64 },
    FixedPointO,
    Divergent,
}

impl CmVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            CmVerdict::PeriodicFilled { .. } => "periodic",
            CmVerdict::Quasiperiodic { .. } => "quasiperiodic",
            CmVerdict::FixedPointO => "fixed-point",
            CmVerdict::Divergent => "divergent",
        }
    }
}

/// Periodic / quasiperiodic when the map is a circle homeomorphism, otherwise
/// the fate of O decided from the slopes, falling back to iterating from the
/// breakpoints when the slopes alone do not settle it.
pub fn cm_classify(f: &CircleMap1D, opts: &RotationOptions) -> CmVerdict {
    if let Ok(r) = rotation_number(f, opts) {
        return match r.certificate {
            Some((p, q)) => CmVerdict::PeriodicFilled {
                period: p + q,
                rho: r.rho,
            },
            None => CmVerdict::Quasiperiodic { rho: r.rho },
        };
    }
    let slopes = f.slopes();
    if slopes.iter().all(|s| s.abs() < 1.0) {
        return CmVerdict::FixedPointO;
    }
    if slopes.iter().all(|s| s.abs() > 1.0) {
        return CmVerdict::Divergent;
    }
    // mixed slopes: follow orbits started just beside each breakpoint
    let mut starts = Vec::new();
    for &b in f.breakpoints() {
        starts.push(b * (1.0 + 1e-6));
        starts.push(b * (1.0 - 1e-6));
    }
    let mut bounded_orbit = None;
    let mut diverged = false;
    for x0 in starts {
        let mut x = x0;
        let mut fate = None;
        for _ in 0..opts.orbit_len.max(1000) {
            x = f.apply(x);
            if !x.is_finite() || x.abs() > crate::orbit::R_DIV {
                fate = Some(false);
                break;
            }
            if x.abs() < crate::orbit::EPS_FIX && f.slopes[f.branch_of(x)].abs() < 1.0 {
                fate = Some(true);
                break;
            }
        }
        match fate {
            Some(false) => diverged = true,
            Some(true) => {}
            None => bounded_orbit = Some(x),
        }
    }
    match bounded_orbit {
        Some(x) => CmVerdict::Quasiperiodic {
            rho: branch_frequency(f, x, 0, opts.orbit_len.max(1000)),
        },
        None if diverged => CmVerdict::Divergent,
        None => CmVerdict::FixedPointO,
    }
}

/// Orbit average of `ln |slope|`.
pub fn lyapunov_1d(f: &CircleMap1D, x0: f64, n: usize) -> f64 {
    let mut x = x0;
    let mut sum = 0.0;
    for _ in 0..n {
        let s = f.slopes[f.branch_of(x)];
        sum += s.abs().ln();
        x *= s;
    }
    sum / n as f64
}

/// `(x, F(x))` on `n` evenly spaced points of `[lo, hi]`.
pub fn cobweb_points(f: &CircleMap1D, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    match n {
        0 => Vec::new(),
        1 => vec![(lo, f.apply(lo))],
        _ => (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * (i as f64 / (n - 1) as f64);
                (x, f.apply(x))
            })
            .collect(),
    }
}
