//! Parallel parameter sweeps and phase-plane basin rasters.
//!
//! Cells are computed independently and gathered by index, so the output does
//! not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{classify_attractor, AttractorSample, ClassifyOptions, SampleIndex, Verdict};
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::map_model::{make_catalog_map, CatalogId, Params, PwlMap};
use crate::orbit::{iterate, OrbitOptions, OrbitStatus};

/// Color code of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellCode {
    /// Divergent orbit.
    Gray,
    /// Convergence to the fixed point.
    Green,
    /// Bounded orbit on some other attractor.
    Red,
    /// Unresolved, or a candidate conservative region.
    White,
}

impl CellCode {
    pub fn rgb(&self) -> [u8; 3] {
        match self {
            CellCode::Gray => [128, 128, 128],
            CellCode::Green => [0, 160, 0],
            CellCode::Red => [200, 0, 0],
            CellCode::White => [255, 255, 255],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CellCode::Gray => "GRAY",
            CellCode::Green => "GREEN",
            CellCode::Red => "RED",
            CellCode::White => "WHITE",
        }
    }

    pub fn from_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Divergent => CellCode::Gray,
            Verdict::FixedPoint => CellCode::Green,
            Verdict::SegmentCircle | Verdict::Wqa => CellCode::Red,
            Verdict::Unresolved => CellCode::White,
        }
    }

    /// Ranking used to merge the codes of several initial conditions: an
    /// attractor found from any of them wins.
    fn priority(&self) -> u8 {
        match self {
            CellCode::Gray => 0,
            CellCode::Green => 1,
            CellCode::White => 2,
            CellCode::Red => 3,
        }
    }
}

/// Evenly spaced nodes `lo + (hi - lo) i / (n - 1)`; a single node sits at `lo`.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        Axis {
            name: name.to_string(),
            lo,
            hi,
            n,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / ((self.n - 1) as f64)
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.value(i))
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidOption(format!("axis `{}` has no nodes", self.name)));
        }
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::InvalidOption(format!("axis `{}` has a non-finite range", self.name)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanMode {
    /// Orbit status only: bounded cells are RED unless every piece visited by
    /// the tail preserves area, which gives WHITE.
    Coarse,
    /// Full classification per cell, with the summary kept as evidence.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanOptions {
    pub classify: ClassifyOptions,
    pub mode: ScanMode,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Seeded initial conditions tried in addition to the given one.
    pub extra_ics: usize,
    /// Extra initial conditions are drawn uniformly from `[-ic_box, ic_box]^d`.
    pub ic_box: f64,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 0x005e_ed0f_0b17;

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            classify: ClassifyOptions::default(),
            mode: ScanMode::Coarse,
            threads: 0,
            extra_ics: 0,
            ic_box: 2.0,
            seed: DEFAULT_SEED,
        }
    }
}

impl ScanOptions {
    /// The given initial condition followed by the seeded extra ones.
    pub fn initial_conditions(&self, ic: &Point) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = vec![*ic];
        for _ in 0..self.extra_ics {
            let coords: Vec<f64> = (0..ic.dim()).map(|_| rng.gen_range(-self.ic_box..=self.ic_box)).collect();
            out.push(Point::new(&coords));
        }
        out
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidOption(format!("thread pool: {e}")))
    }
}

/// Everything needed to reproduce a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub map_id: CatalogId,
    pub params: Params,
    pub initial_conditions: Vec<Point>,
    pub mode: ScanMode,
    pub transient: usize,
    pub samples: usize,
    pub r_div: f64,
    pub eps_fix: f64,
    pub seed: u64,
}

impl Provenance {
    fn new(map_id: &CatalogId, params: &Params, ics: Vec<Point>, opts: &ScanOptions) -> Self {
        Provenance {
            map_id: map_id.clone(),
            params: params.clone(),
            initial_conditions: ics,
            mode: opts.mode,
            transient: opts.classify.transient,
            samples: opts.classify.samples,
            r_div: opts.classify.r_div,
            eps_fix: opts.classify.eps_fix,
            seed: opts.seed,
        }
    }

    /// `key = value` lines describing the run.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("map = {}\n", self.map_id));
        for (k, v) in self.params.iter() {
            s.push_str(&format!("param.{k} = {v:?}\n"));
        }
        for (i, ic) in self.initial_conditions.iter().enumerate() {
            let coords: Vec<String> = ic.coords().iter().map(|c| format!("{c:?}")).collect();
            s.push_str(&format!("ic.{i} = {}\n", coords.join(", ")));
        }
        let mode = match self.mode {
            ScanMode::Coarse => "coarse",
            ScanMode::Full => "full",
        };
        s.push_str(&format!("mode = {mode}\n"));
        s.push_str(&format!("transient = {}\n", self.transient));
        s.push_str(&format!("samples = {}\n", self.samples));
        s.push_str(&format!("r_div = {:?}\n", self.r_div));
        s.push_str(&format!("eps_fix = {:?}\n", self.eps_fix));
        s.push_str(&format!("seed = {}\n", self.seed));
        s
    }
}

/// Result of a parameter-plane scan. `codes[j * nx + i]` belongs to the
/// `i`-th node of the first axis and the `j`-th node of the second.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGrid {
    pub axes: Vec<Axis>,
    pub codes: Vec<CellCode>,
    pub evidence: Vec<Option<String>>,
    pub provenance: Provenance,
}

impl ScanGrid {
    pub fn width(&self) -> usize {
        self.axes[0].n
    }

    pub fn height(&self) -> usize {
        self.axes.get(1).map_or(1, |a| a.n)
    }

    pub fn code(&self, i: usize, j: usize) -> CellCode {
        self.codes[j * self.width() + i]
    }

    /// Codes in image order: top row is the largest value of the second axis.
    pub fn image(&self) -> (usize, usize, Vec<CellCode>) {
        image_order(self.width(), self.height(), &self.codes)
    }

    pub fn count(&self, code: CellCode) -> usize {
        self.codes.iter().filter(|&&c| c == code).count()
    }
}

fn image_order(w: usize, h: usize, codes: &[CellCode]) -> (usize, usize, Vec<CellCode>) {
    let mut out = Vec::with_capacity(codes.len());
    for j in (0..h).rev() {
        out.extend_from_slice(&codes[j * w..(j + 1) * w]);
    }
    (w, h, out)
}

fn check_axis_name(id: &CatalogId, name: &str) -> Result<()> {
    if id.parameters().iter().any(|(n, _)| *n == name) {
        Ok(())
    } else {
        Err(Error::UnknownParameter {
            map: id.to_string(),
            param: name.to_string(),
        })
    }
}

/// Code of a single orbit without the full classification.
fn coarse_code(map: &PwlMap, x0: &Point, opts: &ClassifyOptions) -> Result<CellCode> {
    let orbit_opts = OrbitOptions {
        r_div: opts.r_div,
        eps_fix: opts.eps_fix,
        record_points: false,
        record_itinerary: true,
        ..OrbitOptions::default()
    };
    let orbit = iterate(map, x0, opts.transient + opts.samples, &orbit_opts)?;
    Ok(match orbit.status {
        OrbitStatus::Diverged => CellCode::Gray,
        OrbitStatus::ConvergedToOrigin => CellCode::Green,
        OrbitStatus::Bounded => {
            let mut seen = [false; 256];
            for &r in orbit.itinerary.iter().skip(opts.transient) {
                seen[r as usize] = true;
            }
            let conservative = (0..map.regions().len())
                .filter(|&r| seen[r])
                .all(|r| (map.jacobian(r).det().abs() - 1.0).abs() <= 1e-12);
            if conservative {
                CellCode::White
            } else {
                CellCode::Red
            }
        }
    })
}

/// Code and optional evidence of one cell over all initial conditions.
fn cell(map: &PwlMap, ics: &[Point], opts: &ScanOptions) -> Result<(CellCode, Option<String>)> {
    let mut best: Option<CellCode> = None;
    let mut notes = Vec::new();
    for ic in ics {
        let code = match opts.mode {
            ScanMode::Coarse => coarse_code(map, ic, &opts.classify)?,
            ScanMode::Full => {
                let c = classify_attractor(map, ic, &opts.classify)?;
                notes.push(c.summary());
                CellCode::from_verdict(c.verdict)
            }
        };
        if best.is_none_or(|b| code.priority() > b.priority()) {
            best = Some(code);
        }
    }
    let evidence = (!notes.is_empty()).then(|| notes.join(" | "));
    Ok((best.expect("at least one initial condition"), evidence))
}

/// Two-parameter scan of a catalog family with a shared initial condition.
pub fn scan_2d_params(
    id: &CatalogId,
    base: &Params,
    axis1: &Axis,
    axis2: &Axis,
    ic: &Point,
    opts: &ScanOptions,
) -> Result<ScanGrid> {
    axis1.validate()?;
    axis2.validate()?;
    check_axis_name(id, &axis1.name)?;
    check_axis_name(id, &axis2.name)?;
    if axis1.name == axis2.name {
        return Err(Error::InvalidOption(format!("both axes are `{}`", axis1.name)));
    }
    // fails early on a bad base parameter set
    let mut probe = base.clone();
    probe.set(&axis1.name, axis1.value(0));
    probe.set(&axis2.name, axis2.value(0));
    make_catalog_map(id, &probe)?;

    let ics = opts.initial_conditions(ic);
    let (w, h) = (axis1.n, axis2.n);
    let rows: Vec<Vec<(CellCode, Option<String>)>> = opts.pool()?.install(|| {
        (0..h)
            .into_par_iter()
            .map(|j| {
                (0..w)
                    .map(|i| {
                        let mut p = base.clone();
                        p.set(&axis1.name, axis1.value(i));
                        p.set(&axis2.name, axis2.value(j));
                        let map = make_catalog_map(id, &p)?;
                        cell(&map, &ics, opts)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (codes, evidence) = rows.into_iter().flatten().unzip();
    Ok(ScanGrid {
        axes: vec![axis1.clone(), axis2.clone()],
        codes,
        evidence,
        provenance: Provenance::new(id, base, ics, opts),
    })
}

/// One column of a bifurcation diagram.
#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationColumn {
    pub param: f64,
    pub code: CellCode,
    /// Projected tail coordinates; the fixed point for convergent orbits,
    /// empty for divergent ones.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationData {
    pub axis: Axis,
    pub projection: usize,
    pub columns: Vec<BifurcationColumn>,
    pub provenance: Provenance,
}

impl BifurcationData {
    /// `(parameter, value)` pairs in column order.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.columns
            .iter()
            .flat_map(|c| c.values.iter().map(move |&v| (c.param, v)))
    }
}

/// One-parameter sweep recording the last `per_column` tail points projected
/// on coordinate `projection`.
pub fn scan_1d_param(
    id: &CatalogId,
    base: &Params,
    axis: &Axis,
    ic: &Point,
    projection: usize,
    per_column: usize,
    opts: &ScanOptions,
) -> Result<BifurcationData> {
    axis.validate()?;
    check_axis_name(id, &axis.name)?;
    if projection >= id.dimension() {
        return Err(Error::InvalidOption(format!(
            "projection {projection} out of range for a {}D map",
            id.dimension()
        )));
    }
    if per_column == 0 || per_column > opts.classify.samples {
        return Err(Error::InvalidOption(format!(
            "points per column must be in 1..={}",
            opts.classify.samples
        )));
    }
    let c = &opts.classify;
    let orbit_opts = OrbitOptions {
        r_div: c.r_div,
        eps_fix: c.eps_fix,
        record_from: c.transient + c.samples - per_column,
        record_itinerary: false,
        ..OrbitOptions::default()
    };
    let columns = opts.pool()?.install(|| {
        (0..axis.n)
            .into_par_iter()
            .map(|i| {
                let mut p = base.clone();
                let param = axis.value(i);
                p.set(&axis.name, param);
                let map = make_catalog_map(id, &p)?;
                let orbit = iterate(&map, ic, c.transient + c.samples - 1, &orbit_opts)?;
                let (code, values) = match orbit.status {
                    OrbitStatus::Diverged => (CellCode::Gray, Vec::new()),
                    OrbitStatus::ConvergedToOrigin => (CellCode::Green, vec![orbit.last[projection]]),
                    OrbitStatus::Bounded => (
                        CellCode::Red,
                        orbit.points.iter().map(|q| q.point[projection]).collect(),
                    ),
                };
                Ok(BifurcationColumn { param, code, values })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BifurcationData {
        axis: axis.clone(),
        projection,
        columns,
        provenance: Provenance::new(id, base, vec![*ic], opts),
    })
}

/// Rectangle of initial conditions in the phase plane.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub x: Axis,
    pub y: Axis,
}

impl Window {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Self {
        Window {
            x: Axis::new("x", x.0, x.1, nx),
            y: Axis::new("y", y.0, y.1, ny),
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::xy(self.x.value(i), self.y.value(j))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasinLabel {
    Divergent,
    FixedPoint,
    /// Index of the nearest matching reference attractor.
    Attractor(usize),
    /// Bounded, but not within the match tolerance of any reference.
    Unmatched,
}

impl BasinLabel {
    pub fn code(&self) -> CellCode {
        match self {
            BasinLabel::Divergent => CellCode::Gray,
            BasinLabel::FixedPoint => CellCode::Green,
            BasinLabel::Attractor(_) => CellCode::Red,
            BasinLabel::Unmatched => CellCode::White,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasinOptions {
    pub transient: usize,
    /// Tail points compared with the references.
    pub tail: usize,
    /// A tail matches a reference when every tail point is this close to it.
    pub match_tol: f64,
    pub r_div: f64,
    pub eps_fix: f64,
    pub threads: usize,
}

impl Default for BasinOptions {
    fn default() -> Self {
        BasinOptions {
            transient: crate::orbit::DEFAULT_TRANSIENT,
            tail: 256,
            match_tol: 0.05,
            r_div: crate::orbit::R_DIV,
            eps_fix: crate::orbit::EPS_FIX,
            threads: 0,
        }
    }
}

/// Basin raster; `labels[j * nx + i]` belongs to `window.point(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BasinRaster {
    pub window: Window,
    pub labels: Vec<BasinLabel>,
}

impl BasinRaster {
    pub fn label(&self, i: usize, j: usize) -> BasinLabel {
        self.labels[j * self.window.x.n + i]
    }

    pub fn codes(&self) -> Vec<CellCode> {
        self.labels.iter().map(BasinLabel::code).collect()
    }

    /// Codes in image order, top row at the largest `y`.
    pub fn image(&self) -> (usize, usize, Vec<CellCode>) {
        image_order(self.window.x.n, self.window.y.n, &self.codes())
    }
}

/// Labels each initial condition of `window` by where its orbit goes.
pub fn basin_raster(
    map: &PwlMap,
    window: &Window,
    references: &[AttractorSample],
    opts: &BasinOptions,
) -> Result<BasinRaster> {
    if map.dim() != 2 {
        return Err(Error::InvalidOption("basin rasters need a 2D map".into()));
    }
    window.x.validate()?;
    window.y.validate()?;
    if opts.tail == 0 {
        return Err(Error::InvalidOption("tail must be positive".into()));
    }
    let indexes = references.iter().map(SampleIndex::new).collect::<Result<Vec<_>>>()?;
    let orbit_opts = OrbitOptions {
        r_div: opts.r_div,
        eps_fix: opts.eps_fix,
        record_from: opts.transient,
        record_itinerary: false,
        ..OrbitOptions::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::InvalidOption(format!("thread pool: {e}")))?;
    let (nx, ny) = (window.x.n, window.y.n);
    let rows: Vec<Vec<BasinLabel>> = pool.install(|| {
        (0..ny)
            .into_par_iter()
            .map(|j| {
                (0..nx)
                    .map(|i| {
                        let orbit = iterate(map, &window.point(i, j), opts.transient + opts.tail - 1, &orbit_opts)?;
                        Ok(match orbit.status {
                            OrbitStatus::Diverged => BasinLabel::Divergent,
                            OrbitStatus::ConvergedToOrigin => BasinLabel::FixedPoint,
                            OrbitStatus::Bounded => {
                                let tail: Vec<Point> = orbit.points.iter().map(|p| p.point).collect();
                                nearest_reference(&indexes, &tail, opts.match_tol)
                            }
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(BasinRaster {
        window: window.clone(),
        labels: rows.into_iter().flatten().collect(),
    })
}

fn nearest_reference(indexes: &[SampleIndex], tail: &[Point], tol: f64) -> BasinLabel {
    let mut best: Option<(usize, f64)> = None;
    for (k, idx) in indexes.iter().enumerate() {
        let d = idx.distance_from(tail);
        if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((k, d));
        }
    }
    best.map_or(BasinLabel::Unmatched, |(k, _)| BasinLabel::Attractor(k))
}
