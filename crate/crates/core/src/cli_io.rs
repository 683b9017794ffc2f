//! Run configurations, command dispatch and file emitters.
//!
//! A configuration is a list of `key = value` lines. Keys before the first
//! `[section]` header describe the map, the initial condition and the
//! numerical thresholds; each section holds the settings of one command.
//! `#` starts a comment.
//!
//! ```text
//! command = classify
//! map = T1
//! tauL = -2
//! deltaL = 0.9
//! tauR = -1.449
//! deltaR = 1.11
//! ic = 0.1, 0.1
//!
//! [scan2d]
//! x_axis = tauL -3 3 200
//! y_axis = tauR -2.5 2.5 200
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::circle_map::{rotation_number, CircleMap1D};
use crate::classifier::{classify_attractor, omega_limit_sample, ClassifyOptions, OmegaLimit};
use crate::first_return::{build_return_map, ReturnOutcome};
use crate::linalg::Point;
use crate::map_model::{make_catalog_map, CatalogId, Params, T9Border};
use crate::orbit::{critical_images, iterate, CriticalOptions, OrbitOptions, Segment};
use crate::scan::{
    basin_raster, scan_1d_param, scan_2d_params, Axis, BasinOptions, CellCode, ScanMode, ScanOptions, Window,
    DEFAULT_SEED,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    TypeMismatch {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing `{0}`")]
    Missing(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot write an empty {0}x{1} image")]
    EmptyImage(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Orbit,
    Classify,
    ReturnMap,
    Rotation,
    Scan1d,
    Scan2d,
    Basin,
    CriticalImages,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Orbit,
        Command::Classify,
        Command::ReturnMap,
        Command::Rotation,
        Command::Scan1d,
        Command::Scan2d,
        Command::Basin,
        Command::CriticalImages,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Command::Orbit => "orbit",
            Command::Classify => "classify",
            Command::ReturnMap => "return-map",
            Command::Rotation => "rotation",
            Command::Scan1d => "scan1d",
            Command::Scan2d => "scan2d",
            Command::Basin => "basin",
            Command::CriticalImages => "critical-images",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Numerical thresholds shared by all commands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub transient: usize,
    pub samples: usize,
    pub r_div: f64,
    pub eps_fix: f64,
    pub l_max: usize,
    pub eps_line: f64,
    pub angular_bins: usize,
    pub k_max: usize,
    pub b_max: usize,
    pub probes: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        let c = ClassifyOptions::default();
        Thresholds {
            transient: c.transient,
            samples: c.samples,
            r_div: c.r_div,
            eps_fix: c.eps_fix,
            l_max: c.l_max,
            eps_line: c.eps_line,
            angular_bins: c.angular_bins,
            k_max: c.return_opts.k_max,
            b_max: c.return_opts.b_max,
            probes: c.return_opts.probes,
        }
    }
}

impl Thresholds {
    pub fn classify_options(&self) -> ClassifyOptions {
        let mut c = ClassifyOptions {
            transient: self.transient,
            samples: self.samples,
            r_div: self.r_div,
            eps_fix: self.eps_fix,
            l_max: self.l_max,
            eps_line: self.eps_line,
            angular_bins: self.angular_bins,
            ..ClassifyOptions::default()
        };
        c.return_opts.k_max = self.k_max;
        c.return_opts.b_max = self.b_max;
        c.return_opts.probes = self.probes;
        c
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitSection {
    pub n_max: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReturnSection {
    /// Slope of the ray `y = m x`.
    pub slope: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationSection {
    pub orbit_len: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scan1dSection {
    pub axis: Axis,
    pub projection: usize,
    pub per_column: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scan2dSection {
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub mode: ScanMode,
    pub extra_ics: usize,
    pub ic_box: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasinSection {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Initial conditions of the reference attractors.
    pub references: Vec<Point>,
    pub tail: usize,
    pub match_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalSection {
    pub a: Point,
    pub b: Point,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub map: CatalogId,
    pub params: Params,
    pub ic: Point,
    pub seed: u64,
    /// Worker threads for scans; 0 uses every core.
    pub threads: usize,
    pub out: Option<PathBuf>,
    pub thresholds: Thresholds,
    pub orbit: Option<OrbitSection>,
    pub return_map: Option<ReturnSection>,
    pub rotation: Option<RotationSection>,
    pub scan1d: Option<Scan1dSection>,
    pub scan2d: Option<Scan2dSection>,
    pub basin: Option<BasinSection>,
    pub critical: Option<CriticalSection>,
}

/// Default initial condition for a map of dimension `dim`.
pub fn default_ic(dim: usize) -> Point {
    Point::new(&vec![0.1; dim])
}

struct Entry {
    line: usize,
    value: String,
}

/// Key/value pairs of one section, consumed as they are read so that
/// leftovers can be reported as unknown.
struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(Some).map_err(|_| ConfigError::TypeMismatch {
                line: e.line,
                key: key.into(),
                expected,
                value: e.value,
            }),
        }
    }

    fn float(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse::<f64>(key, "a number")
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse::<usize>(key, "a non-negative integer")
    }

    fn required<T>(&mut self, key: &str, section: &str, f: impl FnOnce(&mut Self, &str) -> Result<Option<T>, ConfigError>) -> Result<T, ConfigError> {
        f(self, key)?.ok_or_else(|| ConfigError::Missing(format!("{section}{key}")))
    }

    fn point(&mut self, key: &str) -> Result<Option<Point>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse_point(&e.value)
                .map(Some)
                .ok_or(ConfigError::TypeMismatch {
                    line: e.line,
                    key: key.into(),
                    expected: "comma-separated coordinates",
                    value: e.value,
                }),
        }
    }

    fn pair(&mut self, key: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => match parse_point(&e.value) {
                Some(p) if p.dim() == 2 => Ok(Some((p[0], p[1]))),
                _ => Err(ConfigError::TypeMismatch {
                    line: e.line,
                    key: key.into(),
                    expected: "`lo, hi`",
                    value: e.value,
                }),
            },
        }
    }

    fn axis(&mut self, key: &str) -> Result<Option<(Axis, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(e) => parse_axis(&e.value)
                .map(|a| Some((a, e.line)))
                .ok_or(ConfigError::TypeMismatch {
                    line: e.line,
                    key: key.into(),
                    expected: "`name lo hi n`",
                    value: e.value,
                }),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => Err(ConfigError::UnknownKey { line: e.line, key }),
        }
    }
}

fn parse_point(s: &str) -> Option<Point> {
    let coords: Vec<f64> = s.split(',').map(|c| c.trim().parse().ok()).collect::<Option<_>>()?;
    if coords.is_empty() || coords.len() > crate::linalg::MAX_DIM || coords.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(Point::new(&coords))
}

fn parse_axis(s: &str) -> Option<Axis> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != 4 {
        return None;
    }
    Some(Axis::new(
        parts[0],
        parts[1].parse().ok()?,
        parts[2].parse().ok()?,
        parts[3].parse().ok()?,
    ))
}

fn invalid(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Syntax { line, msg: msg.into() }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut sections: BTreeMap<String, (usize, Table)> = BTreeMap::new();
    sections.insert(String::new(), (0, Table { entries: BTreeMap::new() }));
    let mut current = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| invalid(line, "unterminated section header"))?
                .trim();
            if name.parse::<Command>().is_err() {
                return Err(invalid(line, format!("unknown section `[{name}]`")));
            }
            if sections.contains_key(name) {
                return Err(invalid(line, format!("section `[{name}]` appears twice")));
            }
            sections.insert(name.to_string(), (line, Table { entries: BTreeMap::new() }));
            current = name.to_string();
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| invalid(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(invalid(line, format!("malformed key `{key}`")));
        }
        if value.is_empty() {
            return Err(invalid(line, format!("`{key}` has no value")));
        }
        let table = &mut sections.get_mut(&current).expect("section registered").1;
        if table.entries.contains_key(key) {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
        table.entries.insert(
            key.to_string(),
            Entry {
                line,
                value: value.to_string(),
            },
        );
    }

    let (_, mut top) = sections.remove("").expect("top level");
    let command = match top.take("command") {
        None => None,
        Some(e) => Some(e.value.parse::<Command>().map_err(|msg| invalid(e.line, msg))?),
    };
    let map_entry = top.take("map").ok_or_else(|| ConfigError::Missing("map".into()))?;
    let mut map: CatalogId = map_entry
        .value
        .parse()
        .map_err(|e: crate::Error| invalid(map_entry.line, e.to_string()))?;
    if let Some(e) = top.take("border") {
        let border: T9Border = e.value.parse().map_err(|err: crate::Error| invalid(e.line, err.to_string()))?;
        match map {
            CatalogId::T9(_) => map = CatalogId::T9(border),
            _ => return Err(ConfigError::UnknownKey { line: e.line, key: "border".into() }),
        }
    }
    let mut params = Params::new();
    let mut first_param_line = None;
    for (name, _) in map.parameters() {
        if let Some(e) = top.entries.get(*name) {
            first_param_line = Some(first_param_line.map_or(e.line, |l: usize| l.min(e.line)));
        }
        if let Some(v) = top.float(name)? {
            params.set(name, v);
        }
    }
    let ic = top.point("ic")?.unwrap_or_else(|| default_ic(map.dimension()));
    if ic.dim() != map.dimension() {
        return Err(ConfigError::Invalid(format!(
            "`ic` has {} coordinates, map {map} is {}D",
            ic.dim(),
            map.dimension()
        )));
    }
    let seed = top.parse::<u64>("seed", "an unsigned integer")?.unwrap_or(DEFAULT_SEED);
    let threads = top.count("threads")?.unwrap_or(0);
    let out = top.take("out").map(|e| PathBuf::from(e.value));
    let d = Thresholds::default();
    let thresholds = Thresholds {
        transient: top.count("transient")?.unwrap_or(d.transient),
        samples: top.count("samples")?.unwrap_or(d.samples),
        r_div: top.float("r_div")?.unwrap_or(d.r_div),
        eps_fix: top.float("eps_fix")?.unwrap_or(d.eps_fix),
        l_max: top.count("l_max")?.unwrap_or(d.l_max),
        eps_line: top.float("eps_line")?.unwrap_or(d.eps_line),
        angular_bins: top.count("angular_bins")?.unwrap_or(d.angular_bins),
        k_max: top.count("k_max")?.unwrap_or(d.k_max),
        b_max: top.count("b_max")?.unwrap_or(d.b_max),
        probes: top.count("probes")?.unwrap_or(d.probes),
    };
    top.finish()?;
    if thresholds.samples == 0 {
        return Err(ConfigError::Invalid("`samples` must be positive".into()));
    }
    if !(thresholds.r_div > thresholds.eps_fix && thresholds.eps_fix > 0.0) {
        return Err(ConfigError::Invalid("need r_div > eps_fix > 0".into()));
    }
    if !matches!(map, CatalogId::Custom(_)) {
        make_catalog_map(&map, &params).map_err(|e| match first_param_line {
            Some(line) => invalid(line, e.to_string()),
            None => ConfigError::Invalid(e.to_string()),
        })?;
    }

    let mut cfg = RunConfig {
        command,
        map,
        params,
        ic,
        seed,
        threads,
        out,
        thresholds,
        orbit: None,
        return_map: None,
        rotation: None,
        scan1d: None,
        scan2d: None,
        basin: None,
        critical: None,
    };
    for (name, (header_line, mut t)) in sections {
        let cmd: Command = name.parse().expect("validated section name");
        match cmd {
            Command::Orbit => {
                let n_max = t.count("n_max")?.unwrap_or(1000);
                if n_max == 0 {
                    return Err(invalid(header_line, "[orbit] n_max must be at least 1"));
                }
                cfg.orbit = Some(OrbitSection { n_max });
            }
            Command::Classify => {}
            Command::ReturnMap => {
                let slope = t.required("slope", "[return-map] ", Table::float)?;
                let lo = t.required("lo", "[return-map] ", Table::float)?;
                let hi = t.required("hi", "[return-map] ", Table::float)?;
                cfg.return_map = Some(ReturnSection { slope, lo, hi });
            }
            Command::Rotation => {
                let orbit_len = t.count("orbit_len")?.unwrap_or(100_000);
                cfg.rotation = Some(RotationSection { orbit_len });
            }
            Command::Scan1d => {
                let (axis, line) = t
                    .axis("axis")?
                    .ok_or_else(|| ConfigError::Missing("[scan1d] axis".into()))?;
                check_axis(&cfg.map, &axis, line)?;
                let projection = t.count("projection")?.unwrap_or(0);
                let per_column = t.count("per_column")?.unwrap_or(100);
                cfg.scan1d = Some(Scan1dSection {
                    axis,
                    projection,
                    per_column,
                });
            }
            Command::Scan2d => {
                let (x_axis, lx) = t
                    .axis("x_axis")?
                    .ok_or_else(|| ConfigError::Missing("[scan2d] x_axis".into()))?;
                let (y_axis, ly) = t
                    .axis("y_axis")?
                    .ok_or_else(|| ConfigError::Missing("[scan2d] y_axis".into()))?;
                check_axis(&cfg.map, &x_axis, lx)?;
                check_axis(&cfg.map, &y_axis, ly)?;
                let mode = match t.take("mode") {
                    None => ScanMode::Coarse,
                    Some(e) => match e.value.as_str() {
                        "coarse" => ScanMode::Coarse,
                        "full" => ScanMode::Full,
                        _ => {
                            return Err(ConfigError::TypeMismatch {
                                line: e.line,
                                key: "mode".into(),
                                expected: "`coarse` or `full`",
                                value: e.value,
                            })
                        }
                    },
                };
                let extra_ics = t.count("extra_ics")?.unwrap_or(0);
                let ic_box = t.float("ic_box")?.unwrap_or(2.0);
                cfg.scan2d = Some(Scan2dSection {
                    x_axis,
                    y_axis,
                    mode,
                    extra_ics,
                    ic_box,
                });
            }
            Command::Basin => {
                let x = t
                    .pair("x")?
                    .ok_or_else(|| ConfigError::Missing("[basin] x".into()))?;
                let y = t
                    .pair("y")?
                    .ok_or_else(|| ConfigError::Missing("[basin] y".into()))?;
                let nx = t.required("nx", "[basin] ", Table::count)?;
                let ny = t.required("ny", "[basin] ", Table::count)?;
                let references = match t.take("references") {
                    None => vec![cfg.ic],
                    Some(e) => e
                        .value
                        .split(';')
                        .map(parse_point)
                        .collect::<Option<Vec<_>>>()
                        .ok_or(ConfigError::TypeMismatch {
                            line: e.line,
                            key: "references".into(),
                            expected: "`x, y; x, y; ...`",
                            value: e.value.clone(),
                        })?,
                };
                let defaults = BasinOptions::default();
                let tail = t.count("tail")?.unwrap_or(defaults.tail);
                let match_tol = t.float("match_tol")?.unwrap_or(defaults.match_tol);
                if nx == 0 || ny == 0 {
                    return Err(invalid(header_line, "[basin] nx and ny must be positive"));
                }
                cfg.basin = Some(BasinSection {
                    x,
                    y,
                    nx,
                    ny,
                    references,
                    tail,
                    match_tol,
                });
            }
            Command::CriticalImages => {
                let a = t
                    .point("a")?
                    .ok_or_else(|| ConfigError::Missing("[critical-images] a".into()))?;
                let b = t
                    .point("b")?
                    .ok_or_else(|| ConfigError::Missing("[critical-images] b".into()))?;
                let depth = t.count("depth")?.unwrap_or(10);
                cfg.critical = Some(CriticalSection { a, b, depth });
            }
        }
        t.finish()?;
    }
    Ok(cfg)
}

fn check_axis(map: &CatalogId, axis: &Axis, line: usize) -> Result<(), ConfigError> {
    if !map.parameters().iter().any(|(n, _)| *n == axis.name) {
        return Err(invalid(line, format!("map {map} has no parameter `{}`", axis.name)));
    }
    if axis.n == 0 {
        return Err(invalid(line, "axis needs at least one node"));
    }
    Ok(())
}

fn fmt_point(p: &Point) -> String {
    p.coords().iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(", ")
}

fn fmt_axis(a: &Axis) -> String {
    format!("{} {} {} {}", a.name, a.lo, a.hi, a.n)
}

/// Canonical text of a configuration; `parse_config` reads it back unchanged.
pub fn render(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let w = &mut s;
    if let Some(c) = cfg.command {
        let _ = writeln!(w, "command = {c}");
    }
    let _ = writeln!(w, "map = {}", cfg.map);
    if let CatalogId::T9(b) = &cfg.map {
        let _ = writeln!(w, "border = {b}");
    }
    for (k, v) in cfg.params.iter() {
        let _ = writeln!(w, "{k} = {v}");
    }
    let _ = writeln!(w, "ic = {}", fmt_point(&cfg.ic));
    let _ = writeln!(w, "seed = {}", cfg.seed);
    let _ = writeln!(w, "threads = {}", cfg.threads);
    if let Some(o) = &cfg.out {
        let _ = writeln!(w, "out = {}", o.display());
    }
    let t = &cfg.thresholds;
    let _ = writeln!(w, "transient = {}", t.transient);
    let _ = writeln!(w, "samples = {}", t.samples);
    let _ = writeln!(w, "r_div = {}", t.r_div);
    let _ = writeln!(w, "eps_fix = {}", t.eps_fix);
    let _ = writeln!(w, "l_max = {}", t.l_max);
    let _ = writeln!(w, "eps_line = {}", t.eps_line);
    let _ = writeln!(w, "angular_bins = {}", t.angular_bins);
    let _ = writeln!(w, "k_max = {}", t.k_max);
    let _ = writeln!(w, "b_max = {}", t.b_max);
    let _ = writeln!(w, "probes = {}", t.probes);
    if let Some(o) = &cfg.orbit {
        let _ = writeln!(w, "\n[orbit]\nn_max = {}", o.n_max);
    }
    if let Some(r) = &cfg.return_map {
        let _ = writeln!(w, "\n[return-map]\nslope = {}\nlo = {}\nhi = {}", r.slope, r.lo, r.hi);
    }
    if let Some(r) = &cfg.rotation {
        let _ = writeln!(w, "\n[rotation]\norbit_len = {}", r.orbit_len);
    }
    if let Some(r) = &cfg.scan1d {
        let _ = writeln!(
            w,
            "\n[scan1d]\naxis = {}\nprojection = {}\nper_column = {}",
            fmt_axis(&r.axis),
            r.projection,
            r.per_column
        );
    }
    if let Some(r) = &cfg.scan2d {
        let mode = match r.mode {
            ScanMode::Coarse => "coarse",
            ScanMode::Full => "full",
        };
        let _ = writeln!(
            w,
            "\n[scan2d]\nx_axis = {}\ny_axis = {}\nmode = {mode}\nextra_ics = {}\nic_box = {}",
            fmt_axis(&r.x_axis),
            fmt_axis(&r.y_axis),
            r.extra_ics,
            r.ic_box
        );
    }
    if let Some(b) = &cfg.basin {
        let refs: Vec<String> = b.references.iter().map(fmt_point).collect();
        let _ = writeln!(
            w,
            "\n[basin]\nx = {}, {}\ny = {}, {}\nnx = {}\nny = {}\nreferences = {}\ntail = {}\nmatch_tol = {}",
            b.x.0,
            b.x.1,
            b.y.0,
            b.y.1,
            b.nx,
            b.ny,
            refs.join("; "),
            b.tail,
            b.match_tol
        );
    }
    if let Some(c) = &cfg.critical {
        let _ = writeln!(
            w,
            "\n[critical-images]\na = {}\nb = {}\ndepth = {}",
            fmt_point(&c.a),
            fmt_point(&c.b),
            c.depth
        );
    }
    s
}

/// Binary PPM (P6) image of a code grid given in image order.
pub fn encode_ppm(width: usize, height: usize, codes: &[CellCode]) -> Result<Vec<u8>, RunError> {
    if width == 0 || height == 0 || codes.len() != width * height {
        return Err(RunError::EmptyImage(width, height));
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * codes.len());
    for c in codes {
        out.extend_from_slice(&c.rgb());
    }
    Ok(out)
}

pub fn write_ppm(path: &Path, width: usize, height: usize, codes: &[CellCode]) -> Result<(), RunError> {
    let bytes = encode_ppm(width, height, codes)?;
    write_file(path, &bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    fs::write(path, bytes).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Path of the provenance text written next to an image.
pub fn sidecar_path(image: &Path) -> PathBuf {
    let mut s = image.as_os_str().to_owned();
    s.push(".txt");
    PathBuf::from(s)
}

/// Full-precision rendering used in CSV output.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    /// One-line summary printed by the command-line tool.
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

fn counts(codes: &[CellCode]) -> String {
    [CellCode::Gray, CellCode::Green, CellCode::Red, CellCode::White]
        .iter()
        .map(|c| format!("{}={}", c.name(), codes.iter().filter(|&x| x == c).count()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn section<T>(s: &Option<T>, cmd: Command) -> Result<&T, ConfigError> {
    s.as_ref()
        .ok_or_else(|| ConfigError::Missing(format!("[{}] section", cmd.name())))
}

/// Runs the configured command, writing its artifacts under `cfg.out`.
pub fn run_command(cfg: &RunConfig) -> Result<Report, RunError> {
    let cmd = cfg
        .command
        .ok_or_else(|| ConfigError::Missing("command".into()))?;
    let opts = cfg.thresholds.classify_options();
    let mut artifacts = Vec::new();
    let summary = match cmd {
        Command::Orbit => {
            let o = section(&cfg.orbit, cmd)?;
            let map = make_catalog_map(&cfg.map, &cfg.params)?;
            let orbit_opts = OrbitOptions {
                r_div: opts.r_div,
                eps_fix: opts.eps_fix,
                record_itinerary: false,
                ..OrbitOptions::default()
            };
            let orbit = iterate(&map, &cfg.ic, o.n_max, &orbit_opts)?;
            if let Some(path) = &cfg.out {
                let coords = ["x", "y", "z"];
                let mut header = vec!["step"];
                header.extend(&coords[..map.dim()]);
                let body = csv(
                    &header,
                    orbit.points.iter().map(|p| {
                        let mut row = vec![p.step.to_string()];
                        row.extend(p.point.coords().iter().map(|&c| csv_float(c)));
                        row
                    }),
                );
                write_file(path, body.as_bytes())?;
                artifacts.push(path.clone());
            }
            format!("orbit {:?} steps={} last={}", orbit.status, orbit.steps, orbit.last)
        }
        Command::Classify => {
            let map = make_catalog_map(&cfg.map, &cfg.params)?;
            classify_attractor(&map, &cfg.ic, &opts)?.summary()
        }
        Command::ReturnMap => {
            let r = section(&cfg.return_map, cmd)?;
            let map = make_catalog_map(&cfg.map, &cfg.params)?;
            match build_return_map(&map, r.slope, (r.lo, r.hi), &opts.return_opts)? {
                ReturnOutcome::Failure(f) => format!("return map FAILURE {f}"),
                ReturnOutcome::Map(rm) => {
                    if let Some(path) = &cfg.out {
                        let body = csv(
                            &["left", "right", "slope", "return_time", "sequence"],
                            rm.branches.iter().map(|b| {
                                let seq: String = b
                                    .sequence
                                    .iter()
                                    .map(|&r| map.region_label(r as usize).to_string())
                                    .collect();
                                vec![
                                    csv_float(b.left),
                                    csv_float(b.right),
                                    csv_float(b.slope),
                                    b.return_time.to_string(),
                                    seq,
                                ]
                            }),
                        );
                        write_file(path, body.as_bytes())?;
                        artifacts.push(path.clone());
                    }
                    let slopes: Vec<String> = rm.branches.iter().map(|b| format!("{:.6}", b.slope)).collect();
                    let times: Vec<String> = rm.branches.iter().map(|b| b.return_time.to_string()).collect();
                    format!(
                        "return map {} branches slopes=[{}] times=[{}]",
                        rm.branches.len(),
                        slopes.join(", "),
                        times.join(", ")
                    )
                }
            }
        }
        Command::Rotation => {
            let rs = section(&cfg.rotation, cmd)?;
            let circle = if cfg.map == CatalogId::F {
                let g = |k: &str| cfg.params.get(k).ok_or_else(|| ConfigError::Missing(k.into()));
                CircleMap1D::two_branch(g("sL")?, g("sR")?, g("h")?)?
            } else {
                let r = section(&cfg.return_map, Command::ReturnMap)?;
                let map = make_catalog_map(&cfg.map, &cfg.params)?;
                match build_return_map(&map, r.slope, (r.lo, r.hi), &opts.return_opts)? {
                    ReturnOutcome::Map(rm) => rm.to_circle_map()?,
                    ReturnOutcome::Failure(f) => {
                        return Ok(Report {
                            summary: format!("rotation FAILURE {f}"),
                            artifacts,
                        })
                    }
                }
            };
            let mut ro = opts.rotation_opts;
            ro.orbit_len = rs.orbit_len;
            let r = rotation_number(&circle, &ro)?;
            match r.certificate {
                Some((p, q)) => format!("rotation rho={:.10} rational p={p} q={q}", r.rho),
                None => format!("rotation rho={:.10} irrational", r.rho),
            }
        }
        Command::Scan1d => {
            let s = section(&cfg.scan1d, cmd)?;
            let so = scan_options(cfg, ScanMode::Coarse, 0, 2.0);
            let data = scan_1d_param(&cfg.map, &cfg.params, &s.axis, &cfg.ic, s.projection, s.per_column, &so)?;
            if let Some(path) = &cfg.out {
                let body = csv(
                    &["param", "value"],
                    data.pairs().map(|(p, v)| vec![csv_float(p), csv_float(v)]),
                );
                write_file(path, body.as_bytes())?;
                artifacts.push(path.clone());
            }
            let codes: Vec<CellCode> = data.columns.iter().map(|c| c.code).collect();
            format!("scan1d {} columns {}", data.columns.len(), counts(&codes))
        }
        Command::Scan2d => {
            let s = section(&cfg.scan2d, cmd)?;
            let so = scan_options(cfg, s.mode, s.extra_ics, s.ic_box);
            let grid = scan_2d_params(&cfg.map, &cfg.params, &s.x_axis, &s.y_axis, &cfg.ic, &so)?;
            if let Some(path) = &cfg.out {
                let (w, h, img) = grid.image();
                write_ppm(path, w, h, &img)?;
                let mut text = grid.provenance.to_text();
                let _ = writeln!(text, "x_axis = {}", fmt_axis(&s.x_axis));
                let _ = writeln!(text, "y_axis = {}", fmt_axis(&s.y_axis));
                let side = sidecar_path(path);
                write_file(&side, text.as_bytes())?;
                artifacts.push(path.clone());
                artifacts.push(side);
            }
            format!("scan2d {}x{} {}", grid.width(), grid.height(), counts(&grid.codes))
        }
        Command::Basin => {
            let b = section(&cfg.basin, cmd)?;
            let map = make_catalog_map(&cfg.map, &cfg.params)?;
            let mut refs = Vec::new();
            for ic in &b.references {
                if let OmegaLimit::Sample(s) = omega_limit_sample(&map, ic, &opts)? {
                    refs.push(s);
                }
            }
            let window = Window::new(b.x, b.y, b.nx, b.ny);
            let bo = BasinOptions {
                transient: opts.transient,
                tail: b.tail,
                match_tol: b.match_tol,
                r_div: opts.r_div,
                eps_fix: opts.eps_fix,
                threads: cfg.threads,
            };
            let raster = basin_raster(&map, &window, &refs, &bo)?;
            if let Some(path) = &cfg.out {
                let (w, h, img) = raster.image();
                write_ppm(path, w, h, &img)?;
                let side = sidecar_path(path);
                write_file(&side, render(cfg).as_bytes())?;
                artifacts.push(path.clone());
                artifacts.push(side);
            }
            format!(
                "basin {}x{} references={} {}",
                b.nx,
                b.ny,
                refs.len(),
                counts(&raster.codes())
            )
        }
        Command::CriticalImages => {
            let c = section(&cfg.critical, cmd)?;
            let map = make_catalog_map(&cfg.map, &cfg.params)?;
            let ci = critical_images(&map, Segment::new(c.a, c.b), c.depth, &CriticalOptions::default())?;
            if let Some(path) = &cfg.out {
                let dim = map.dim();
                let mut header = vec!["depth".to_string()];
                for end in ["a", "b"] {
                    for axis in &["x", "y", "z"][..dim] {
                        header.push(format!("{end}{axis}"));
                    }
                }
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let body = csv(
                    &header,
                    ci.images.iter().map(|s| {
                        let mut row = vec![s.depth.to_string()];
                        row.extend(s.segment.a.coords().iter().map(|&v| csv_float(v)));
                        row.extend(s.segment.b.coords().iter().map(|&v| csv_float(v)));
                        row
                    }),
                );
                write_file(path, body.as_bytes())?;
                artifacts.push(path.clone());
            }
            let stab = ci
                .stabilized_at
                .map_or("not stabilized".to_string(), |d| format!("hull stable after depth {d}"));
            format!("critical images {} segments, {stab}", ci.images.len())
        }
    };
    Ok(Report { summary, artifacts })
}

fn scan_options(cfg: &RunConfig, mode: ScanMode, extra_ics: usize, ic_box: f64) -> ScanOptions {
    ScanOptions {
        classify: cfg.thresholds.classify_options(),
        mode,
        threads: cfg.threads,
        extra_ics,
        ic_box,
        seed: cfg.seed,
    }
}
