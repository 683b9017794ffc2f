//! Forward images of a segment lying on a discontinuity set.
//!
//! Each generation maps every segment of the previous one through the piece
//! of the region it lies in, then cuts the images wherever they cross a
//! partition boundary. The union of the first few generations outlines the
//! absorbing polygon that traps an attractor.

use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::map_model::PwlMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    pub fn midpoint(&self) -> Point {
        self.a.lerp(&self.b, 0.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentImage {
    pub segment: Segment,
    pub depth: usize,
    /// Index (into [`CriticalImages::images`]) of the segment this one is an image of.
    pub parent: Option<usize>,
    /// Region containing the segment.
    pub region: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalImages {
    pub images: Vec<SegmentImage>,
    /// Convex hull of all endpoints (2D maps only), counter-clockwise.
    pub hull: Vec<Point>,
    /// First depth after which no generation enlarged the convex hull.
    pub stabilized_at: Option<usize>,
}

impl CriticalImages {
    pub fn generation(&self, depth: usize) -> impl Iterator<Item = &SegmentImage> {
        self.images.iter().filter(move |s| s.depth == depth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalOptions {
    pub r_div: f64,
    /// Pieces shorter than this are dropped.
    pub min_length: f64,
    pub max_segments: usize,
    /// Relative tolerance for the hull-growth test.
    pub hull_tol: f64,
}

impl Default for CriticalOptions {
    fn default() -> Self {
        CriticalOptions {
            r_div: super::R_DIV,
            min_length: 1e-12,
            max_segments: 1 << 18,
            hull_tol: 1e-9,
        }
    }
}

/// Splits `seg` at every boundary crossing, returning `(piece, region)` pairs.
fn split(map: &PwlMap, seg: &Segment, min_length: f64, ts: &mut Vec<f64>) -> Vec<(Segment, usize)> {
    ts.clear();
    for r in map.regions() {
        r.predicate.boundary_crossings(&seg.a, &seg.b, ts);
    }
    ts.push(0.0);
    ts.push(1.0);
    ts.sort_by(|x, y| x.partial_cmp(y).expect("finite crossing parameters"));
    ts.dedup();
    let mut out = Vec::with_capacity(ts.len());
    for w in ts.windows(2) {
        let piece = Segment::new(seg.a.lerp(&seg.b, w[0]), seg.a.lerp(&seg.b, w[1]));
        if piece.length() < min_length {
            continue;
        }
        let region = map.locate(&piece.midpoint());
        out.push((piece, region));
    }
    out
}

/// Images of `seed` up to `depth` generations.
pub fn critical_images(
    map: &PwlMap,
    seed: Segment,
    depth: usize,
    opts: &CriticalOptions,
) -> Result<CriticalImages> {
    map.region_of(&seed.a)?;
    map.region_of(&seed.b)?;
    let mut ts = Vec::new();
    let mut images: Vec<SegmentImage> = split(map, &seed, opts.min_length, &mut ts)
        .into_iter()
        .map(|(segment, region)| SegmentImage {
            segment,
            depth: 0,
            parent: None,
            region,
        })
        .collect();
    let planar = map.dim() == 2;
    let mut hull_points: Vec<Point> = images.iter().flat_map(|s| [s.segment.a, s.segment.b]).collect();
    let mut hull = if planar { convex_hull(&hull_points) } else { Vec::new() };
    let mut last_growth = 0;

    let mut prev = 0..images.len();
    for d in 1..=depth {
        let start = images.len();
        for idx in prev.clone() {
            let src = images[idx];
            let piece = &map.regions()[src.region].piece;
            let img = Segment::new(piece.apply(&src.segment.a), piece.apply(&src.segment.b));
            for p in [&img.a, &img.b] {
                if !p.is_finite() || p.norm() > opts.r_div {
                    return Err(Error::SegmentEscaped {
                        depth: d,
                        radius: opts.r_div,
                    });
                }
            }
            for (segment, region) in split(map, &img, opts.min_length, &mut ts) {
                images.push(SegmentImage {
                    segment,
                    depth: d,
                    parent: Some(idx),
                    region,
                });
            }
            if images.len() > opts.max_segments {
                return Err(Error::TooManySegments {
                    depth: d,
                    limit: opts.max_segments,
                });
            }
        }
        prev = start..images.len();
        if planar {
            let scale = hull_scale(&hull);
            let grew = images[prev.clone()].iter().any(|s| {
                !inside_hull(&hull, &s.segment.a, opts.hull_tol * scale)
                    || !inside_hull(&hull, &s.segment.b, opts.hull_tol * scale)
            });
            if grew {
                last_growth = d;
                hull_points.extend(images[prev.clone()].iter().flat_map(|s| [s.segment.a, s.segment.b]));
                hull = convex_hull(&hull_points);
                hull_points = hull.clone();
            }
        }
    }
    let stabilized_at = (planar && last_growth < depth).then_some(last_growth);
    Ok(CriticalImages {
        images,
        hull,
        stabilized_at,
    })
}

fn hull_scale(hull: &[Point]) -> f64 {
    hull.iter().map(Point::norm).fold(1.0, f64::max)
}

/// Andrew's monotone chain; returns the hull counter-clockwise without
/// repeating the first vertex.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| {
        a.x()
            .partial_cmp(&b.x())
            .unwrap()
            .then(a.y().partial_cmp(&b.y()).unwrap())
    });
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: &Point, a: &Point, b: &Point| (*a - *o).cross2(&(*b - *o));
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn inside_hull(hull: &[Point], p: &Point, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0].distance(p) <= tol,
        2 => {
            let seg = hull[1] - hull[0];
            let len = seg.norm();
            let rel = *p - hull[0];
            let t = rel.dot(&seg) / (len * len);
            (-tol..=1.0 + tol).contains(&t) && (rel.cross2(&seg).abs() / len) <= tol
        }
        n => (0..n).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            let edge = b - a;
            edge.cross2(&(*p - a)) >= -tol * edge.norm()
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::{make_catalog_map, CatalogId, Params};

    fn t1(tl: f64, dl: f64, tr: f64, dr: f64) -> PwlMap {
        make_catalog_map(
            &CatalogId::T1,
            &Params::new()
                .with("tauL", tl)
                .with("deltaL", dl)
                .with("tauR", tr)
                .with("deltaR", dr)
                .with("h", -1.0),
        )
        .unwrap()
    }

    #[test]
    fn depth_zero_is_seed() {
        let m = t1(0.4, 0.0, 0.8, 1.01);
        let seed = Segment::new(Point::xy(-1.0, -0.5), Point::xy(-1.0, 0.5));
        let out = critical_images(&m, seed, 0, &CriticalOptions::default()).unwrap();
        assert_eq!(out.images.len(), 1);
        assert_eq!(out.images[0].segment, seed);
    }

    #[test]
    fn images_are_split_at_the_discontinuity() {
        // T1 maps x = -1 onto y = deltaR; a long seed image must cross x = -1
        let m = t1(0.4, 0.0, 0.8, 1.01);
        let seed = Segment::new(Point::xy(-1.0, -3.0), Point::xy(-1.0, 3.0));
        let out = critical_images(&m, seed, 3, &CriticalOptions::default()).unwrap();
        for img in &out.images {
            let mid = img.segment.midpoint();
            assert_eq!(m.region_of(&mid).unwrap(), img.region);
            // endpoints do not straddle x = -1
            let (a, b) = (img.segment.a.x() + 1.0, img.segment.b.x() + 1.0);
            assert!(a * b >= -1e-12);
        }
        assert!(out.generation(1).count() >= 1);
    }

    #[test]
    fn hull_of_square() {
        let pts = [
            Point::xy(0.0, 0.0),
            Point::xy(1.0, 0.0),
            Point::xy(1.0, 1.0),
            Point::xy(0.0, 1.0),
            Point::xy(0.5, 0.5),
        ];
        let h = convex_hull(&pts);
        assert_eq!(h.len(), 4);
        assert!(inside_hull(&h, &Point::xy(0.3, 0.9), 0.0));
        assert!(!inside_hull(&h, &Point::xy(1.1, 0.5), 1e-9));
    }

    #[test]
    fn escape_is_an_error() {
        let m = t1(5.0, 5.0, 5.0, 5.0);
        let seed = Segment::new(Point::xy(-1.0, -1.0), Point::xy(-1.0, 1.0));
        assert!(matches!(
            critical_images(&m, seed, 40, &CriticalOptions::default()),
            Err(Error::SegmentEscaped { .. }) | Err(Error::TooManySegments { .. })
        ));
    }
}
