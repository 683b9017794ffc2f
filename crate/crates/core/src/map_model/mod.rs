//! Piecewise-linear map definitions, the map catalog and the linear-algebra
//! primitives the rest of the crate builds on.

mod catalog;
mod eigen;
mod partition;

pub use catalog::{
    affine_normal_form, conjugate_affine_to_homogeneous, make_catalog_map, AffineParams,
    CatalogId, T9Border,
};
pub use eigen::{char_poly_at_one, eigen_2x2, EigenPair, Eigenvalue};
pub use partition::Predicate;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};

/// Flat named-scalar parameter record (`tauL`, `deltaR`, `alpha`, ...).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, f64)> for Params {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        Params(iter.into_iter().collect())
    }
}

/// `X' = matrix X + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearPiece {
    pub matrix: Matrix,
    pub offset: Point,
}

impl LinearPiece {
    pub fn homogeneous(matrix: Matrix) -> Self {
        let offset = Point::zeros(matrix.dim());
        LinearPiece { matrix, offset }
    }

    pub fn affine(matrix: Matrix, offset: Point) -> Self {
        assert_eq!(matrix.dim(), offset.dim());
        LinearPiece { matrix, offset }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.offset.coords().iter().all(|v| *v == 0.0)
    }

    #[inline]
    pub fn apply(&self, x: &Point) -> Point {
        self.matrix.apply(x) + self.offset
    }

    /// Fixed point of the piece's function, real or virtual.
    pub fn fixed_point(&self) -> Option<Point> {
        if self.is_homogeneous() {
            return Some(Point::zeros(self.matrix.dim()));
        }
        let n = self.matrix.dim();
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j { 1.0 } else { 0.0 } - self.matrix.get(i, j);
            }
        }
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        let inv = Matrix::from_rows(&refs).inverse()?;
        Some(inv.apply(&self.offset))
    }
}

/// One partition of phase space together with the function applied there.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: String,
    pub predicate: Predicate,
    pub piece: LinearPiece,
}

/// Cached per-region facts used in the iteration hot loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PieceInfo {
    pub contracting: bool,
    pub fixed_point: Option<Point>,
}

/// A piecewise-linear map in R^n.
///
/// Region membership is decided by order: a point belongs to the first
/// region whose (strict) predicate it satisfies, and the last region takes
/// everything left over. Points on a discontinuity therefore join the region
/// listed after the one whose open predicate excludes them (for `T1`, the
/// line `x = h` belongs to `R`).
#[derive(Clone, Debug, PartialEq)]
pub struct PwlMap {
    dim: usize,
    regions: Vec<Region>,
    id: CatalogId,
    params: Params,
    info: Vec<PieceInfo>,
}

impl PwlMap {
    pub fn new(id: CatalogId, params: Params, regions: Vec<Region>) -> Result<Self> {
        let first = regions
            .first()
            .ok_or_else(|| Error::InvalidOption("map needs at least one region".into()))?;
        let dim = first.piece.matrix.dim();
        for r in &regions {
            if r.piece.matrix.dim() != dim || r.piece.offset.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.piece.matrix.dim(),
                });
            }
            if !r.piece.matrix.is_finite() || !r.piece.offset.is_finite() {
                return Err(Error::InvalidParameter {
                    param: r.label.clone(),
                    reason: "non-finite matrix entry".into(),
                });
            }
        }
        let info = regions
            .iter()
            .map(|r| PieceInfo {
                contracting: r.piece.matrix.spectral_radius() < 1.0,
                fixed_point: r.piece.fixed_point(),
            })
            .collect();
        Ok(PwlMap {
            dim,
            regions,
            id,
            params,
            info,
        })
    }

    /// A map applying the same homogeneous matrix everywhere.
    pub fn globally_linear(matrix: Matrix) -> Self {
        PwlMap::new(
            CatalogId::Custom("linear".into()),
            Params::new(),
            vec![Region {
                label: "G".into(),
                predicate: Predicate::Everywhere,
                piece: LinearPiece::homogeneous(matrix),
            }],
        )
        .expect("single finite region")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn id(&self) -> &CatalogId {
        &self.id
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn region_label(&self, idx: usize) -> &str {
        &self.regions[idx].label
    }

    pub fn jacobian(&self, region: usize) -> &Matrix {
        &self.regions[region].piece.matrix
    }

    pub fn is_homogeneous(&self) -> bool {
        self.regions.iter().all(|r| r.piece.is_homogeneous())
    }

    pub(crate) fn piece_info(&self, region: usize) -> &PieceInfo {
        &self.info[region]
    }

    #[inline]
    pub(crate) fn locate(&self, x: &Point) -> usize {
        let last = self.regions.len() - 1;
        for (i, r) in self.regions[..last].iter().enumerate() {
            if r.predicate.contains(x) {
                return i;
            }
        }
        last
    }

    /// Unchecked single step used by the iteration engines.
    #[inline]
    pub(crate) fn step(&self, x: &Point) -> (Point, usize) {
        let r = self.locate(x);
        (self.regions[r].piece.apply(x), r)
    }

    fn check_input(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinitePoint(*x));
        }
        Ok(())
    }

    /// Index of the region containing `x`.
    pub fn region_of(&self, x: &Point) -> Result<usize> {
        self.check_input(x)?;
        Ok(self.locate(x))
    }

    /// Image of `x` and the index of the region whose function produced it.
    pub fn evaluate(&self, x: &Point) -> Result<(Point, usize)> {
        self.check_input(x)?;
        let (img, r) = self.step(x);
        if !img.is_finite() {
            return Err(Error::Overflow(*x));
        }
        Ok((img, r))
    }

    /// Rank-1 preimages of `y`: every `x` with `T(x) = y` obtained by
    /// inverting one piece and checking that the result lies in that piece's
    /// region. Pieces with zero determinant are reported, not inverted.
    pub fn rank1_preimages(&self, y: &Point) -> Result<Preimages> {
        self.check_input(y)?;
        let mut out = Preimages::default();
        for (i, r) in self.regions.iter().enumerate() {
            match r.piece.matrix.inverse() {
                None => out.singular_pieces.push(i),
                Some(inv) => {
                    let x = inv.apply(&(*y - r.piece.offset));
                    if x.is_finite() && self.locate(&x) == i {
                        out.points.push((x, i));
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for PwlMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id)?;
        let params: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if !params.is_empty() {
            write!(f, "({})", params.join(", "))?;
        }
        Ok(())
    }
}

/// Result of [`PwlMap::rank1_preimages`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Preimages {
    pub points: Vec<(Point, usize)>,
    /// Regions whose matrix is singular and were skipped.
    pub singular_pieces: Vec<usize>,
}

impl Preimages {
    pub fn count(&self) -> usize {
        self.points.len()
    }
}
