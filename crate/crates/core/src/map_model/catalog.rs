//! The catalog of example maps, keyed by their customary names.

use std::fmt;
use std::str::FromStr;

use super::partition::Predicate;
use super::{LinearPiece, Params, PwlMap, Region};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Point};

/// Shape of the discontinuity bounding the `L` partition of `T9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum T9Border {
    /// `D_L = {x < -1}`
    Line,
    /// `D_L = {y > x + 1}`
    Diagonal,
    /// `D_L = {x^2 + y^2 > 1}`
    Circle,
}

impl FromStr for T9Border {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "line" => Ok(T9Border::Line),
            "diagonal" => Ok(T9Border::Diagonal),
            "circle" => Ok(T9Border::Circle),
            other => Err(Error::InvalidParameter {
                param: "border".into(),
                reason: format!("expected line, diagonal or circle, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for T9Border {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            T9Border::Line => "line",
            T9Border::Diagonal => "diagonal",
            T9Border::Circle => "circle",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CatalogId {
    F,
    T1,
    T1a,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9(T9Border),
    T3D,
    /// Hand-built maps outside the catalog.
    Custom(String),
}

impl CatalogId {
    pub fn all() -> Vec<CatalogId> {
        vec![
            CatalogId::F,
            CatalogId::T1,
            CatalogId::T1a,
            CatalogId::T2,
            CatalogId::T3,
            CatalogId::T4,
            CatalogId::T5,
            CatalogId::T6,
            CatalogId::T7,
            CatalogId::T8,
            CatalogId::T9(T9Border::Line),
            CatalogId::T9(T9Border::Diagonal),
            CatalogId::T9(T9Border::Circle),
            CatalogId::T3D,
        ]
    }

    /// Parameter names with their defaults (`None` = required).
    pub fn parameters(&self) -> &'static [(&'static str, Option<f64>)] {
        const COMPANION_H_LEFT: &[(&str, Option<f64>)] = &[
            ("tauL", None),
            ("deltaL", None),
            ("tauR", None),
            ("deltaR", None),
            ("h", Some(-1.0)),
        ];
        const COMPANION_H_DIAG: &[(&str, Option<f64>)] = &[
            ("tauL", None),
            ("deltaL", None),
            ("tauR", None),
            ("deltaR", None),
            ("h", Some(1.0)),
        ];
        match self {
            CatalogId::F => &[("sL", None), ("sR", None), ("h", None)],
            CatalogId::T1 => COMPANION_H_LEFT,
            CatalogId::T1a => &[
                ("tauL", None),
                ("deltaL", None),
                ("tauR", None),
                ("deltaR", None),
                ("muL", None),
                ("h", Some(-1.0)),
            ],
            CatalogId::T2 => &[
                ("al", None),
                ("bl", None),
                ("dl", None),
                ("ar", None),
                ("br", None),
                ("dr", None),
                ("h", Some(-1.0)),
            ],
            CatalogId::T3 => &[
                ("a1", None),
                ("b1", None),
                ("c1", None),
                ("a2", None),
                ("b2", None),
                ("c2", None),
                ("h", Some(-1.0)),
            ],
            CatalogId::T4 => &[
                ("alpha", None),
                ("tauR", None),
                ("deltaR", None),
                ("h", Some(-1.0)),
            ],
            CatalogId::T5 | CatalogId::T6 => COMPANION_H_DIAG,
            CatalogId::T7 => &[
                ("tauL", None),
                ("deltaL", None),
                ("tauR", None),
                ("deltaR", None),
            ],
            CatalogId::T8 => &[("alpha", None), ("tauR", None), ("deltaR", None)],
            CatalogId::T9(_) => &[
                ("tauL", None),
                ("deltaL", None),
                ("tauR1", None),
                ("deltaR1", None),
                ("tauR2", None),
                ("deltaR2", None),
            ],
            CatalogId::T3D => &[
                ("tauL", None),
                ("sigmaL", None),
                ("deltaL", None),
                ("tauR", None),
                ("sigmaR", None),
                ("deltaR", None),
                ("h", Some(-1.0)),
            ],
            CatalogId::Custom(_) => &[],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            CatalogId::F => 1,
            CatalogId::T3D => 3,
            _ => 2,
        }
    }
}

impl FromStr for CatalogId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "F" => CatalogId::F,
            "T1" => CatalogId::T1,
            "T1a" => CatalogId::T1a,
            "T2" => CatalogId::T2,
            "T3" => CatalogId::T3,
            "T4" => CatalogId::T4,
            "T5" => CatalogId::T5,
            "T6" => CatalogId::T6,
            "T7" => CatalogId::T7,
            "T8" => CatalogId::T8,
            "T9" => CatalogId::T9(T9Border::Circle),
            "T3D" => CatalogId::T3D,
            other => return Err(Error::UnknownMap(other.to_string())),
        })
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogId::F => f.write_str("F"),
            CatalogId::T1 => f.write_str("T1"),
            CatalogId::T1a => f.write_str("T1a"),
            CatalogId::T2 => f.write_str("T2"),
            CatalogId::T3 => f.write_str("T3"),
            CatalogId::T4 => f.write_str("T4"),
            CatalogId::T5 => f.write_str("T5"),
            CatalogId::T6 => f.write_str("T6"),
            CatalogId::T7 => f.write_str("T7"),
            CatalogId::T8 => f.write_str("T8"),
            CatalogId::T9(_) => f.write_str("T9"),
            CatalogId::T3D => f.write_str("T3D"),
            CatalogId::Custom(name) => f.write_str(name),
        }
    }
}

/// Resolved parameter values with defaults applied.
struct Resolved<'a> {
    id: &'a CatalogId,
    params: Params,
}

impl Resolved<'_> {
    fn get(&self, name: &str) -> f64 {
        self.params
            .get(name)
            .unwrap_or_else(|| panic!("{name} validated for {}", self.id))
    }
}

fn resolve<'a>(id: &'a CatalogId, given: &Params) -> Result<Resolved<'a>> {
    let known = id.parameters();
    for name in given.names() {
        if !known.iter().any(|(n, _)| *n == name) {
            return Err(Error::UnknownParameter {
                map: id.to_string(),
                param: name.to_string(),
            });
        }
    }
    let mut params = Params::new();
    for (name, default) in known {
        let value = match (given.get(name), default) {
            (Some(v), _) => v,
            (None, Some(d)) => *d,
            (None, None) => {
                return Err(Error::MissingParameter {
                    map: id.to_string(),
                    param: name.to_string(),
                })
            }
        };
        if !value.is_finite() {
            return Err(Error::InvalidParameter {
                param: name.to_string(),
                reason: "must be finite".into(),
            });
        }
        if *name == "h" && value == 0.0 {
            return Err(Error::InvalidParameter {
                param: "h".into(),
                reason: "the discontinuity must not pass through the fixed point (h != 0)".into(),
            });
        }
        params.set(name, value);
    }
    Ok(Resolved { id, params })
}

fn region(label: &str, predicate: Predicate, matrix: Matrix) -> Region {
    Region {
        label: label.into(),
        predicate,
        piece: LinearPiece::homogeneous(matrix),
    }
}

/// Builds a catalog map. Pieces are listed in the printed order
/// (`L` first), which fixes the boundary convention: a point on a
/// discontinuity belongs to the later region.
pub fn make_catalog_map(id: &CatalogId, params: &Params) -> Result<PwlMap> {
    if let CatalogId::Custom(name) = id {
        return Err(Error::UnknownMap(name.clone()));
    }
    let p = resolve(id, params)?;
    let g = |n: &str| p.get(n);
    let companion = |t: &str, d: &str| Matrix::companion2(g(t), g(d));
    let regions = match id {
        CatalogId::F => {
            let h = g("h");
            vec![
                region("L", Predicate::x_below(h), Matrix::scalar(g("sL"))),
                region("R", Predicate::x_above(h), Matrix::scalar(g("sR"))),
            ]
        }
        CatalogId::T1 => {
            let h = g("h");
            vec![
                region("L", Predicate::x_below(h), companion("tauL", "deltaL")),
                region("R", Predicate::x_above(h), companion("tauR", "deltaR")),
            ]
        }
        CatalogId::T1a => {
            let h = g("h");
            vec![
                Region {
                    label: "L".into(),
                    predicate: Predicate::x_below(h),
                    piece: LinearPiece::affine(companion("tauL", "deltaL"), Point::xy(g("muL"), 0.0)),
                },
                region("R", Predicate::x_above(h), companion("tauR", "deltaR")),
            ]
        }
        CatalogId::T2 => {
            let h = g("h");
            vec![
                region("L", Predicate::x_below(h), Matrix::new2(g("al"), g("bl"), 0.0, g("dl"))),
                region("R", Predicate::x_above(h), Matrix::new2(g("ar"), g("br"), 0.0, g("dr"))),
            ]
        }
        CatalogId::T3 => {
            let h = g("h");
            vec![
                region("L", Predicate::x_below(h), Matrix::new2(g("a1"), g("b1"), 0.0, g("c1"))),
                region("R", Predicate::x_above(h), Matrix::new2(g("a2"), 0.0, g("b2"), g("c2"))),
            ]
        }
        CatalogId::T4 | CatalogId::T8 => {
            let (alpha, tau, delta) = (g("alpha"), g("tauR"), g("deltaR"));
            let left = Matrix::companion2(alpha * tau, alpha * alpha * delta);
            let right = Matrix::companion2(tau, delta);
            if *id == CatalogId::T4 {
                let h = g("h");
                vec![
                    region("L", Predicate::x_below(h), left),
                    region("R", Predicate::x_above(h), right),
                ]
            } else {
                vec![
                    region("L", Predicate::OutsideBall { radius: 1.0 }, left),
                    region("R", Predicate::Ball { radius: 1.0 }, right),
                ]
            }
        }
        CatalogId::T5 => {
            let h = g("h");
            vec![
                region("L", Predicate::above_diagonal(h), companion("tauL", "deltaL")),
                region("R", Predicate::below_diagonal(h), companion("tauR", "deltaR")),
            ]
        }
        CatalogId::T6 => {
            let h = g("h");
            if h < 0.0 {
                return Err(Error::InvalidParameter {
                    param: "h".into(),
                    reason: "strip half-width must be positive".into(),
                });
            }
            vec![
                region("L", Predicate::OutsideStrip { h }, companion("tauL", "deltaL")),
                region("R", Predicate::Strip { h }, companion("tauR", "deltaR")),
            ]
        }
        CatalogId::T7 => vec![
            region("L", Predicate::OutsideBall { radius: 1.0 }, companion("tauL", "deltaL")),
            region("R", Predicate::Ball { radius: 1.0 }, companion("tauR", "deltaR")),
        ],
        CatalogId::T9(border) => {
            let outer = match border {
                T9Border::Line => Predicate::x_below(-1.0),
                T9Border::Diagonal => Predicate::above_diagonal(1.0),
                T9Border::Circle => Predicate::OutsideBall { radius: 1.0 },
            };
            vec![
                region("L", outer, companion("tauL", "deltaL")),
                region(
                    "R2",
                    Predicate::Sign {
                        axis: 0,
                        negative: true,
                    },
                    companion("tauR2", "deltaR2"),
                ),
                region(
                    "R1",
                    Predicate::Sign {
                        axis: 0,
                        negative: false,
                    },
                    companion("tauR1", "deltaR1"),
                ),
            ]
        }
        CatalogId::T3D => {
            let h = g("h");
            let m = |t: f64, s: f64, d: f64| {
                Matrix::from_rows(&[&[t, 1.0, 0.0], &[-s, 0.0, 1.0], &[d, 0.0, 0.0]])
            };
            vec![
                region("L", Predicate::x_below(h), m(g("tauL"), g("sigmaL"), g("deltaL"))),
                region("R", Predicate::x_above(h), m(g("tauR"), g("sigmaR"), g("deltaR"))),
            ]
        }
        CatalogId::Custom(_) => unreachable!(),
    };
    PwlMap::new(id.clone(), p.params, regions)
}

/// Parameters of the affine two-piece map whose pieces share the fixed
/// point `(-xi, -eta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineParams {
    pub xi: f64,
    pub eta: f64,
    pub tau_l: f64,
    pub delta_l: f64,
    pub tau_r: f64,
    pub delta_r: f64,
    pub h: f64,
}

/// The affine form itself, split at `x = h - xi`.
pub fn affine_normal_form(a: &AffineParams) -> Result<PwlMap> {
    if a.h == 0.0 {
        return Err(Error::InvalidParameter {
            param: "h".into(),
            reason: "h must be nonzero".into(),
        });
    }
    let piece = |tau: f64, delta: f64| {
        LinearPiece::affine(
            Matrix::companion2(tau, delta),
            Point::xy(tau * a.xi + a.eta - a.xi, -(delta * a.xi + a.eta)),
        )
    };
    let split = a.h - a.xi;
    let params = Params::new()
        .with("xi", a.xi)
        .with("eta", a.eta)
        .with("tauL", a.tau_l)
        .with("deltaL", a.delta_l)
        .with("tauR", a.tau_r)
        .with("deltaR", a.delta_r)
        .with("h", a.h);
    PwlMap::new(
        CatalogId::Custom("M".into()),
        params,
        vec![
            Region {
                label: "L".into(),
                predicate: Predicate::x_below(split),
                piece: piece(a.tau_l, a.delta_l),
            },
            Region {
                label: "R".into(),
                predicate: Predicate::x_above(split),
                piece: piece(a.tau_r, a.delta_r),
            },
        ],
    )
}

/// The homogeneous `T1` obtained by moving the shared fixed point to the
/// origin (`u = x + xi`, `v = y + eta`).
pub fn conjugate_affine_to_homogeneous(a: &AffineParams) -> Result<PwlMap> {
    make_catalog_map(
        &CatalogId::T1,
        &Params::new()
            .with("tauL", a.tau_l)
            .with("deltaL", a.delta_l)
            .with("tauR", a.tau_r)
            .with("deltaR", a.delta_r)
            .with("h", a.h),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t1_pieces() {
        let m = make_catalog_map(
            &CatalogId::T1,
            &Params::new()
                .with("tauL", -2.0)
                .with("deltaL", 0.9)
                .with("tauR", -1.449)
                .with("deltaR", 1.11)
                .with("h", -1.0),
        )
        .unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.regions().len(), 2);
        assert_eq!(*m.jacobian(0), Matrix::companion2(-2.0, 0.9));
        assert_eq!(*m.jacobian(1), Matrix::companion2(-1.449, 1.11));
        assert!(m.is_homogeneous());
    }

    #[test]
    fn map_f_is_one_dimensional() {
        let f = make_catalog_map(
            &CatalogId::F,
            &Params::new().with("sL", 2.0).with("sR", 0.5).with("h", 1.0),
        )
        .unwrap();
        assert_eq!(f.dim(), 1);
        assert_eq!(f.evaluate(&Point::x1(0.5)).unwrap().0, Point::x1(1.0));
        assert_eq!(f.evaluate(&Point::x1(1.5)).unwrap().0, Point::x1(0.75));
    }

    #[test]
    fn t7_interior_is_r() {
        let m = make_catalog_map(
            &CatalogId::T7,
            &Params::new()
                .with("deltaR", 1.4)
                .with("tauR", 0.8)
                .with("deltaL", 0.6)
                .with("tauL", 0.9),
        )
        .unwrap();
        assert_eq!(m.region_label(m.region_of(&Point::xy(0.0, 0.5)).unwrap()), "R");
        // the circle itself is assigned to R, listed second
        assert_eq!(m.region_label(m.region_of(&Point::xy(0.0, 1.0)).unwrap()), "R");
    }

    #[test]
    fn proportional_left_piece() {
        let m = make_catalog_map(
            &CatalogId::T4,
            &Params::new().with("alpha", 0.5).with("tauR", -0.5).with("deltaR", 1.2),
        )
        .unwrap();
        assert_eq!(*m.jacobian(0), Matrix::new2(-0.25, 1.0, -0.3, 0.0));
    }

    #[test]
    fn t9_three_regions() {
        let m = make_catalog_map(
            &CatalogId::T9(T9Border::Line),
            &Params::new()
                .with("tauR1", 0.8)
                .with("deltaR1", 1.4)
                .with("tauR2", 0.4)
                .with("deltaR2", 1.01)
                .with("tauL", 0.9)
                .with("deltaL", 0.6),
        )
        .unwrap();
        let label = |x, y| m.region_label(m.region_of(&Point::xy(x, y)).unwrap()).to_string();
        assert_eq!(label(-2.0, 0.0), "L");
        assert_eq!(label(-0.5, 0.0), "R2");
        assert_eq!(label(0.5, 0.0), "R1");
        assert_eq!(label(0.0, 3.0), "R1");
    }

    #[test]
    fn errors() {
        assert!(matches!("T42".parse::<CatalogId>(), Err(Error::UnknownMap(_))));
        let missing = make_catalog_map(&CatalogId::T1, &Params::new().with("tauL", 1.0));
        assert!(matches!(missing, Err(Error::MissingParameter { .. })));
        let zero_h = make_catalog_map(
            &CatalogId::F,
            &Params::new().with("sL", 2.0).with("sR", 0.5).with("h", 0.0),
        );
        assert!(matches!(zero_h, Err(Error::InvalidParameter { .. })));
        let unknown = make_catalog_map(
            &CatalogId::F,
            &Params::new()
                .with("sL", 2.0)
                .with("sR", 0.5)
                .with("h", 1.0)
                .with("tauL", 1.0),
        );
        assert!(matches!(unknown, Err(Error::UnknownParameter { .. })));
    }

    #[test]
    fn conjugacy_maps_fixed_point_to_origin() {
        let a = AffineParams {
            xi: 0.7,
            eta: -0.3,
            tau_l: -2.0,
            delta_l: 0.9,
            tau_r: -1.449,
            delta_r: 1.11,
            h: -1.0,
        };
        let m = affine_normal_form(&a).unwrap();
        let fp = Point::xy(-a.xi, -a.eta);
        let (img, _) = m.evaluate(&fp).unwrap();
        assert!(img.distance(&fp) < 1e-15);

        let t1 = conjugate_affine_to_homogeneous(&a).unwrap();
        assert_eq!(t1.params().get("h"), Some(-1.0));
        assert_eq!(*t1.jacobian(0), Matrix::companion2(-2.0, 0.9));

        let ident = conjugate_affine_to_homogeneous(&AffineParams { xi: 0.0, eta: 0.0, ..a }).unwrap();
        assert_eq!(ident, t1);

        // orbit of the affine form equals the translated orbit of T1
        let mut x = Point::xy(0.1, 0.2);
        let mut u = Point::xy(0.1 + a.xi, 0.2 + a.eta);
        for _ in 0..100 {
            x = m.evaluate(&x).unwrap().0;
            u = t1.evaluate(&u).unwrap().0;
            let back = Point::xy(u.x() - a.xi, u.y() - a.eta);
            assert!(back.distance(&x) <= 1e-12 * x.norm().max(1.0));
        }
    }
}
