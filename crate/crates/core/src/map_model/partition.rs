//! Partition predicates and their boundary geometry.

use crate::linalg::{Point, MAX_DIM};

/// An open region of phase space. Every predicate is strict, so points on a
/// boundary satisfy none of the two adjacent predicates; [`super::PwlMap`]
/// resolves them by region order.
#[derive(Clone, Debug, PartialEq)]
pub enum Predicate {
    /// `normal . X < bound`
    HalfSpace { normal: [f64; MAX_DIM], bound: f64 },
    /// `|X| < radius`
    Ball { radius: f64 },
    /// `|X| > radius`
    OutsideBall { radius: f64 },
    /// `|y - x| < h`
    Strip { h: f64 },
    /// `|y - x| > h`
    OutsideStrip { h: f64 },
    /// `x_axis < 0` when `negative`, else `x_axis > 0`
    Sign { axis: usize, negative: bool },
    All(Vec<Predicate>),
    Everywhere,
}

impl Predicate {
    /// `x < h`
    pub fn x_below(h: f64) -> Self {
        Predicate::HalfSpace {
            normal: [1.0, 0.0, 0.0],
            bound: h,
        }
    }

    /// `x > h`
    pub fn x_above(h: f64) -> Self {
        Predicate::HalfSpace {
            normal: [-1.0, 0.0, 0.0],
            bound: -h,
        }
    }

    /// `y > x + h`
    pub fn above_diagonal(h: f64) -> Self {
        Predicate::HalfSpace {
            normal: [1.0, -1.0, 0.0],
            bound: -h,
        }
    }

    /// `y < x + h`
    pub fn below_diagonal(h: f64) -> Self {
        Predicate::HalfSpace {
            normal: [-1.0, 1.0, 0.0],
            bound: h,
        }
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        let c = p.padded();
        match self {
            Predicate::HalfSpace { normal, bound } => {
                normal[0] * c[0] + normal[1] * c[1] + normal[2] * c[2] < *bound
            }
            Predicate::Ball { radius } => p.norm_sq() < radius * radius,
            Predicate::OutsideBall { radius } => p.norm_sq() > radius * radius,
            Predicate::Strip { h } => (c[1] - c[0]).abs() < *h,
            Predicate::OutsideStrip { h } => (c[1] - c[0]).abs() > *h,
            Predicate::Sign { axis, negative } => {
                if *negative {
                    c[*axis] < 0.0
                } else {
                    c[*axis] > 0.0
                }
            }
            Predicate::All(parts) => parts.iter().all(|q| q.contains(p)),
            Predicate::Everywhere => true,
        }
    }

    /// Parameters `t` in the open interval (0, 1) at which the segment
    /// `a + t (b - a)` meets the boundary of this predicate.
    pub fn boundary_crossings(&self, a: &Point, b: &Point, out: &mut Vec<f64>) {
        let ac = a.padded();
        let bc = b.padded();
        let d = [bc[0] - ac[0], bc[1] - ac[1], bc[2] - ac[2]];
        let mut push = |t: f64| {
            if t > 0.0 && t < 1.0 && t.is_finite() {
                out.push(t);
            }
        };
        let linear = |n: [f64; 3], bound: f64| -> Option<f64> {
            let nd = n[0] * d[0] + n[1] * d[1] + n[2] * d[2];
            if nd == 0.0 {
                return None;
            }
            let na = n[0] * ac[0] + n[1] * ac[1] + n[2] * ac[2];
            Some((bound - na) / nd)
        };
        match self {
            Predicate::HalfSpace { normal, bound } => {
                if let Some(t) = linear(*normal, *bound) {
                    push(t);
                }
            }
            Predicate::Ball { radius } | Predicate::OutsideBall { radius } => {
                // |a + t d|^2 = r^2
                let qa = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let qb = 2.0 * (ac[0] * d[0] + ac[1] * d[1] + ac[2] * d[2]);
                let qc = a.norm_sq() - radius * radius;
                if qa > 0.0 {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc > 0.0 {
                        let s = disc.sqrt();
                        push((-qb - s) / (2.0 * qa));
                        push((-qb + s) / (2.0 * qa));
                    }
                }
            }
            Predicate::Strip { h } | Predicate::OutsideStrip { h } => {
                for bound in [*h, -*h] {
                    if let Some(t) = linear([-1.0, 1.0, 0.0], bound) {
                        push(t);
                    }
                }
            }
            Predicate::Sign { axis, .. } => {
                let mut n = [0.0; 3];
                n[*axis] = 1.0;
                if let Some(t) = linear(n, 0.0) {
                    push(t);
                }
            }
            Predicate::All(parts) => {
                for q in parts {
                    q.boundary_crossings(a, b, out);
                }
            }
            Predicate::Everywhere => {}
        }
    }

    /// Short human-readable form, e.g. `x < -1`.
    pub fn describe(&self) -> String {
        match self {
            Predicate::HalfSpace { normal, bound } => {
                let names = ["x", "y", "z"];
                let mut terms = Vec::new();
                for (n, name) in normal.iter().zip(names) {
                    if *n == 1.0 {
                        terms.push(name.to_string());
                    } else if *n == -1.0 {
                        terms.push(format!("-{name}"));
                    } else if *n != 0.0 {
                        terms.push(format!("{n}{name}"));
                    }
                }
                format!("{} < {}", terms.join(" + "), bound)
            }
            Predicate::Ball { radius } => format!("|X| < {radius}"),
            Predicate::OutsideBall { radius } => format!("|X| > {radius}"),
            Predicate::Strip { h } => format!("|y - x| < {h}"),
            Predicate::OutsideStrip { h } => format!("|y - x| > {h}"),
            Predicate::Sign { axis, negative } => {
                let name = ["x", "y", "z"][*axis];
                format!("{name} {} 0", if *negative { "<" } else { ">" })
            }
            Predicate::All(parts) => parts
                .iter()
                .map(Predicate::describe)
                .collect::<Vec<_>>()
                .join(" and "),
            Predicate::Everywhere => "everywhere else".to_string(),
        }
    }
}
