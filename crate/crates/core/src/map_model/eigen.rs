use crate::linalg::{quadratic_roots, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eigenvalue {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Eigenvalue {
    pub fn modulus(&self) -> f64 {
        match *self {
            Eigenvalue::Real(v) => v.abs(),
            Eigenvalue::Complex { re, im } => re.hypot(im),
        }
    }

    pub fn argument(&self) -> f64 {
        match *self {
            Eigenvalue::Real(v) => {
                if v < 0.0 {
                    std::f64::consts::PI
                } else {
                    0.0
                }
            }
            Eigenvalue::Complex { re, im } => im.atan2(re),
        }
    }

    pub fn real(&self) -> Option<f64> {
        match *self {
            Eigenvalue::Real(v) => Some(v),
            Eigenvalue::Complex { .. } => None,
        }
    }
}

/// An eigenvalue of a 2x2 matrix with, for real eigenvalues, the slope
/// `m` of its eigenvector `(1, m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair {
    pub value: Eigenvalue,
    /// `None` for complex eigenvalues and for vertical eigenvectors.
    pub slope: Option<f64>,
    /// Unit eigenvector for real eigenvalues (covers the vertical case).
    pub direction: Option<[f64; 2]>,
    pub multiplicity: u8,
}

/// Eigenpairs of a 2x2 matrix from `l^2 - tr l + det = 0`.
///
/// A repeated real root is returned once with multiplicity 2.
pub fn eigen_2x2(m: &Matrix) -> Vec<EigenPair> {
    assert_eq!(m.dim(), 2, "eigen_2x2 expects a 2x2 matrix");
    let (l1, l2) = quadratic_roots(m.trace(), m.det());
    if l1.im != 0.0 {
        return [l1, l2]
            .iter()
            .map(|l| EigenPair {
                value: Eigenvalue::Complex { re: l.re, im: l.im },
                slope: None,
                direction: None,
                multiplicity: 1,
            })
            .collect();
    }
    let (a, b) = (l1.re, l2.re);
    let scale = m.max_abs().max(1.0);
    if (a - b).abs() <= 1e-14 * scale {
        let lam = 0.5 * (a + b);
        let direction = eigenvector(m, lam);
        return vec![EigenPair {
            value: Eigenvalue::Real(lam),
            slope: slope_of(direction),
            direction: Some(direction),
            multiplicity: 2,
        }];
    }
    [a, b]
        .iter()
        .map(|&lam| {
            let direction = eigenvector(m, lam);
            EigenPair {
                value: Eigenvalue::Real(lam),
                slope: slope_of(direction),
                direction: Some(direction),
                multiplicity: 1,
            }
        })
        .collect()
}

fn slope_of(d: [f64; 2]) -> Option<f64> {
    if d[0] == 0.0 {
        None
    } else {
        Some(d[1] / d[0])
    }
}

/// Unit null vector of `m - lam I`, picking the better-conditioned row.
fn eigenvector(m: &Matrix, lam: f64) -> [f64; 2] {
    let (a, b, c, d) = (m.get(0, 0) - lam, m.get(0, 1), m.get(1, 0), m.get(1, 1) - lam);
    // row 1: a v1 + b v2 = 0 -> (b, -a); row 2: c v1 + d v2 = 0 -> (d, -c)
    let r1 = a.hypot(b);
    let r2 = c.hypot(d);
    let v = if r1 == 0.0 && r2 == 0.0 {
        // scalar matrix: every direction is an eigenvector
        [1.0, 0.0]
    } else if r1 >= r2 {
        [b, -a]
    } else {
        [d, -c]
    };
    let n = v[0].hypot(v[1]);
    let sign = if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        -1.0
    } else {
        1.0
    };
    [sign * v[0] / n, sign * v[1] / n]
}

/// `det(I - A)`, the characteristic polynomial at 1.
pub fn char_poly_at_one(m: &Matrix) -> f64 {
    m.char_poly_at_one()
}
