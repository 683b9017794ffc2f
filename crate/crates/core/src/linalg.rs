//! Small fixed-capacity vectors and matrices for maps of dimension 1 to 3.
//!
//! Orbits are iterated millions of times per scan cell, so points and
//! matrices live on the stack with a runtime dimension tag instead of going
//! through a general dense-matrix crate.

use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use num_complex::Complex64;

/// Largest supported phase-space dimension.
pub const MAX_DIM: usize = 3;

/// A point (or tangent vector) in R^n, n in 1..=3.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Point {
    c: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    /// Builds a point from its coordinates. Panics unless `1 <= coords.len() <= 3`.
    pub fn new(coords: &[f64]) -> Self {
        assert!(
            (1..=MAX_DIM).contains(&coords.len()),
            "point dimension must be 1, 2 or 3"
        );
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point {
            c,
            dim: coords.len(),
        }
    }

    pub fn x1(x: f64) -> Self {
        Point::new(&[x])
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(&[x, y])
    }

    pub fn xyz(x: f64, y: f64, z: f64) -> Self {
        Point::new(&[x, y, z])
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim));
        Point {
            c: [0.0; MAX_DIM],
            dim,
        }
    }

    /// Unit vector along the first axis.
    pub fn unit_first(dim: usize) -> Self {
        let mut p = Point::zeros(dim);
        p.c[0] = 1.0;
        p
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    /// Coordinates padded with zeros to three components.
    #[inline]
    pub fn padded(&self) -> [f64; MAX_DIM] {
        self.c
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.c[1]
    }

    #[inline]
    pub fn z(&self) -> f64 {
        self.c[2]
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.c[i] * other.c[i];
        }
        s
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|v| v.is_finite())
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut p = *self;
        for i in 0..self.dim {
            p.c[i] *= s;
        }
        p
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// Distance of `self` from the line through the origin spanned by `dir`.
    pub fn distance_to_line(&self, dir: &Point) -> f64 {
        let d2 = dir.norm_sq();
        if d2 == 0.0 {
            return self.norm();
        }
        let t = self.dot(dir) / d2;
        (*self - dir.scale(t)).norm()
    }

    /// z-component of the planar cross product (first two coordinates).
    #[inline]
    pub fn cross2(&self, other: &Point) -> f64 {
        self.c[0] * other.c[1] - self.c[1] * other.c[0]
    }

    /// Linear interpolation `self + t (other - self)`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        *self + (*other - *self).scale(t)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.c[i] += rhs.c[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.c[i] -= rhs.c[i];
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self.scale(-1.0)
    }
}

/// A square real matrix of dimension 1 to 3.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    a: [[f64; MAX_DIM]; MAX_DIM],
    dim: usize,
}

impl Matrix {
    pub fn identity(dim: usize) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "matrix dimension must be 1, 2 or 3");
        Matrix {
            a: [[0.0; MAX_DIM]; MAX_DIM],
            dim,
        }
    }

    /// Builds a matrix from row slices. Panics on ragged or oversized input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.a[i][..n].copy_from_slice(row);
        }
        m
    }

    pub fn scalar(s: f64) -> Self {
        Matrix::from_rows(&[&[s]])
    }

    pub fn new2(a: f64, b: f64, c: f64, d: f64) -> Self {
        Matrix::from_rows(&[&[a, b], &[c, d]])
    }

    /// The companion-like form `[[tau, 1], [-delta, 0]]` used by most catalog maps.
    pub fn companion2(tau: f64, delta: f64) -> Self {
        Matrix::new2(tau, 1.0, -delta, 0.0)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.dim && j < self.dim);
        self.a[i][j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.a[i][..self.dim].to_vec()).collect()
    }

    #[inline]
    pub fn apply(&self, p: &Point) -> Point {
        debug_assert_eq!(self.dim, p.dim());
        let mut out = Point::zeros(self.dim);
        let pc = p.padded();
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.a[i][j] * pc[j];
            }
            out.c[i] = s;
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t.a[j][i] = self.a[i][j];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.a[i][i]).sum()
    }

    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.dim {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            _ => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        }
    }

    /// Inverse by the adjugate formula; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Matrix> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let a = &self.a;
        let mut inv = Matrix::zeros(self.dim);
        match self.dim {
            1 => inv.a[0][0] = 1.0 / d,
            2 => {
                inv.a[0][0] = a[1][1] / d;
                inv.a[0][1] = -a[0][1] / d;
                inv.a[1][0] = -a[1][0] / d;
                inv.a[1][1] = a[0][0] / d;
            }
            _ => {
                for i in 0..3 {
                    for j in 0..3 {
                        let (r0, r1) = match j {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        let (c0, c1) = match i {
                            0 => (1, 2),
                            1 => (0, 2),
                            _ => (0, 1),
                        };
                        let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
                        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                        inv.a[i][j] = sign * minor / d;
                    }
                }
            }
        }
        Some(inv)
    }

    /// Determinant of `I - A`, the characteristic polynomial evaluated at 1.
    pub fn char_poly_at_one(&self) -> f64 {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.a[i][j] = if i == j { 1.0 } else { 0.0 } - self.a[i][j];
            }
        }
        m.det()
    }

    /// All eigenvalues (with multiplicity), computed in closed form.
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self.dim {
            1 => vec![Complex64::new(self.a[0][0], 0.0)],
            2 => {
                let (l1, l2) = quadratic_roots(self.trace(), self.det());
                vec![l1, l2]
            }
            _ => {
                let a = &self.a;
                let c2 = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2]
                    - a[0][2] * a[2][0]
                    + a[1][1] * a[2][2]
                    - a[1][2] * a[2][1];
                cubic_roots(self.trace(), c2, self.det()).to_vec()
            }
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry, used to scale tolerances.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| self.a[i][j].is_finite()))
    }

    pub fn pow(&self, k: u32) -> Matrix {
        let mut out = Matrix::identity(self.dim);
        for _ in 0..k {
            out = *self * out;
        }
        out
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.a[i][j] -= rhs.a[i][j];
            }
        }
        out
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.a[i][k] * rhs.a[k][j];
                }
                out.a[i][j] = s;
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Roots of `l^2 - tr l + det`, larger real root first. Uses the
/// cancellation-free form for real roots.
pub fn quadratic_roots(tr: f64, det: f64) -> (Complex64, Complex64) {
    let half = 0.5 * tr;
    let disc = half * half - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let im = (-disc).sqrt();
        (Complex64::new(half, im), Complex64::new(half, -im))
    }
}

/// Roots of `l^3 - c1 l^2 + c2 l - c3`.
pub fn cubic_roots(c1: f64, c2: f64, c3: f64) -> [Complex64; 3] {
    // l = t + c1/3 gives t^3 + p t + q = 0
    let shift = c1 / 3.0;
    let p = c2 - c1 * c1 / 3.0;
    let q = -2.0 * c1 * c1 * c1 / 27.0 + c1 * c2 / 3.0 - c3;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        let real = u + v + shift;
        // deflate: remaining quadratic l^2 - (c1 - real) l + c3 / real
        let tr = c1 - real;
        let det = if real != 0.0 { c3 / real } else { c2 - real * tr };
        let (a, b) = quadratic_roots(tr, det);
        [Complex64::new(real, 0.0), a, b]
    } else if p == 0.0 {
        let t = (-q).cbrt();
        let l = Complex64::new(t + shift, 0.0);
        [l, l, l]
    } else {
        let r = (-p / 3.0).sqrt();
        let cos_arg = (-q / 2.0 / (r * r * r)).clamp(-1.0, 1.0);
        let phi = cos_arg.acos();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = Complex64::new(
                2.0 * r * ((phi + two_pi * k as f64) / 3.0).cos() + shift,
                0.0,
            );
        }
        out
    }
}
