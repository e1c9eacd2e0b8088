//! Grids, discrete differential operators, cumulative quadrature and
//! 3-vector algebra shared by every solver in the crate.
//!
//! All operators are second order. On a periodic grid the stencils wrap
//! around; on a line grid the endpoints use one-sided second-order stencils.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Smallest admissible node count.
pub const MIN_NODES: usize = 4;

/// Spatial domain of a [`Grid1D`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Circle of the given circumference, nodes at `x_j = j h`.
    Periodic { circumference: f64 },
    /// Closed interval, both endpoints are nodes.
    Line { x_min: f64, x_max: f64 },
}

/// Uniform 1D mesh with a basepoint `a` used as the lower limit of every
/// cumulative integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    domain: Domain,
    n: usize,
    h: f64,
    basepoint: usize,
}

impl Grid1D {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let h = match domain {
            Domain::Periodic { circumference } => {
                if !(circumference.is_finite() && circumference > 0.0) {
                    return Err(Error::Config(format!(
                        "circumference must be positive, got {circumference}"
                    )));
                }
                circumference / n as f64
            }
            Domain::Line { x_min, x_max } => {
                if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
                    return Err(Error::Config(format!(
                        "line extent [{x_min}, {x_max}] is degenerate"
                    )));
                }
                (x_max - x_min) / (n - 1) as f64
            }
        };
        Ok(Self {
            domain,
            n,
            h,
            basepoint: 0,
        })
    }

    pub fn periodic(circumference: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Periodic { circumference }, n)
    }

    pub fn line(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        Self::new(Domain::Line { x_min, x_max }, n)
    }

    pub fn with_basepoint(mut self, index: usize) -> Result<Self> {
        if index >= self.n {
            return Err(Error::Config(format!(
                "basepoint index {index} outside [0, {})",
                self.n
            )));
        }
        self.basepoint = index;
        Ok(self)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.domain, Domain::Periodic { .. })
    }

    /// Circumference for periodic grids, interval length for lines.
    pub fn extent(&self) -> f64 {
        match self.domain {
            Domain::Periodic { circumference } => circumference,
            Domain::Line { x_min, x_max } => x_max - x_min,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        match self.domain {
            Domain::Periodic { .. } => j as f64 * self.h,
            Domain::Line { x_min, .. } => x_min + j as f64 * self.h,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn x_basepoint(&self) -> f64 {
        self.x(self.basepoint)
    }

    /// Quadrature weights: `h` everywhere on the circle, trapezoid on a line.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![self.h; self.n];
        if !self.is_periodic() {
            w[0] *= 0.5;
            w[self.n - 1] *= 0.5;
        }
        w
    }

    /// Same domain, different resolution; the basepoint keeps its coordinate
    /// when it lands on a node, otherwise it falls back to index 0.
    pub fn refined(&self, n: usize) -> Result<Self> {
        let g = Self::new(self.domain, n)?;
        let xa = self.x_basepoint();
        let idx = ((xa - g.x(0)) / g.h).round();
        if idx >= 0.0 && (idx as usize) < n && (g.x(idx as usize) - xa).abs() < 1e-9 * g.h {
            g.with_basepoint(idx as usize)
        } else {
            Ok(g)
        }
    }
}

/// Cartesian 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);
    pub const E1: Vec3 = Vec3([1.0, 0.0, 0.0]);
    pub const E2: Vec3 = Vec3([0.0, 1.0, 0.0]);
    pub const E3: Vec3 = Vec3([0.0, 0.0, 1.0]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    a.cross(b)
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a.dot(b)
}

pub fn norm(a: Vec3) -> f64 {
    a.norm()
}

/// Node values the stencils can act on.
pub trait FieldValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
}

impl FieldValue for f64 {}
impl FieldValue for Complex64 {}
impl FieldValue for Vec3 {}

pub type RealField = Vec<f64>;
pub type ComplexField = Vec<Complex64>;
pub type Vec3Field = Vec<Vec3>;

/// First derivative.
pub fn diff1<T: FieldValue>(f: &[T], g: &Grid1D) -> Result<Vec<T>> {
    check_len(g.n(), f.len())?;
    let n = f.len();
    let s = 0.5 / g.h();
    let mut out = vec![T::default(); n];
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) * s;
    }
    if g.is_periodic() {
        out[0] = (f[1] - f[n - 1]) * s;
        out[n - 1] = (f[0] - f[n - 2]) * s;
    } else {
        // (-3 f0 + 4 f1 - f2) / 2h and its mirror
        out[0] = (f[1] * 4.0 - f[0] * 3.0 - f[2]) * s;
        out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * s;
    }
    Ok(out)
}

/// Second derivative.
pub fn diff2<T: FieldValue>(f: &[T], g: &Grid1D) -> Result<Vec<T>> {
    check_len(g.n(), f.len())?;
    let n = f.len();
    let s = 1.0 / (g.h() * g.h());
    let mut out = vec![T::default(); n];
    for j in 1..n - 1 {
        out[j] = (f[j + 1] + f[j - 1] - f[j] * 2.0) * s;
    }
    if g.is_periodic() {
        out[0] = (f[1] + f[n - 1] - f[0] * 2.0) * s;
        out[n - 1] = (f[0] + f[n - 2] - f[n - 1] * 2.0) * s;
    } else {
        // (2 f0 - 5 f1 + 4 f2 - f3) / h^2 and its mirror
        out[0] = (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) * s;
        out[n - 1] = (f[n - 1] * 2.0 - f[n - 2] * 5.0 + f[n - 3] * 4.0 - f[n - 4]) * s;
    }
    Ok(out)
}

/// Cumulative trapezoid `F(x_j) = ∫_a^{x_j} f`, with `a` the grid basepoint.
///
/// Nodes left of `a` get the (negative-orientation) integral back to `a`.
/// On the circle the integral is single-sheeted: it never wraps past the
/// seam, so the result is generally not periodic.
pub fn cumint<T: FieldValue>(f: &[T], g: &Grid1D) -> Result<Vec<T>> {
    check_len(g.n(), f.len())?;
    let n = f.len();
    let a = g.basepoint();
    let half_h = 0.5 * g.h();
    let mut out = vec![T::default(); n];
    for j in a + 1..n {
        out[j] = out[j - 1] + (f[j - 1] + f[j]) * half_h;
    }
    for j in (0..a).rev() {
        out[j] = out[j + 1] - (f[j] + f[j + 1]) * half_h;
    }
    Ok(out)
}

/// `Σ_j w_j ⟨a_j, b_j⟩` with the grid quadrature weights.
pub fn inner_vec3(a: &[Vec3], b: &[Vec3], g: &Grid1D) -> Result<f64> {
    check_len(g.n(), a.len())?;
    check_len(g.n(), b.len())?;
    Ok(g.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x.dot(*y))
        .sum())
}

pub fn inner_real(a: &[f64], b: &[f64], g: &Grid1D) -> Result<f64> {
    check_len(g.n(), a.len())?;
    check_len(g.n(), b.len())?;
    Ok(g.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

pub fn max_abs_complex(q: &[Complex64]) -> f64 {
    q.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_real(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Tolerance on `| |u_j| - 1 |` for a [`SphereField`].
pub const UNIT_TOL: f64 = 1e-12;

/// Discretized map into the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereField(Vec<Vec3>);

impl SphereField {
    /// Checks that every node is a unit vector.
    pub fn new(values: Vec<Vec3>) -> Result<Self> {
        for (j, v) in values.iter().enumerate() {
            if !v.is_finite() || (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::Precondition(format!(
                    "node {j} has norm {} (not on the unit sphere)",
                    v.norm()
                )));
            }
        }
        Ok(Self(values))
    }

    /// Projects every node onto the sphere.
    pub fn from_normalized(values: Vec<Vec3>) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for (j, v) in values.into_iter().enumerate() {
            let r = v.norm();
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Precondition(format!(
                    "node {j} cannot be normalized (norm {r})"
                )));
            }
            out.push(v * (1.0 / r));
        }
        Ok(Self(out))
    }

    pub fn from_fn(g: &Grid1D, f: impl Fn(f64) -> Vec3) -> Result<Self> {
        Self::from_normalized(g.coords().into_iter().map(f).collect())
    }

    pub fn values(&self) -> &[Vec3] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.0
            .iter()
            .fold(0.0_f64, |m, v| m.max((v.norm() - 1.0).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spacing() {
        let g = Grid1D::periodic(2.0 * PI, 8).unwrap();
        assert!((g.h() - PI / 4.0).abs() < 1e-15);
        let g = Grid1D::line(-10.0, 10.0, 5).unwrap();
        assert_eq!(g.h(), 5.0);
        assert_eq!(g.basepoint(), 0);
    }

    #[test]
    fn bad_grids() {
        assert!(matches!(Grid1D::periodic(1.0, 2), Err(Error::Config(_))));
        assert!(Grid1D::line(1.0, 1.0, 10).is_err());
        assert!(Grid1D::periodic(-1.0, 10).is_err());
        assert!(Grid1D::periodic(1.0, 10).unwrap().with_basepoint(10).is_err());
    }

    #[test]
    fn diff_of_constant_is_zero() {
        for g in [
            Grid1D::periodic(3.0, 16).unwrap(),
            Grid1D::line(-1.0, 2.0, 16).unwrap(),
        ] {
            let f = vec![2.5; 16];
            assert!(diff1(&f, &g).unwrap().iter().all(|&v| v == 0.0));
            assert!(diff2(&f, &g).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn one_sided_stencils_exact_on_linears() {
        let g = Grid1D::line(-1.0, 3.0, 9).unwrap();
        let f = g.coords();
        let d = diff1(&f, &g).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-13), "{d:?}");
        let f2: Vec<f64> = g.coords().iter().map(|x| 3.0 * x * x - x).collect();
        let d2 = diff2(&f2, &g).unwrap();
        assert!(d2.iter().all(|v| (v - 6.0).abs() < 1e-11), "{d2:?}");
    }

    fn diff1_sin_error(n: usize) -> f64 {
        let g = Grid1D::periodic(2.0 * PI, n).unwrap();
        let f: Vec<f64> = g.coords().iter().map(|x| x.sin()).collect();
        let d = diff1(&f, &g).unwrap();
        g.coords()
            .iter()
            .zip(&d)
            .map(|(x, v)| (v - x.cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn diff1_second_order_on_sine() {
        let e256 = diff1_sin_error(256);
        let h = 2.0 * PI / 256.0;
        assert!(e256 <= h * h / 6.0 * 1.0001, "{e256}");
        for n in [32, 64, 128] {
            let ratio = diff1_sin_error(n) / diff1_sin_error(2 * n);
            assert!((ratio - 4.0).abs() <= 0.8, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn diff2_second_order_on_line() {
        let err = |n: usize| {
            let g = Grid1D::line(0.0, 2.0, n).unwrap();
            let f: Vec<f64> = g.coords().iter().map(|x| (1.3 * x).sin()).collect();
            let d = diff2(&f, &g).unwrap();
            g.coords()
                .iter()
                .zip(&d)
                .map(|(x, v)| (v + 1.69 * (1.3 * x).sin()).abs())
                .fold(0.0, f64::max)
        };
        for n in [33, 65, 129] {
            let ratio = err(n) / err(2 * n - 1);
            assert!((ratio - 4.0).abs() <= 0.8, "n={n} ratio={ratio}");
        }
    }

    #[test]
    fn shape_mismatch() {
        let g = Grid1D::periodic(1.0, 8).unwrap();
        assert_eq!(
            diff1(&[0.0; 7], &g),
            Err(Error::ShapeMismatch {
                expected: 8,
                got: 7
            })
        );
        assert!(cumint(&[0.0; 9], &g).is_err());
    }

    #[test]
    fn cumint_of_one_is_x() {
        let g = Grid1D::line(0.0, 5.0, 11).unwrap();
        let f = cumint(&[1.0; 11], &g).unwrap();
        for (j, v) in f.iter().enumerate() {
            assert!((v - g.x(j)).abs() < 1e-14);
        }
        assert!(cumint(&[0.0; 11], &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cumint_interior_basepoint_and_linears() {
        let g = Grid1D::line(-2.0, 2.0, 9).unwrap().with_basepoint(4).unwrap();
        // piecewise-linear integrand: trapezoid is exact
        let f: Vec<f64> = g.coords().iter().map(|x| 2.0 * x + 1.0).collect();
        let big_f = cumint(&f, &g).unwrap();
        assert_eq!(big_f[4], 0.0);
        for (j, v) in big_f.iter().enumerate() {
            let x = g.x(j);
            assert!((v - (x * x + x)).abs() < 1e-13, "j={j}");
        }
    }

    #[test]
    fn cumint_cosine() {
        let g = Grid1D::line(0.0, 2.0 * PI, 201).unwrap();
        let f: Vec<f64> = g.coords().iter().map(|x| x.cos()).collect();
        let big_f = cumint(&f, &g).unwrap();
        let err = g
            .coords()
            .iter()
            .zip(&big_f)
            .map(|(x, v)| (v - x.sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < g.h() * g.h(), "{err}");
    }

    #[test]
    fn cumint_periodic_does_not_wrap() {
        let g = Grid1D::periodic(1.0, 10).unwrap().with_basepoint(3).unwrap();
        let f = cumint(&[1.0; 10], &g).unwrap();
        assert!((f[9] - 0.6).abs() < 1e-14);
        assert!((f[0] + 0.3).abs() < 1e-14);
    }

    #[test]
    fn vector_algebra() {
        assert_eq!(Vec3::E1.cross(Vec3::E2), Vec3::E3);
        let a = Vec3::new(0.3, -1.2, 2.0);
        assert_eq!(a.cross(a), Vec3::ZERO);
        let b = Vec3::new(0.0, 2.0, 0.0);
        let lhs = Vec3::E1.norm_sq() * b.norm_sq();
        let rhs = Vec3::E1.cross(b).norm_sq() + Vec3::E1.dot(b).powi(2);
        assert_eq!(lhs, 4.0);
        assert_eq!(rhs, 4.0);
    }

    #[test]
    fn sphere_field_rejects_non_unit() {
        assert!(SphereField::new(vec![Vec3::new(1.0, 1e-5, 0.0)]).is_err());
        let s = SphereField::from_normalized(vec![Vec3::new(3.0, 4.0, 0.0)]).unwrap();
        assert!(s.max_norm_defect() < 1e-15);
        assert!(SphereField::from_normalized(vec![Vec3::ZERO]).is_err());
    }

    #[test]
    fn refined_grid_keeps_basepoint_coordinate() {
        let g = Grid1D::line(0.0, 1.0, 11).unwrap().with_basepoint(5).unwrap();
        let r = g.refined(21).unwrap();
        assert_eq!(r.basepoint(), 10);
    }
}
