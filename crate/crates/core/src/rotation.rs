//! Exact rotation updates for orthonormal frames `(u, e, u×e)`.
//!
//! A frame is advanced by `F ← exp(A) F`, where `F` stacks the three frame
//! vectors as rows and `A` is antisymmetric,
//!
//! ```text
//!     ⎛  0    a12  a13 ⎞
//! A = ⎜ -a12   0   a23 ⎟
//!     ⎝ -a13 -a23   0  ⎠
//! ```
//!
//! The exponential is evaluated in closed (Rodrigues) form, so frames stay
//! orthonormal to round-off no matter how many updates are composed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::field::Vec3;

/// Antisymmetric generator, stored by its upper-triangular entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Generator {
    pub a12: f64,
    pub a13: f64,
    pub a23: f64,
}

impl Generator {
    pub fn new(a12: f64, a13: f64, a23: f64) -> Self {
        Self { a12, a13, a23 }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(self.a12 * s, self.a13 * s, self.a23 * s)
    }

    pub fn add(self, o: Generator) -> Self {
        Self::new(self.a12 + o.a12, self.a13 + o.a13, self.a23 + o.a23)
    }

    /// Axis vector `w` with `A = hat(w)`.
    fn axis(self) -> Vec3 {
        Vec3::new(-self.a23, self.a13, -self.a12)
    }

    pub fn exp(self) -> Rot3 {
        let w = self.axis();
        let theta_sq = w.norm_sq();
        let (s, c) = if theta_sq < 1e-8 {
            // Taylor: sinθ/θ and (1-cosθ)/θ², error O(θ^6)
            (
                1.0 - theta_sq / 6.0 + theta_sq * theta_sq / 120.0,
                0.5 - theta_sq / 24.0 + theta_sq * theta_sq / 720.0,
            )
        } else {
            let theta = theta_sq.sqrt();
            (theta.sin() / theta, (1.0 - theta.cos()) / theta_sq)
        };
        let k = hat(w);
        let k2 = mat_mul(&k, &k);
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                m[i][j] = id + s * k[i][j] + c * k2[i][j];
            }
        }
        Rot3(m)
    }
}

fn hat(w: Vec3) -> [[f64; 3]; 3] {
    [[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]]
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// Rotation matrix acting on frame rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rot3(pub [[f64; 3]; 3]);

impl Rot3 {
    pub const IDENTITY: Rot3 = Rot3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn mul(&self, o: &Rot3) -> Rot3 {
        Rot3(mat_mul(&self.0, &o.0))
    }

    pub fn transpose(&self) -> Rot3 {
        let m = self.0;
        Rot3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Principal logarithm; `None` when the angle is too close to `π` for
    /// the axis to be well defined.
    pub fn log(&self) -> Option<Generator> {
        let m = self.0;
        let angle = self.angle();
        if angle > PI - 1e-6 {
            return None;
        }
        let s = if angle < 1e-6 {
            1.0 + angle * angle / 6.0
        } else {
            angle / angle.sin()
        };
        Some(Generator::new(
            0.5 * s * (m[0][1] - m[1][0]),
            0.5 * s * (m[0][2] - m[2][0]),
            0.5 * s * (m[1][2] - m[2][1]),
        ))
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let m = self.0;
        let tr = m[0][0] + m[1][1] + m[2][2];
        let v = Vec3::new(m[2][1] - m[1][2], m[0][2] - m[2][0], m[1][0] - m[0][1]);
        (0.5 * v.norm()).atan2(0.5 * (tr - 1.0))
    }
}

/// Orthonormal frame `(u, e, u×e)` at a single node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub u: Vec3,
    pub e: Vec3,
}

/// Tolerance for accepting externally supplied frames.
pub const FRAME_INPUT_TOL: f64 = 1e-10;

impl Frame {
    pub fn new(u: Vec3, e: Vec3) -> Self {
        Self { u, e }
    }

    pub fn w(&self) -> Vec3 {
        self.u.cross(self.e)
    }

    /// `max(| |u|-1 |, | |e|-1 |, |⟨u,e⟩|)`.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.u.norm() - 1.0)
            .abs()
            .max((self.e.norm() - 1.0).abs())
            .max(self.u.dot(self.e).abs())
    }

    pub fn is_orthonormal(&self, tol: f64) -> bool {
        self.orthonormality_defect() <= tol
    }

    fn rows(&self) -> [Vec3; 3] {
        [self.u, self.e, self.w()]
    }

    /// The rotation `R` with `other = self.rotated(&R)`.
    pub fn rotation_to(&self, other: &Frame) -> Rot3 {
        let (a, b) = (self.rows(), other.rows());
        let mut m = [[0.0; 3]; 3];
        for (i, bi) in b.iter().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                m[i][j] = bi.dot(*aj);
            }
        }
        Rot3(m)
    }

    /// Halfway along the shortest rotation from `self` to `other`.
    pub fn geodesic_midpoint(&self, other: &Frame) -> Option<Frame> {
        let g = self.rotation_to(other).log()?;
        Some(self.rotated(&g.scaled(0.5).exp()))
    }

    /// Applies `r` to the rows `(u, e, u×e)`. Since `u×e` is rebuilt from
    /// the stored pair, round-off in `(u, e)` would compound from step to
    /// step; the result is Gram–Schmidt cleaned, which only touches the
    /// round-off.
    pub fn rotated(&self, r: &Rot3) -> Frame {
        let rows = [self.u, self.e, self.w()];
        let m = r.0;
        let row = |i: usize| rows[0] * m[i][0] + rows[1] * m[i][1] + rows[2] * m[i][2];
        let u = row(0).normalized();
        let e = row(1);
        Frame {
            u,
            e: (e - u * u.dot(e)).normalized(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Rot3, b: &Rot3) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                m = m.max((a.0[i][j] - b.0[i][j]).abs());
            }
        }
        m
    }

    #[test]
    fn log_inverts_exp() {
        let g = Generator::new(0.3, -0.7, 1.1);
        let back = g.exp().log().unwrap();
        assert!((back.a12 - 0.3).abs() < 1e-14);
        assert!((back.a13 + 0.7).abs() < 1e-14);
        assert!((back.a23 - 1.1).abs() < 1e-14);
        let tiny = Generator::new(1e-9, 0.0, -2e-9);
        let back = tiny.exp().log().unwrap();
        assert!((back.a23 + 2e-9).abs() < 1e-20);
    }

    #[test]
    fn geodesic_midpoint_halves_rotation() {
        let f0 = Frame::new(Vec3::E1, Vec3::E2);
        let g = Generator::new(0.4, 0.2, -0.1);
        let f1 = f0.rotated(&g.exp());
        let mid = f0.geodesic_midpoint(&f1).unwrap();
        let expected = f0.rotated(&g.scaled(0.5).exp());
        assert!((mid.u - expected.u).max_abs() < 1e-14);
        assert!((mid.e - expected.e).max_abs() < 1e-14);
    }

    #[test]
    fn zero_generator_is_identity() {
        assert_eq!(Generator::default().exp(), Rot3::IDENTITY);
    }

    #[test]
    fn exp_is_orthogonal_and_matches_series() {
        let g = Generator::new(0.3, -0.7, 1.1);
        let r = g.exp();
        assert!(max_diff(&r.mul(&r.transpose()), &Rot3::IDENTITY) < 1e-15);
        // truncated power series oracle
        let a = [[0.0, 0.3, -0.7], [-0.3, 0.0, 1.1], [0.7, -1.1, 0.0]];
        let mut term = Rot3::IDENTITY.0;
        let mut sum = Rot3::IDENTITY.0;
        for k in 1..30 {
            term = mat_mul(&term, &a);
            for i in 0..3 {
                for j in 0..3 {
                    term[i][j] /= k as f64;
                    sum[i][j] += term[i][j];
                }
            }
        }
        assert!(max_diff(&r, &Rot3(sum)) < 1e-14);
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let g = Generator::new(1e-5, 2e-5, -3e-5);
        let r = g.exp();
        assert!(max_diff(&r.mul(&r.transpose()), &Rot3::IDENTITY) < 1e-15);
        assert!((r.angle() - g.axis().norm()).abs() < 1e-18);
    }

    #[test]
    fn planar_rotation_of_u_toward_e() {
        let f = Frame::new(Vec3::E1, Vec3::E2);
        let theta = 0.4;
        let g = f.rotated(&Generator::new(theta, 0.0, 0.0).exp());
        assert!((g.u - Vec3::new(theta.cos(), theta.sin(), 0.0)).max_abs() < 1e-15);
        assert!((g.e - Vec3::new(-theta.sin(), theta.cos(), 0.0)).max_abs() < 1e-15);
    }

    #[test]
    fn angle_recovers_rotation() {
        for theta in [0.0, 0.1, 1.0, 3.0] {
            let r = Generator::new(0.0, theta, 0.0).exp();
            assert!((r.angle() - theta).abs() < 1e-14);
        }
    }
}
