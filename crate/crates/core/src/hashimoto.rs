//! The Hashimoto transform `u ↦ q = Θ e^{iω}`, its inverse identities, and
//! reconstruction of a sphere-valued map from `q` by integrating the frame
//! equation in space.
//!
//! Conventions: `Θ = |u_x|`, `η = ⟨u×u_x, u_xx⟩ / |u_x|²` and
//! `ω(x) = ∫_a^x η`, so the phase is anchored at the grid basepoint
//! (`ω(a) = 0`). The matching frame satisfies
//!
//! ```text
//! u_x = q¹ e + q² u×e,   e_x = -q¹ u,   (u×e)_x = -q² u
//! ```
//!
//! with `e(a) = u_x(a) / |u_x(a)|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{cumint, diff1, diff2, max_abs_real, Grid1D, SphereField, Vec3};
use crate::rotation::{Frame, Generator, FRAME_INPUT_TOL};

/// Threshold below which curvature counts as vanishing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regularization {
    /// `ε = factor · max Θ`.
    Relative(f64),
    Absolute(f64),
}

impl Default for Regularization {
    fn default() -> Self {
        Regularization::Relative(1e-8)
    }
}

impl Regularization {
    pub fn resolve(self, theta: &[f64]) -> f64 {
        match self {
            Regularization::Relative(f) => f * max_abs_real(theta),
            Regularization::Absolute(eps) => eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTorsion {
    pub theta: Vec<f64>,
    /// Zero wherever `valid` is false.
    pub eta: Vec<f64>,
    pub valid: Vec<bool>,
    pub eps: f64,
}

impl CurvatureTorsion {
    pub fn all_invalid(&self) -> bool {
        !self.valid.iter().any(|&v| v)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Curvature `Θ`, torsion `η` and the validity mask `Θ > ε`.
pub fn curvature_torsion(
    u: &SphereField,
    g: &Grid1D,
    reg: Regularization,
) -> Result<CurvatureTorsion> {
    let u = u.values();
    let ux = diff1(u, g)?;
    let uxx = diff2(u, g)?;
    let theta: Vec<f64> = ux.iter().map(|v| v.norm()).collect();
    let eps = reg.resolve(&theta);
    let mut eta = vec![0.0; theta.len()];
    let mut valid = vec![false; theta.len()];
    for j in 0..theta.len() {
        if theta[j] > eps {
            valid[j] = true;
            let num = u[j].cross(ux[j]).dot(uxx[j]);
            eta[j] = num / (theta[j] * theta[j]).max(eps * eps);
        }
    }
    Ok(CurvatureTorsion {
        theta,
        eta,
        valid,
        eps,
    })
}

/// Accumulated phase `ω = ∫_a^x η`, masked torsion counted as zero.
pub fn phase(ct: &CurvatureTorsion, g: &Grid1D) -> Result<Vec<f64>> {
    cumint(&ct.eta, g)
}

/// `q = Θ e^{iω}`.
pub fn transform(u: &SphereField, g: &Grid1D, reg: Regularization) -> Result<Vec<Complex64>> {
    let ct = curvature_torsion(u, g, reg)?;
    let omega = phase(&ct, g)?;
    Ok(ct
        .theta
        .iter()
        .zip(&omega)
        .map(|(&th, &om)| Complex64::from_polar(th, om))
        .collect())
}

/// `Θ = |q|`, `η = i(q q̄_x − q_x q̄) / (2|q|²) = Im(q_x q̄) / |q|²`.
pub fn inverse_identities(
    q: &[Complex64],
    g: &Grid1D,
    reg: Regularization,
) -> Result<CurvatureTorsion> {
    let qx = diff1(q, g)?;
    let theta: Vec<f64> = q.iter().map(|z| z.norm()).collect();
    let eps = reg.resolve(&theta);
    let mut eta = vec![0.0; q.len()];
    let mut valid = vec![false; q.len()];
    for j in 0..q.len() {
        if theta[j] > eps {
            valid[j] = true;
            eta[j] = (qx[j] * q[j].conj()).im / q[j].norm_sqr().max(eps * eps);
        }
    }
    Ok(CurvatureTorsion {
        theta,
        eta,
        valid,
        eps,
    })
}

/// Moving frame `(u, e)` at every node; `u×e` is derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameField {
    pub u: Vec<Vec3>,
    pub e: Vec<Vec3>,
}

impl FrameField {
    pub fn from_frames(frames: &[Frame]) -> Self {
        Self {
            u: frames.iter().map(|f| f.u).collect(),
            e: frames.iter().map(|f| f.e).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn frame(&self, j: usize) -> Frame {
        Frame::new(self.u[j], self.e[j])
    }

    pub fn w(&self) -> Vec<Vec3> {
        self.u.iter().zip(&self.e).map(|(u, e)| u.cross(*e)).collect()
    }

    pub fn sphere(&self) -> Result<SphereField> {
        SphereField::new(self.u.clone())
    }

    pub fn max_orthonormality_defect(&self) -> f64 {
        (0..self.len())
            .map(|j| self.frame(j).orthonormality_defect())
            .fold(0.0, f64::max)
    }
}

/// Spatial generator `h·A(q)` between two nodes, `q` at the cell midpoint.
pub fn space_generator(q_mid: Complex64, h: f64) -> Generator {
    Generator::new(q_mid.re * h, q_mid.im * h, 0.0)
}

/// Integrates `∂_x(u, e, u×e)ᵀ = A(q)(u, e, u×e)ᵀ` outward from the basepoint
/// with `u(a) = m`, `e(a) = e0`, one exact rotation per cell.
pub fn reconstruct_frame(q: &[Complex64], g: &Grid1D, m: Vec3, e0: Vec3) -> Result<FrameField> {
    check_len(g.n(), q.len())?;
    let start = Frame::new(m, e0);
    if !start.is_orthonormal(FRAME_INPUT_TOL) {
        return Err(Error::Precondition(format!(
            "initial frame is not orthonormal (defect {:.3e})",
            start.orthonormality_defect()
        )));
    }
    let n = g.n();
    let h = g.h();
    let a = g.basepoint();
    let mut frames = vec![start; n];
    for j in a + 1..n {
        let mid = (q[j - 1] + q[j]) * 0.5;
        frames[j] = frames[j - 1].rotated(&space_generator(mid, h).exp());
    }
    for j in (0..a).rev() {
        let mid = (q[j] + q[j + 1]) * 0.5;
        frames[j] = frames[j + 1].rotated(&space_generator(mid, -h).exp());
    }
    Ok(FrameField::from_frames(&frames))
}

/// On a circle: the frame obtained by stepping once more across the seam
/// from the last node, compared with the frame at node 0. Returns the
/// largest component mismatch of `u` and `e`.
pub fn closure_defect(frames: &FrameField, q: &[Complex64], g: &Grid1D) -> Result<f64> {
    check_len(g.n(), q.len())?;
    if !g.is_periodic() {
        return Err(Error::Precondition(
            "closure defect is defined on periodic grids only".into(),
        ));
    }
    let n = g.n();
    let mid = (q[n - 1] + q[0]) * 0.5;
    let wrapped = frames.frame(n - 1).rotated(&space_generator(mid, g.h()).exp());
    let first = frames.frame(0);
    Ok((wrapped.u - first.u)
        .max_abs()
        .max((wrapped.e - first.e).max_abs()))
}

/// Initial frame matching the gauge `ω(a) = 0`: `e(a) = u_x(a)/|u_x(a)|`.
pub fn gauge_frame(u: &SphereField, g: &Grid1D) -> Result<Frame> {
    let ux = diff1(u.values(), g)?;
    let a = g.basepoint();
    let t = ux[a].norm();
    if !(t > 0.0) {
        return Err(Error::Precondition(
            "curvature vanishes at the basepoint; gauge frame undefined".into(),
        ));
    }
    let m = u.values()[a];
    // strip the O(h²) normal component so the frame is orthonormal to round-off
    let e = ux[a] - m * m.dot(ux[a]);
    Ok(Frame::new(m, e.normalized()))
}
