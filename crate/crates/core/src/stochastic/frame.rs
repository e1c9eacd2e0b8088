use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::hashimoto::FrameField;
use crate::rotation::{Frame, Generator, FRAME_INPUT_TOL};

use super::she::InternalCoeffs;

/// Total antisymmetric increment over one step: the deterministic entries
/// `(p¹, p², C)·dt` plus the noise entries `(dW¹, dW², dΨ)`.
pub fn time_generator(p: Complex64, c: f64, dw1: f64, dw2: f64, dpsi: f64, dt: f64) -> Generator {
    Generator::new(p.re * dt + dw1, p.im * dt + dw2, c * dt + dpsi)
}

/// Heun (trapezoidal) average of the coefficients at both ends of a step.
pub fn heun_average(start: &InternalCoeffs, end: &InternalCoeffs) -> InternalCoeffs {
    let avg = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
    InternalCoeffs {
        p: start.p.iter().zip(&end.p).map(|(a, b)| (a + b) * 0.5).collect(),
        c: avg(&start.c, &end.c),
        dpsi: avg(&start.dpsi, &end.dpsi),
        c_imag_max: start.c_imag_max.max(end.c_imag_max),
    }
}

/// Single-node update `F ← exp(G) F`.
pub fn rotate_node(f: Frame, p: Complex64, c: f64, dw1: f64, dw2: f64, dpsi: f64, dt: f64) -> Frame {
    f.rotated(&time_generator(p, c, dw1, dw2, dpsi, dt).exp())
}

/// Advances every node of the frame field by one exact rotation. The
/// coefficients are expected to be Heun-averaged already.
pub fn frame_time_step(
    f: &FrameField,
    coeffs: &InternalCoeffs,
    dw1: &[f64],
    dw2: &[f64],
    dpsi: &[f64],
    dt: f64,
) -> Result<FrameField> {
    let n = f.len();
    for len in [f.e.len(), coeffs.p.len(), coeffs.c.len(), dw1.len(), dw2.len(), dpsi.len()] {
        check_len(n, len)?;
    }
    let defect = f.max_orthonormality_defect();
    if defect > FRAME_INPUT_TOL {
        return Err(Error::Precondition(format!(
            "frame field is not orthonormal (defect {defect:.3e})"
        )));
    }
    let frames: Vec<Frame> = (0..n)
        .map(|j| rotate_node(f.frame(j), coeffs.p[j], coeffs.c[j], dw1[j], dw2[j], dpsi[j], dt))
        .collect();
    Ok(FrameField::from_frames(&frames))
}
