use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::field::{cumint, diff1, Grid1D};
use crate::heat::{check_blowup, heat_rk4_step, HeatForm};

use super::noise::NoiseFields;

/// Coefficients of the time generator at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalCoeffs {
    /// `p = (α + iβ) q_x`.
    pub p: Vec<Complex64>,
    /// `C = −½β|q|² + (iα/2) ∫_a^x (q_x q̄ − q̄_x q)`.
    pub c: Vec<f64>,
    /// Increment of `Ψ` over the step.
    pub dpsi: Vec<f64>,
    /// Largest imaginary part discarded when forming `C`.
    pub c_imag_max: f64,
}

/// `C(q)` evaluated in its complex form; returns the real part and the
/// largest imaginary residue.
pub fn c_field(q: &[Complex64], g: &Grid1D, alpha: f64, beta: f64) -> Result<(Vec<f64>, f64)> {
    let qx = diff1(q, g)?;
    let integrand: Vec<Complex64> = q
        .iter()
        .zip(&qx)
        .map(|(z, zx)| zx * z.conj() - zx.conj() * z)
        .collect();
    let nonlocal = cumint(&integrand, g)?;
    let half_i_alpha = Complex64::new(0.0, 0.5 * alpha);
    let mut imag = 0.0f64;
    let c = q
        .iter()
        .zip(&nonlocal)
        .map(|(z, s)| {
            let v = Complex64::new(-0.5 * beta * z.norm_sqr(), 0.0) + half_i_alpha * s;
            imag = imag.max(v.im.abs());
            v.re
        })
        .collect();
    Ok((c, imag))
}

/// `dΨ = ∫_a^x q² dW¹ − q¹ dW²` with `q = q¹ + i q²`.
pub fn phase_increment(q: &[Complex64], g: &Grid1D, dw1: &[f64], dw2: &[f64]) -> Result<Vec<f64>> {
    check_len(q.len(), dw1.len())?;
    check_len(q.len(), dw2.len())?;
    let integrand: Vec<f64> = q
        .iter()
        .zip(dw1.iter().zip(dw2))
        .map(|(z, (a, b))| z.im * a - z.re * b)
        .collect();
    cumint(&integrand, g)
}

/// `p` and `C` from `q`; `dΨ` from the Stratonovich midpoint `q_mid`.
pub fn internal_coeffs(
    q: &[Complex64],
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    dw1: &[f64],
    dw2: &[f64],
    q_mid: &[Complex64],
) -> Result<InternalCoeffs> {
    check_len(g.n(), q.len())?;
    check_len(g.n(), q_mid.len())?;
    let scale = Complex64::new(alpha, beta);
    let p = diff1(q, g)?.into_iter().map(|z| z * scale).collect();
    let (c, c_imag_max) = c_field(q, g, alpha, beta)?;
    let dpsi = phase_increment(q_mid, g, dw1, dw2)?;
    Ok(InternalCoeffs {
        p,
        c,
        dpsi,
        c_imag_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheParams {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheStep {
    pub q: Vec<Complex64>,
    /// Phase increment applied, evaluated at the midpoint state.
    pub dpsi: Vec<f64>,
}

fn rotate_phase(q: &[Complex64], theta: &[f64], shift: &[Complex64]) -> Vec<Complex64> {
    q.iter()
        .zip(theta)
        .zip(shift)
        .map(|((z, th), s)| z * Complex64::from_polar(1.0, -th) + s)
        .collect()
}

/// One step of `dq = p_x − iqC − iq∘dΨ + d∂_x(W¹ + iW²)`.
///
/// The drift is advanced with the deterministic RK4 step, so zero noise
/// reproduces the heat solver bit for bit. The noise part
/// `dq = −iq∘dΨ(q) + dN` is then solved with a predictor-corrector for
/// the Stratonovich midpoint: half the additive kick, an exact phase
/// rotation by `dΨ(q_mid)`, the other half of the kick.
pub fn stochastic_heat_step(
    q: &[Complex64],
    g: &Grid1D,
    params: SheParams,
    fields: &NoiseFields,
    step: usize,
) -> Result<SheStep> {
    check_len(g.n(), q.len())?;
    let drifted = heat_rk4_step(q, g, params.alpha, params.beta, HeatForm::Expanded, params.dt)?;
    let n = q.len();
    if fields.is_zero() {
        check_blowup(&drifted, (step + 1) as f64 * params.dt, step + 1)?;
        return Ok(SheStep {
            q: drifted,
            dpsi: vec![0.0; n],
        });
    }
    let [dw1, dw2, _] = &fields.dw;
    let half_kick: Vec<Complex64> = fields.ddw[0]
        .iter()
        .zip(&fields.ddw[1])
        .map(|(a, b)| Complex64::new(0.5 * a, 0.5 * b))
        .collect();
    let kicked: Vec<Complex64> = drifted.iter().zip(&half_kick).map(|(z, k)| z + k).collect();

    let theta0 = phase_increment(&drifted, g, dw1, dw2)?;
    let predictor = rotate_phase(&kicked, &theta0, &half_kick);
    let q_mid: Vec<Complex64> = drifted
        .iter()
        .zip(&predictor)
        .map(|(a, b)| (a + b) * 0.5)
        .collect();
    let dpsi = phase_increment(&q_mid, g, dw1, dw2)?;
    let next = rotate_phase(&kicked, &dpsi, &half_kick);
    check_blowup(&next, (step + 1) as f64 * params.dt, step + 1)?;
    Ok(SheStep { q: next, dpsi })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_q(n: usize, seed: u64) -> Vec<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
            .collect()
    }

    #[test]
    fn constant_real_q() {
        let g = Grid1D::periodic(1.0, 16).unwrap();
        let k = 1.7;
        let q = vec![Complex64::new(k, 0.0); 16];
        let z = vec![0.0; 16];
        let c = internal_coeffs(&q, &g, 0.4, 0.9, &z, &z, &q).unwrap();
        assert!(c.p.iter().all(|p| p.norm() < 1e-12));
        assert!(c.c.iter().all(|v| (v + 0.9 * k * k / 2.0).abs() < 1e-14));
    }

    #[test]
    fn zero_q() {
        let g = Grid1D::line(0.0, 1.0, 8).unwrap();
        let q = vec![Complex64::new(0.0, 0.0); 8];
        let w = vec![0.3; 8];
        let c = internal_coeffs(&q, &g, 1.0, 1.0, &w, &w, &q).unwrap();
        assert!(c.p.iter().all(|p| *p == Complex64::new(0.0, 0.0)));
        assert!(c.c.iter().chain(&c.dpsi).all(|v| *v == 0.0));
    }

    #[test]
    fn c_is_real_and_dpsi_vanishes_at_basepoint() {
        for seed in 0..10 {
            let g = Grid1D::periodic(2.0, 40).unwrap().with_basepoint(7).unwrap();
            let q = random_q(40, seed);
            let w1: Vec<f64> = random_q(40, seed + 100).iter().map(|z| z.re).collect();
            let w2: Vec<f64> = random_q(40, seed + 200).iter().map(|z| z.im).collect();
            let c = internal_coeffs(&q, &g, 1.3, -0.4, &w1, &w2, &q).unwrap();
            assert!(c.c_imag_max <= 1e-12, "{}", c.c_imag_max);
            assert_eq!(c.dpsi[7], 0.0);
        }
    }

    #[test]
    fn zero_noise_is_rk4() {
        let g = Grid1D::line(-10.0, 10.0, 101).unwrap();
        let q: Vec<Complex64> = g
            .coords()
            .iter()
            .map(|x| Complex64::new(1.0 / x.cosh(), 0.3 * (-x * x).exp()))
            .collect();
        let params = SheParams { alpha: 1.0, beta: 0.5, dt: 1e-3 };
        let out = stochastic_heat_step(&q, &g, params, &NoiseFields::zero(101), 0).unwrap();
        let rk4 = heat_rk4_step(&q, &g, 1.0, 0.5, HeatForm::Expanded, 1e-3).unwrap();
        assert_eq!(out.q, rk4);
    }

    #[test]
    fn phase_rotation_preserves_modulus() {
        let q = random_q(20, 5);
        let theta: Vec<f64> = random_q(20, 6).iter().map(|z| 10.0 * z.re).collect();
        let zero = vec![Complex64::new(0.0, 0.0); 20];
        let r = rotate_phase(&q, &theta, &zero);
        for (a, b) in q.iter().zip(&r) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1.0));
        }
    }
}
