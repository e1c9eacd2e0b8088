//! Generalized heat equation for `q` with its nonlocal interaction term.
//!
//! Two algebraically equivalent forms are evaluated:
//!
//! ```text
//! expanded: α[q_xx + (q/2)∫_a^x (q_x q̄ − q q̄_x)] + iβ(q_xx + |q|²q/2)
//! compact:  (α+iβ)[q_xx + q|q|²/2] − α q ∫_a^x q q̄_x
//! ```
//!
//! They agree only when `q(a) = 0`; otherwise they differ by the gauge term
//! `α q |q(a)|² / 2`. On a line the basepoint is the left endpoint and stands
//! in for `−∞`, which is why a decay monitor accompanies every evaluation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{cumint, diff1, diff2, max_abs_complex, Grid1D};
use crate::llg::{check_stepping, step_plan, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatForm {
    #[default]
    Expanded,
    Compact,
}

/// Default relative threshold of the boundary-decay monitor.
pub const DECAY_THRESHOLD: f64 = 1e-6;
/// Fraction of nodes at the left boundary inspected by the monitor.
pub const DECAY_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayMonitor {
    /// `max |q|` over the leftmost window.
    pub boundary_max: f64,
    pub global_max: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Checks `max_{leftmost 5%} |q| ≤ threshold · max |q|`. Periodic grids have
/// no boundary and always pass.
pub fn decay_monitor(q: &[Complex64], g: &Grid1D, threshold: f64) -> Result<DecayMonitor> {
    check_len(g.n(), q.len())?;
    let global_max = max_abs_complex(q);
    if g.is_periodic() {
        return Ok(DecayMonitor {
            boundary_max: 0.0,
            global_max,
            threshold,
            passed: true,
        });
    }
    let window = ((DECAY_WINDOW * g.n() as f64).ceil() as usize).clamp(1, g.n());
    let boundary_max = max_abs_complex(&q[..window]);
    Ok(DecayMonitor {
        boundary_max,
        global_max,
        threshold,
        passed: boundary_max <= threshold * global_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatRhs {
    pub value: Vec<Complex64>,
    /// Set when the decay monitor fails: the two forms then differ.
    pub decay_warning: Option<DecayMonitor>,
}

/// Drift of the generalized heat equation, no monitor.
pub fn heat_drift(
    q: &[Complex64],
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    form: HeatForm,
) -> Result<Vec<Complex64>> {
    let qxx = diff2(q, g)?;
    let qx = diff1(q, g)?;
    let i = Complex64::i();
    match form {
        HeatForm::Expanded => {
            // q_x q̄ − q q̄_x = 2i Im(q_x q̄)
            let integrand: Vec<f64> = q
                .iter()
                .zip(&qx)
                .map(|(q, qx)| 2.0 * (qx * q.conj()).im)
                .collect();
            let nonlocal = cumint(&integrand, g)?;
            Ok((0..q.len())
                .map(|j| {
                    let z = q[j];
                    let local = qxx[j] * alpha + z * (i * 0.5 * alpha * nonlocal[j]);
                    local + i * beta * (qxx[j] + z * (0.5 * z.norm_sqr()))
                })
                .collect())
        }
        HeatForm::Compact => {
            let integrand: Vec<Complex64> =
                q.iter().zip(&qx).map(|(q, qx)| q * qx.conj()).collect();
            let nonlocal = cumint(&integrand, g)?;
            let c = Complex64::new(alpha, beta);
            Ok((0..q.len())
                .map(|j| {
                    let z = q[j];
                    c * (qxx[j] + z * (0.5 * z.norm_sqr())) - z * nonlocal[j] * alpha
                })
                .collect())
        }
    }
}

/// Drift plus the decay-monitor verdict.
pub fn heat_rhs(
    q: &[Complex64],
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    form: HeatForm,
) -> Result<HeatRhs> {
    let value = heat_drift(q, g, alpha, beta, form)?;
    let mon = decay_monitor(q, g, DECAY_THRESHOLD)?;
    Ok(HeatRhs {
        value,
        decay_warning: (!mon.passed).then_some(mon),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatConfig {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub form: HeatForm,
}

impl HeatConfig {
    pub fn validate(&self, g: &Grid1D) -> Result<()> {
        check_stepping(g, self.alpha, self.beta, self.dt, self.t_end, self.output_stride)
    }
}

fn axpy(base: &[Complex64], k: &[Complex64], s: f64) -> Vec<Complex64> {
    base.iter().zip(k).map(|(b, k)| b + k * s).collect()
}

/// One classical RK4 step.
pub fn heat_rk4_step(
    q: &[Complex64],
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    form: HeatForm,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let f = |z: &[Complex64]| heat_drift(z, g, alpha, beta, form);
    let k1 = f(q)?;
    let k2 = f(&axpy(q, &k1, 0.5 * dt))?;
    let k3 = f(&axpy(q, &k2, 0.5 * dt))?;
    let k4 = f(&axpy(q, &k3, dt))?;
    Ok((0..q.len())
        .map(|j| q[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0))
        .collect())
}

/// Magnitude above which a complex field counts as blown up.
pub const BLOWUP_LIMIT: f64 = 1e8;

pub(crate) fn check_blowup(q: &[Complex64], t: f64, step: usize) -> Result<()> {
    match q
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()) || z.norm() > BLOWUP_LIMIT)
    {
        Some(j) => Err(Error::BlowUp {
            t,
            step,
            detail: format!("|q| non-finite or above {BLOWUP_LIMIT:e} at node {j}"),
        }),
        None => Ok(()),
    }
}

/// RK4 in time over [`heat_drift`].
pub fn heat_integrate(
    q0: &[Complex64],
    g: &Grid1D,
    cfg: &HeatConfig,
) -> Result<Trajectory<Vec<Complex64>>> {
    check_len(g.n(), q0.len())?;
    cfg.validate(g)?;
    let (steps, dt) = step_plan(cfg.dt, cfg.t_end);
    let mut times = vec![0.0];
    let mut states = vec![q0.to_vec()];
    let mut q = q0.to_vec();
    for step in 1..=steps {
        q = heat_rk4_step(&q, g, cfg.alpha, cfg.beta, cfg.form, dt)?;
        let t = step as f64 * dt;
        check_blowup(&q, t, step)?;
        if step % cfg.output_stride == 0 || step == steps {
            times.push(t);
            states.push(q.clone());
        }
    }
    Ok(Trajectory { times, states })
}

/// L² mass `Σ w_j |q_j|²`.
pub fn mass(q: &[Complex64], g: &Grid1D) -> f64 {
    g.weights().iter().zip(q).map(|(w, z)| w * z.norm_sqr()).sum()
}
