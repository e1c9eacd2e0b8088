//! Deterministic Landau–Lifshitz–Gilbert flow
//! `u_t = β u×u_xx − α u×(u×u_xx)` and the curvature–torsion system used as
//! an independent oracle for it.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{diff1, diff2, Grid1D, SphereField, Vec3};
use crate::hashimoto::CurvatureTorsion;

/// Safety factor of the explicit step restriction `dt ≤ C h² / max(α, |β|)`.
pub const STABILITY_FACTOR: f64 = 0.2;

/// Largest admissible time step for the explicit solvers on `g`.
pub fn stability_bound(g: &Grid1D, alpha: f64, beta: f64) -> f64 {
    let rate = alpha.abs().max(beta.abs());
    if rate == 0.0 {
        f64::INFINITY
    } else {
        STABILITY_FACTOR * g.h() * g.h() / rate
    }
}

/// Collects every violated time-stepping precondition.
pub(crate) fn check_stepping(
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    dt: f64,
    t_end: f64,
    output_stride: usize,
) -> Result<()> {
    let mut problems = Vec::new();
    if !(alpha.is_finite() && alpha >= 0.0) {
        problems.push(format!("alpha must be finite and >= 0, got {alpha}"));
    }
    if !beta.is_finite() {
        problems.push(format!("beta must be finite, got {beta}"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        problems.push(format!("dt must be positive, got {dt}"));
    } else {
        let bound = stability_bound(g, alpha, beta);
        if dt > bound * (1.0 + 1e-12) {
            problems.push(format!("dt = {dt} exceeds the stability bound {bound:.6e}"));
        }
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        problems.push(format!("t_end must be >= 0, got {t_end}"));
    }
    if output_stride == 0 {
        problems.push("output_stride must be >= 1".into());
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems.join("; ")))
    }
}

/// Number of steps and the effective step so that `t_end` is hit exactly.
pub(crate) fn step_plan(dt: f64, t_end: f64) -> (usize, f64) {
    if t_end == 0.0 {
        return (0, dt);
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (steps, t_end / steps as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LLGConfig {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Record every `output_stride`-th step (the final state is always kept).
    pub output_stride: usize,
    /// Project onto the sphere after every step.
    pub renormalize: bool,
}

impl LLGConfig {
    /// Time step at the given fraction of the stability bound.
    pub fn with_bound_fraction(g: &Grid1D, alpha: f64, beta: f64, fraction: f64, t_end: f64) -> Self {
        Self {
            alpha,
            beta,
            dt: fraction * stability_bound(g, alpha, beta).min(t_end.max(f64::MIN_POSITIVE)),
            t_end,
            output_stride: 1,
            renormalize: true,
        }
    }

    pub fn validate(&self, g: &Grid1D) -> Result<()> {
        check_stepping(g, self.alpha, self.beta, self.dt, self.t_end, self.output_stride)
    }
}

/// Time samples of an evolving field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub times: Vec<f64>,
    pub states: Vec<T>,
}

impl<T> Trajectory<T> {
    pub fn last(&self) -> &T {
        self.states.last().expect("trajectory always holds the initial state")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `β u×u_xx − α u×(u×u_xx)` node by node.
pub fn llg_rhs(u: &[Vec3], g: &Grid1D, alpha: f64, beta: f64) -> Result<Vec<Vec3>> {
    let uxx = diff2(u, g)?;
    Ok(u.iter()
        .zip(&uxx)
        .map(|(&u, &uxx)| {
            let prec = u.cross(uxx);
            prec * beta - u.cross(prec) * alpha
        })
        .collect())
}

/// Exchange energy `Σ h |u_x|²`.
pub fn exchange_energy(u: &SphereField, g: &Grid1D) -> Result<f64> {
    let ux = diff1(u.values(), g)?;
    Ok(ux.iter().map(|v| v.norm_sq()).sum::<f64>() * g.h())
}

fn axpy(base: &[Vec3], k: &[Vec3], s: f64) -> Vec<Vec3> {
    base.iter().zip(k).map(|(&b, &k)| b + k * s).collect()
}

/// One classical RK4 step without projection.
pub fn llg_rk4_step(u: &[Vec3], g: &Grid1D, alpha: f64, beta: f64, dt: f64) -> Result<Vec<Vec3>> {
    let k1 = llg_rhs(u, g, alpha, beta)?;
    let k2 = llg_rhs(&axpy(u, &k1, 0.5 * dt), g, alpha, beta)?;
    let k3 = llg_rhs(&axpy(u, &k2, 0.5 * dt), g, alpha, beta)?;
    let k4 = llg_rhs(&axpy(u, &k3, dt), g, alpha, beta)?;
    Ok((0..u.len())
        .map(|j| u[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (dt / 6.0))
        .collect())
}

/// RK4 in time, projecting back onto the sphere after each step when
/// `cfg.renormalize` is set.
pub fn llg_integrate(u0: &SphereField, g: &Grid1D, cfg: &LLGConfig) -> Result<Trajectory<SphereField>> {
    check_len(g.n(), u0.len())?;
    cfg.validate(g)?;
    let (steps, dt) = step_plan(cfg.dt, cfg.t_end);
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    let mut u = u0.values().to_vec();
    for step in 1..=steps {
        let mut next = llg_rk4_step(&u, g, cfg.alpha, cfg.beta, dt)?;
        let t = step as f64 * dt;
        if let Some(j) = next.iter().position(|v| !v.is_finite() || v.norm() > 1e6) {
            return Err(Error::BlowUp {
                t,
                step,
                detail: format!("non-finite or exploding magnetization at node {j}"),
            });
        }
        if cfg.renormalize {
            for v in next.iter_mut() {
                *v = v.normalized();
            }
        }
        u = next;
        if step % cfg.output_stride == 0 || step == steps {
            times.push(t);
            states.push(if cfg.renormalize {
                SphereField::new(u.clone())?
            } else {
                SphereField::from_normalized(u.clone())?
            });
        }
    }
    Ok(Trajectory { times, states })
}

/// Unprojected integration, returning the final state and the largest
/// `| |u| − 1 |` reached along the way.
pub fn llg_norm_drift(u0: &SphereField, g: &Grid1D, cfg: &LLGConfig) -> Result<f64> {
    cfg.validate(g)?;
    let (steps, dt) = step_plan(cfg.dt, cfg.t_end);
    let mut u = u0.values().to_vec();
    let mut drift = 0.0_f64;
    for _ in 0..steps {
        u = llg_rk4_step(&u, g, cfg.alpha, cfg.beta, dt)?;
        drift = u.iter().fold(drift, |m, v| m.max((v.norm() - 1.0).abs()));
    }
    Ok(drift)
}

/// Right-hand side of the curvature–torsion system
///
/// ```text
/// Θ_t = α(Θ_xx − η²Θ) − β(η_x Θ + 2Θ_x η)
/// η_t = α η_xx + 2α(η Θ_x/Θ)_x + α η Θ² + β(Θ_xx/Θ + Θ²/2 − η²)_x
/// ```
///
/// Divisions by `Θ` use `max(Θ, ε)` with the mask threshold carried by `ct`.
pub fn curvature_torsion_rhs(
    ct: &CurvatureTorsion,
    g: &Grid1D,
    alpha: f64,
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let th = &ct.theta;
    let eta = &ct.eta;
    let n = th.len();
    check_len(g.n(), n)?;
    check_len(n, eta.len())?;
    let th_x = diff1(th, g)?;
    let th_xx = diff2(th, g)?;
    let eta_x = diff1(eta, g)?;
    let eta_xx = diff2(eta, g)?;
    let safe = |t: f64| if ct.eps > 0.0 { t.max(ct.eps) } else { t };
    let ratio: Vec<f64> = (0..n)
        .map(|j| if ct.valid[j] { eta[j] * th_x[j] / safe(th[j]) } else { 0.0 })
        .collect();
    let ratio_x = diff1(&ratio, g)?;
    let potential: Vec<f64> = (0..n)
        .map(|j| {
            let curv = if ct.valid[j] { th_xx[j] / safe(th[j]) } else { 0.0 };
            curv + 0.5 * th[j] * th[j] - eta[j] * eta[j]
        })
        .collect();
    let potential_x = diff1(&potential, g)?;
    let d_theta = (0..n)
        .map(|j| {
            alpha * (th_xx[j] - eta[j] * eta[j] * th[j])
                - beta * (eta_x[j] * th[j] + 2.0 * th_x[j] * eta[j])
        })
        .collect();
    let d_eta = (0..n)
        .map(|j| {
            alpha * eta_xx[j]
                + 2.0 * alpha * ratio_x[j]
                + alpha * eta[j] * th[j] * th[j]
                + beta * potential_x[j]
        })
        .collect();
    Ok((d_theta, d_eta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashimoto::{curvature_torsion, Regularization};
    use std::f64::consts::PI;

    fn great_circle(g: &Grid1D, k: f64) -> SphereField {
        SphereField::from_fn(g, |x| Vec3::new((k * x).cos(), (k * x).sin(), 0.0)).unwrap()
    }

    fn wobbly(g: &Grid1D) -> SphereField {
        SphereField::from_fn(g, |x| {
            let p = 0.4 * (2.0 * x).sin();
            Vec3::new(x.cos() * p.cos(), x.sin() * p.cos(), p.sin())
        })
        .unwrap()
    }

    #[test]
    fn rhs_vanishes_on_great_circle() {
        let g = Grid1D::periodic(2.0 * PI, 64).unwrap();
        let r = llg_rhs(great_circle(&g, 1.0).values(), &g, 0.7, 1.3).unwrap();
        let worst = r.iter().map(|v| v.max_abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
        let w = wobbly(&g);
        let r0 = llg_rhs(w.values(), &g, 0.0, 0.0).unwrap();
        assert!(r0.iter().all(|v| *v == Vec3::ZERO));
    }

    #[test]
    fn rhs_matches_expanded_form() {
        // u×(u×u_xx) = u⟨u,u_xx⟩ − u_xx and the discrete |u|=1
        let g = Grid1D::periodic(2.0 * PI, 128).unwrap();
        let u = wobbly(&g);
        let (alpha, beta) = (0.8, -0.6);
        let rhs = llg_rhs(u.values(), &g, alpha, beta).unwrap();
        let uxx = diff2(u.values(), &g).unwrap();
        for j in 0..g.n() {
            let uj = u.values()[j];
            let alt = (uxx[j] - uj * uj.dot(uxx[j])) * alpha + uj.cross(uxx[j]) * beta;
            assert!((rhs[j] - alt).max_abs() < 1e-12);
        }
    }

    #[test]
    fn great_circle_is_stationary() {
        let g = Grid1D::periodic(2.0 * PI, 64).unwrap();
        let u0 = great_circle(&g, 2.0);
        let cfg = LLGConfig::with_bound_fraction(&g, 1.0, 1.0, 1.0, 0.1);
        let traj = llg_integrate(&u0, &g, &cfg).unwrap();
        let drift = traj
            .last()
            .values()
            .iter()
            .zip(u0.values())
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max);
        assert!(drift <= 1e-10, "{drift}");
        assert!((traj.times.last().unwrap() - 0.1).abs() < 1e-15);
        for s in &traj.states {
            assert!(s.max_norm_defect() <= 1e-15);
        }
    }

    #[test]
    fn energy_dissipates_with_damping() {
        let g = Grid1D::periodic(2.0 * PI, 64).unwrap();
        let u0 = wobbly(&g);
        let mut cfg = LLGConfig::with_bound_fraction(&g, 0.5, 1.0, 1.0, 0.2);
        cfg.output_stride = 1;
        let traj = llg_integrate(&u0, &g, &cfg).unwrap();
        let energies: Vec<f64> = traj
            .states
            .iter()
            .map(|s| exchange_energy(s, &g).unwrap())
            .collect();
        let slack = 10.0 * cfg.dt * cfg.dt;
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + slack, "{} -> {}", w[0], w[1]);
        }
        assert!(energies.last().unwrap() < &(energies[0] * 0.999));
    }

    #[test]
    fn unprojected_drift_is_small_but_nonzero() {
        let g = Grid1D::periodic(2.0 * PI, 64).unwrap();
        let u0 = wobbly(&g);
        let cfg = LLGConfig::with_bound_fraction(&g, 0.5, 1.0, 1.0, 0.1);
        let drift = llg_norm_drift(&u0, &g, &cfg).unwrap();
        assert!(drift > 0.0 && drift < 1e-4, "{drift}");
    }

    #[test]
    fn config_validation() {
        let g = Grid1D::periodic(1.0, 16).unwrap();
        let bad = LLGConfig {
            alpha: -1.0,
            beta: 0.0,
            dt: 1.0,
            t_end: 1.0,
            output_stride: 0,
            renormalize: true,
        };
        let Err(Error::Config(msg)) = bad.validate(&g) else {
            panic!("expected config error")
        };
        assert!(msg.contains("alpha") && msg.contains("output_stride"));
        let too_big = LLGConfig {
            alpha: 1.0,
            beta: 0.0,
            dt: 1.0,
            t_end: 1.0,
            output_stride: 1,
            renormalize: true,
        };
        assert!(too_big.validate(&g).is_err());
    }

    #[test]
    fn ct_rhs_trivial_cases() {
        let g = Grid1D::periodic(2.0 * PI, 32).unwrap();
        let ct = CurvatureTorsion {
            theta: vec![1.5; 32],
            eta: vec![0.0; 32],
            valid: vec![true; 32],
            eps: 1.5e-8,
        };
        let (dt, de) = curvature_torsion_rhs(&ct, &g, 0.9, 1.1).unwrap();
        assert!(dt.iter().chain(&de).all(|v| v.abs() < 1e-14));
        let ct = curvature_torsion(&wobbly(&g), &g, Regularization::default()).unwrap();
        let (dt, de) = curvature_torsion_rhs(&ct, &g, 0.0, 0.0).unwrap();
        assert!(dt.iter().chain(&de).all(|v| *v == 0.0));
    }
}
