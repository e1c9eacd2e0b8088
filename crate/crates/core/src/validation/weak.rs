use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{inner_vec3, Grid1D, Vec3};
use crate::llg::llg_rhs;
use crate::stochastic::{run_ensemble, EnsembleSpec, SllgPath};

use super::{mean_stderr, sci, text_table};

/// Quadrature of the time integrals in `R(φ)`. The symmetric rules converge
/// to the Stratonovich integral; `LeftPoint` converges to the Itô integral
/// and serves as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratonovichRule {
    /// Drift by the trapezoid rule; noise at the arithmetic midpoint
    /// `(ū, ē)` of the step's two frames.
    #[default]
    Midpoint,
    /// Simpson's rule for drift and noise, the middle sample taken at the
    /// geodesic midpoint of the step's two frames.
    GeodesicSimpson,
    /// Trapezoid drift, noise evaluated at the start of the step.
    LeftPoint,
}

/// `R(φ)` for one path and each test function:
///
/// ```text
/// R(φ) = ⟨u(T) − u(0), φ⟩ − Σ_k ∫⟨F(u), φ⟩dt − Σ_k ⟨u × dW̃_k, φ⟩
/// ```
///
/// with `F(u) = β u×u_xx − α u×(u×u_xx)` and
/// `dW̃_k = e dW²_k + (e×u) dW¹_k + u dW³_k`, both integrals evaluated
/// step by step with `rule`.
pub fn weak_residual_path(
    path: &SllgPath,
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    phis: &[Vec<Vec3>],
    rule: StratonovichRule,
) -> Result<Vec<f64>> {
    for phi in phis {
        check_len(g.n(), phi.len())?;
    }
    let n = g.n();
    let steps = path.steps();
    let dt = path.dt();
    let mut r = vec![0.0; phis.len()];
    let first = &path.frames[0].u;
    let last = &path.frames[steps].u;
    let diff: Vec<Vec3> = last.iter().zip(first).map(|(a, b)| *a - *b).collect();
    for (ri, phi) in r.iter_mut().zip(phis) {
        *ri = inner_vec3(&diff, phi, g)?;
    }
    let noise_term = |u: Vec3, e: Vec3, f: &crate::stochastic::NoiseFields, j: usize| {
        let dw = e * f.dw[1][j] + e.cross(u) * f.dw[0][j] + u * f.dw[2][j];
        u.cross(dw)
    };
    let mut rhs_prev = llg_rhs(first, g, alpha, beta)?;
    let mut integrand = vec![Vec3::ZERO; n];
    for k in 0..steps {
        let (f0, f1) = (&path.frames[k], &path.frames[k + 1]);
        let rhs_next = llg_rhs(&f1.u, g, alpha, beta)?;
        let noise = &path.noise[k];
        match rule {
            StratonovichRule::Midpoint => {
                for j in 0..n {
                    let u = (f0.u[j] + f1.u[j]) * 0.5;
                    let e = (f0.e[j] + f1.e[j]) * 0.5;
                    integrand[j] = (rhs_prev[j] + rhs_next[j]) * (0.5 * dt) + noise_term(u, e, noise, j);
                }
            }
            StratonovichRule::LeftPoint => {
                for j in 0..n {
                    integrand[j] = (rhs_prev[j] + rhs_next[j]) * (0.5 * dt)
                        + noise_term(f0.u[j], f0.e[j], noise, j);
                }
            }
            StratonovichRule::GeodesicSimpson => {
                let mid = (0..n)
                    .map(|j| {
                        f0.frame(j).geodesic_midpoint(&f1.frame(j)).ok_or_else(|| {
                            Error::Precondition(format!(
                                "frame turns by nearly π in one step at node {j}, step {k}"
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let um: Vec<Vec3> = mid.iter().map(|f| f.u).collect();
                let rhs_mid = llg_rhs(&um, g, alpha, beta)?;
                for j in 0..n {
                    let drift = (rhs_prev[j] + rhs_mid[j] * 4.0 + rhs_next[j]) * (dt / 6.0);
                    let stoch = (noise_term(f0.u[j], f0.e[j], noise, j)
                        + noise_term(mid[j].u, mid[j].e, noise, j) * 4.0
                        + noise_term(f1.u[j], f1.e[j], noise, j))
                        * (1.0 / 6.0);
                    integrand[j] = drift + stoch;
                }
            }
        }
        for (ri, phi) in r.iter_mut().zip(phis) {
            *ri -= inner_vec3(&integrand, phi, g)?;
        }
        rhs_prev = rhs_next;
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualStats {
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    pub rms: f64,
    /// `|mean| ≤ 3·stderr`.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualLevel {
    pub dt: f64,
    pub paths: usize,
    pub max_closure_defect: f64,
    pub stats: Vec<WeakResidualStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakResidualReport {
    pub rule: StratonovichRule,
    pub n: usize,
    pub modes: usize,
    pub t_end: f64,
    /// Coarse to fine in `dt`.
    pub levels: Vec<WeakResidualLevel>,
}

impl WeakResidualReport {
    pub fn to_text(&self) -> String {
        let mut rows = Vec::new();
        for l in &self.levels {
            for s in &l.stats {
                rows.push(vec![
                    sci(l.dt),
                    s.label.clone(),
                    sci(s.mean),
                    sci(s.stderr),
                    sci(s.rms),
                    if s.consistent { "ok".into() } else { "BIAS".into() },
                ]);
            }
        }
        let mut out = format!(
            "weak residual ({:?}) n={} L={} T={}\n",
            self.rule, self.n, self.modes, self.t_end
        );
        out.push_str(&text_table(&["dt", "phi", "mean R", "stderr", "rms", "3 sigma"], &rows));
        out
    }
}

/// Runs the ensemble at every time step in `dts` (same master seed) and
/// collects `R(φ)` statistics per test function.
pub fn sllg_weak_residual(
    spec: &EnsembleSpec,
    dts: &[f64],
    phis: &[(String, Vec<Vec3>)],
    rule: StratonovichRule,
) -> Result<WeakResidualReport> {
    if dts.is_empty() {
        return Err(Error::Config("weak residual needs at least one time step".into()));
    }
    let g = &spec.grid;
    let fields: Vec<Vec<Vec3>> = phis.iter().map(|(_, f)| f.clone()).collect();
    let mut dts = dts.to_vec();
    dts.sort_by(|a, b| b.total_cmp(a));
    let mut levels = Vec::with_capacity(dts.len());
    for dt in dts {
        let mut level_spec = spec.clone();
        level_spec.cfg.dt = dt;
        let per_path = run_ensemble(&level_spec, |_, path| {
            Ok((
                weak_residual_path(path, g, spec.cfg.alpha, spec.cfg.beta, &fields, rule)?,
                path.max_closure_defect(),
            ))
        })?;
        let stats = phis
            .iter()
            .enumerate()
            .map(|(i, (label, _))| {
                let xs: Vec<f64> = per_path.iter().map(|(r, _)| r[i]).collect();
                let (mean, stderr) = mean_stderr(&xs);
                let rms = (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt();
                WeakResidualStats {
                    label: label.clone(),
                    mean,
                    stderr,
                    rms,
                    consistent: mean.abs() <= 3.0 * stderr,
                }
            })
            .collect();
        levels.push(WeakResidualLevel {
            dt,
            paths: per_path.len(),
            max_closure_defect: per_path.iter().map(|p| p.1).fold(0.0, f64::max),
            stats,
        });
    }
    Ok(WeakResidualReport {
        rule,
        n: g.n(),
        modes: spec.noise.modes(),
        t_end: spec.cfg.t_end,
        levels,
    })
}
