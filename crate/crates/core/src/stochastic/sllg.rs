use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::field::{diff1, Grid1D, Vec3};
use crate::hashimoto::{closure_defect, reconstruct_frame, FrameField};
use crate::llg::{check_stepping, step_plan};
use crate::rotation::Frame;
use crate::seed::{derive, TAG_PATH};

use super::frame::rotate_node;
use super::noise::{NoiseFields, NoiseModel};
use super::she::{stochastic_heat_step, SheParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SllgConfig {
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    pub t_end: f64,
}

impl SllgConfig {
    pub fn validate(&self, g: &Grid1D) -> Result<()> {
        check_stepping(g, self.alpha, self.beta, self.dt, self.t_end, 1)
    }
}

/// One sample path of the construction. `noise[k]` drives the step from
/// `times[k]` to `times[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SllgPath {
    pub times: Vec<f64>,
    pub q: Vec<Vec<Complex64>>,
    pub frames: Vec<FrameField>,
    pub noise: Vec<NoiseFields>,
    /// Seam mismatch of the reconstructed frame at every time; empty on a line.
    pub closure_defect: Vec<f64>,
}

impl SllgPath {
    pub fn steps(&self) -> usize {
        self.noise.len()
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `dW̃` over step `k`, assembled with the frame at the start of the step.
    pub fn wtilde_increment(&self, k: usize) -> Vec<Vec3> {
        assemble_wtilde(&self.frames[k], &self.noise[k])
    }

    pub fn max_closure_defect(&self) -> f64 {
        self.closure_defect.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_orthonormality_defect(&self) -> f64 {
        self.frames
            .iter()
            .map(FrameField::max_orthonormality_defect)
            .fold(0.0, f64::max)
    }
}

/// `dW̃ = e dW² + (e×u) dW¹ + u dW³` node-wise.
pub fn assemble_wtilde(f: &FrameField, fields: &NoiseFields) -> Vec<Vec3> {
    (0..f.len())
        .map(|j| {
            let (u, e) = (f.u[j], f.e[j]);
            e * fields.dw[1][j] + e.cross(u) * fields.dw[0][j] + u * fields.dw[2][j]
        })
        .collect()
}

/// Time-generator coefficients `(p, C)` at the basepoint, where every
/// `∫_a^x` term vanishes.
fn basepoint_coeffs(q: &[Complex64], g: &Grid1D, alpha: f64, beta: f64) -> Result<(Complex64, f64)> {
    let a = g.basepoint();
    let qx = diff1(q, g)?;
    Ok((
        qx[a] * Complex64::new(alpha, beta),
        -0.5 * beta * q[a].norm_sqr(),
    ))
}

/// Builds a path: `q` follows the stochastic heat equation, the frame at
/// the basepoint follows the time equation with Heun-averaged coefficients,
/// and the full frame is rebuilt from `q` in space at every step.
pub fn run_sllg(
    q0: &[Complex64],
    g: &Grid1D,
    m: Vec3,
    e0: Vec3,
    cfg: &SllgConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SllgPath> {
    check_len(g.n(), q0.len())?;
    cfg.validate(g)?;
    let noise = noise.with_seed(seed);
    let (steps, dt) = step_plan(cfg.dt, cfg.t_end);
    let params = SheParams {
        alpha: cfg.alpha,
        beta: cfg.beta,
        dt,
    };
    let a = g.basepoint();
    let closure = |f: &FrameField, q: &[Complex64]| -> Result<Option<f64>> {
        if g.is_periodic() {
            closure_defect(f, q, g).map(Some)
        } else {
            Ok(None)
        }
    };

    let first = reconstruct_frame(q0, g, m, e0)?;
    let mut base = Frame::new(m, e0);
    let mut path = SllgPath {
        times: vec![0.0],
        q: vec![q0.to_vec()],
        frames: Vec::with_capacity(steps + 1),
        noise: Vec::with_capacity(steps),
        closure_defect: Vec::new(),
    };
    path.closure_defect.extend(closure(&first, q0)?);
    path.frames.push(first);

    for step in 0..steps {
        let fields = noise.noise_fields(&noise.sample_increments(dt, step as u64));
        let q = path.q.last().expect("path starts with q0");
        let next = stochastic_heat_step(q, g, params, &fields, step)?;

        let (p0, c0) = basepoint_coeffs(q, g, cfg.alpha, cfg.beta)?;
        let (p1, c1) = basepoint_coeffs(&next.q, g, cfg.alpha, cfg.beta)?;
        base = rotate_node(
            base,
            (p0 + p1) * 0.5,
            0.5 * (c0 + c1),
            fields.dw[0][a],
            fields.dw[1][a],
            0.0,
            dt,
        );
        let frames = reconstruct_frame(&next.q, g, base.u, base.e)?;
        path.closure_defect.extend(closure(&frames, &next.q)?);
        path.frames.push(frames);
        path.q.push(next.q);
        path.noise.push(fields);
        path.times.push((step + 1) as f64 * dt);
    }
    Ok(path)
}

/// Independent paths sharing initial data and configuration.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub grid: Grid1D,
    pub q0: Vec<Complex64>,
    pub m: Vec3,
    pub e0: Vec3,
    pub cfg: SllgConfig,
    pub noise: NoiseModel,
    pub paths: usize,
}

impl EnsembleSpec {
    /// Seed of path `i`, derived from the noise model's master seed.
    pub fn path_seed(&self, i: usize) -> u64 {
        derive(self.noise.master_seed(), TAG_PATH, i as u64)
    }
}

/// Runs every path in parallel and reduces each one with `f` as soon as it
/// is finished. Results come back in path order.
pub fn run_ensemble<R, F>(spec: &EnsembleSpec, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, &SllgPath) -> Result<R> + Sync,
{
    (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let path = run_sllg(
                &spec.q0,
                &spec.grid,
                spec.m,
                spec.e0,
                &spec.cfg,
                &spec.noise,
                spec.path_seed(i),
            )?;
            f(i, &path)
        })
        .collect()
}
