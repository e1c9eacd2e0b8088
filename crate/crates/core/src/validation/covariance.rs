//! Second moments of the assembled noise `W̃_t` tested against pairs of
//! vector fields, compared with the frame-projected covariation formula
//!
//! ```text
//! E[⟨W̃_t, φ⟩⟨W̃_t, ψ⟩] = Σ_l c_l² ∫_0^t E[ Σ_F ⟨φ·F, σ^l⟩⟨ψ·F, σ^l⟩ ] ds
//! ```
//!
//! where `F` runs over `e`, `e×u` and `u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{inner_real, inner_vec3, Grid1D, Vec3};
use crate::hashimoto::FrameField;
use crate::rotation::Frame;
use crate::seed::{derive, TAG_PATH};
use crate::stochastic::{assemble_wtilde, run_ensemble, EnsembleSpec, NoiseFields, NoiseModel};

use super::{mean_stderr, sci, text_table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPair {
    pub label: String,
    pub phi: Vec<Vec3>,
    pub psi: Vec<Vec3>,
}

impl TestPair {
    pub fn new(label: impl Into<String>, phi: Vec<Vec3>, psi: Vec<Vec3>) -> Self {
        Self {
            label: label.into(),
            phi,
            psi,
        }
    }

    fn check(&self, g: &Grid1D) -> Result<()> {
        check_len(g.n(), self.phi.len())?;
        check_len(g.n(), self.psi.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub label: String,
    /// Sample mean of `⟨W̃_t, φ⟩⟨W̃_t, ψ⟩`.
    pub monte_carlo: f64,
    /// 3σ half-width of `monte_carlo`.
    pub halfwidth: f64,
    /// Formula value. Ensemble-averaged unless the frame is frozen.
    pub formula: f64,
    pub formula_halfwidth: f64,
    /// Mean of the per-path difference between the two sides.
    pub difference: f64,
    pub difference_halfwidth: f64,
    /// `|difference| ≤ difference_halfwidth`.
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub t: f64,
    pub paths: usize,
    pub modes: usize,
    pub frozen_frame: bool,
    pub entries: Vec<CovarianceEntry>,
}

impl CovarianceReport {
    pub fn all_agree(&self) -> bool {
        self.entries.iter().all(|e| e.agree)
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|e| {
                vec![
                    e.label.clone(),
                    sci(e.monte_carlo),
                    sci(e.halfwidth),
                    sci(e.formula),
                    sci(e.difference),
                    sci(e.difference_halfwidth),
                    if e.agree { "ok".into() } else { "MISMATCH".into() },
                ]
            })
            .collect();
        let mut out = format!(
            "covariance t={} paths={} L={}{}\n",
            self.t,
            self.paths,
            self.modes,
            if self.frozen_frame { " (frozen frame)" } else { "" }
        );
        out.push_str(&text_table(
            &["pair", "monte carlo", "±3σ", "formula", "difference", "±3σ", "3 sigma"],
            &rows,
        ));
        out
    }
}

/// Per-step density of the formula for one frame field.
fn formula_density(f: &FrameField, model: &NoiseModel, g: &Grid1D, pair: &TestPair) -> Result<f64> {
    let n = g.n();
    let w = f.w();
    let dirs: [&[Vec3]; 3] = [&f.e, &w, &f.u];
    let mut total = 0.0;
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for dir in dirs {
        for j in 0..n {
            a[j] = pair.phi[j].dot(dir[j]);
            b[j] = pair.psi[j].dot(dir[j]);
        }
        for (l, &c) in model.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let s = model.basis(l + 1);
            total += c * c * inner_real(&a, s, g)? * inner_real(&b, s, g)?;
        }
    }
    Ok(total)
}

/// One path's contribution: `(⟨W̃_t, φ⟩⟨W̃_t, ψ⟩, ∫_0^t density ds)` per
/// pair. `W̃` is assembled from the frame at the start of every step, which
/// makes the two sides equal in expectation for every `dt`.
pub fn covariance_sample<'a>(
    frame_at: impl Fn(usize) -> &'a FrameField,
    noise: &[NoiseFields],
    model: &NoiseModel,
    g: &Grid1D,
    dt: f64,
    pairs: &[TestPair],
) -> Result<Vec<(f64, f64)>> {
    let mut wt = vec![Vec3::ZERO; g.n()];
    let mut integral = vec![0.0; pairs.len()];
    for (k, fields) in noise.iter().enumerate() {
        let f = frame_at(k);
        check_len(g.n(), f.len())?;
        for (dst, inc) in wt.iter_mut().zip(assemble_wtilde(f, fields)) {
            *dst += inc;
        }
        for (acc, pair) in integral.iter_mut().zip(pairs) {
            *acc += dt * formula_density(f, model, g, pair)?;
        }
    }
    pairs
        .iter()
        .zip(integral)
        .map(|(pair, int)| Ok((inner_vec3(&wt, &pair.phi, g)? * inner_vec3(&wt, &pair.psi, g)?, int)))
        .collect()
}

fn summarize(pairs: &[TestPair], samples: &[Vec<(f64, f64)>], exact: Option<&[f64]>) -> Vec<CovarianceEntry> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let xy: Vec<f64> = samples.iter().map(|s| s[i].0).collect();
            let (mc, mc_se) = mean_stderr(&xy);
            let (formula, formula_se, diff, diff_se) = match exact {
                Some(v) => (v[i], 0.0, mc - v[i], mc_se),
                None => {
                    let fs: Vec<f64> = samples.iter().map(|s| s[i].1).collect();
                    let ds: Vec<f64> = samples.iter().map(|s| s[i].0 - s[i].1).collect();
                    let (f, f_se) = mean_stderr(&fs);
                    let (d, d_se) = mean_stderr(&ds);
                    (f, f_se, d, d_se)
                }
            };
            CovarianceEntry {
                label: pair.label.clone(),
                monte_carlo: mc,
                halfwidth: 3.0 * mc_se,
                formula,
                formula_halfwidth: 3.0 * formula_se,
                difference: diff,
                difference_halfwidth: 3.0 * diff_se,
                agree: diff.abs() <= 3.0 * diff_se,
            }
        })
        .collect()
}

/// Monte Carlo against the formula along the ensemble's SLLG paths at
/// `t = spec.cfg.t_end`. Agreement is judged on the per-path difference of
/// the two sides.
pub fn covariance_check(spec: &EnsembleSpec, pairs: &[TestPair]) -> Result<CovarianceReport> {
    let g = &spec.grid;
    for p in pairs {
        p.check(g)?;
    }
    if spec.paths < 2 {
        return Err(Error::Config("covariance needs at least two paths".into()));
    }
    let samples = run_ensemble(spec, |_, path| {
        covariance_sample(|k| &path.frames[k], &path.noise, &spec.noise, g, path.dt(), pairs)
    })?;
    Ok(CovarianceReport {
        t: spec.cfg.t_end,
        paths: spec.paths,
        modes: spec.noise.modes(),
        frozen_frame: false,
        entries: summarize(pairs, &samples, None),
    })
}

/// Closed form of the formula when every node carries the same frame.
pub fn frozen_frame_covariance(frame: Frame, model: &NoiseModel, g: &Grid1D, t: f64, pair: &TestPair) -> Result<f64> {
    pair.check(g)?;
    let f = FrameField::from_frames(&vec![frame; g.n()]);
    Ok(t * formula_density(&f, model, g, pair)?)
}

/// Monte Carlo of `W̃` assembled with a fixed frame, against the closed form.
pub fn frozen_frame_check(
    frame: Frame,
    model: &NoiseModel,
    g: &Grid1D,
    dt: f64,
    t: f64,
    paths: usize,
    pairs: &[TestPair],
) -> Result<CovarianceReport> {
    if !(dt > 0.0 && t > 0.0 && dt.is_finite() && t.is_finite()) {
        return Err(Error::Config(format!("need dt > 0 and t > 0, got dt = {dt}, t = {t}")));
    }
    if paths < 2 {
        return Err(Error::Config("covariance needs at least two paths".into()));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let dt = t / steps as f64;
    let exact = pairs
        .iter()
        .map(|p| frozen_frame_covariance(frame, model, g, t, p))
        .collect::<Result<Vec<_>>>()?;
    let field = FrameField::from_frames(&vec![frame; g.n()]);
    let samples = (0..paths)
        .into_par_iter()
        .map(|i| {
            let m = model.with_seed(derive(model.master_seed(), TAG_PATH, i as u64));
            let noise: Vec<NoiseFields> = (0..steps)
                .map(|k| m.noise_fields(&m.sample_increments(dt, k as u64)))
                .collect();
            covariance_sample(|_| &field, &noise, model, g, dt, pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CovarianceReport {
        t,
        paths,
        modes: model.modes(),
        frozen_frame: true,
        entries: summarize(pairs, &samples, Some(&exact)),
    })
}
