use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::field::{diff1, Domain, Grid1D};
use crate::hashimoto::space_generator;
use crate::heat::{check_blowup, heat_rk4_step, HeatConfig, HeatForm};
use crate::rotation::Rot3;
use crate::stochastic::{c_field, phase_increment, time_generator, NoiseFields};

use super::{loglog_slope, pairwise_orders, sci, text_table};

/// Space-time samples `q(t_k, x_j)` on a uniform time lattice, optionally
/// with the noise increments that drove each step.
#[derive(Debug, Clone, PartialEq)]
pub struct QPath {
    pub grid: Grid1D,
    pub dt: f64,
    pub states: Vec<Vec<Complex64>>,
    pub noise: Option<Vec<NoiseFields>>,
}

impl QPath {
    /// `q` held fixed in time.
    pub fn frozen(grid: Grid1D, q: Vec<Complex64>, dt: f64, steps: usize) -> Self {
        Self {
            grid,
            dt,
            states: vec![q; steps + 1],
            noise: None,
        }
    }

    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Every `sx`-th node and every `st`-th time; noise increments are
    /// summed over the merged steps.
    pub fn subsample(&self, sx: usize, st: usize) -> Result<QPath> {
        let n = self.grid.n();
        if sx == 0 || st == 0 {
            return Err(Error::Config("subsampling strides must be >= 1".into()));
        }
        let (domain, coarse_n) = match self.grid.domain() {
            Domain::Line { .. } if (n - 1).is_multiple_of(sx) => (self.grid.domain(), (n - 1) / sx + 1),
            Domain::Periodic { .. } if n.is_multiple_of(sx) => (self.grid.domain(), n / sx),
            _ => {
                return Err(Error::Config(format!(
                    "stride {sx} does not divide the grid of {n} nodes"
                )))
            }
        };
        if !self.grid.basepoint().is_multiple_of(sx) {
            return Err(Error::Config("basepoint is not a coarse node".into()));
        }
        if !self.steps().is_multiple_of(st) {
            return Err(Error::Config(format!(
                "time stride {st} does not divide {} steps",
                self.steps()
            )));
        }
        let grid = Grid1D::new(domain, coarse_n)?.with_basepoint(self.grid.basepoint() / sx)?;
        let pick = |v: &[f64]| -> Vec<f64> { v.iter().step_by(sx).copied().collect() };
        let states = self
            .states
            .iter()
            .step_by(st)
            .map(|q| q.iter().step_by(sx).copied().collect())
            .collect();
        let noise = self.noise.as_ref().map(|steps| {
            steps
                .chunks(st)
                .map(|chunk| {
                    let mut acc = NoiseFields::zero(n);
                    for f in chunk {
                        for (a, b) in acc.dw.iter_mut().zip(&f.dw) {
                            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        }
                        for (a, b) in acc.ddw.iter_mut().zip(&f.ddw) {
                            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                        }
                    }
                    NoiseFields {
                        dw: [pick(&acc.dw[0]), pick(&acc.dw[1]), pick(&acc.dw[2])],
                        ddw: [pick(&acc.ddw[0]), pick(&acc.ddw[1])],
                    }
                })
                .collect()
        });
        Ok(QPath {
            grid,
            dt: self.dt * st as f64,
            states,
            noise,
        })
    }
}

/// Deterministic heat flow from `q0`, recording every step.
pub fn heat_reference_path(
    q0: &[Complex64],
    g: &Grid1D,
    alpha: f64,
    beta: f64,
    dt: f64,
    steps: usize,
) -> Result<QPath> {
    check_len(g.n(), q0.len())?;
    HeatConfig {
        alpha,
        beta,
        dt,
        t_end: dt * steps as f64,
        output_stride: 1,
        form: HeatForm::Expanded,
    }
    .validate(g)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(q0.to_vec());
    for k in 1..=steps {
        let next = heat_rk4_step(&states[k - 1], g, alpha, beta, HeatForm::Expanded, dt)?;
        check_blowup(&next, k as f64 * dt, k)?;
        states.push(next);
    }
    Ok(QPath {
        grid: *g,
        dt,
        states,
        noise: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyStats {
    pub dx: f64,
    pub dt: f64,
    pub plaquettes: usize,
    /// Largest rotation angle of `P₁P₂ᵀ` over all plaquettes.
    pub max_defect: f64,
    pub mean_defect: f64,
}

/// Time coefficients `(p, C)` of one state.
fn coefficients(q: &[Complex64], g: &Grid1D, alpha: f64, beta: f64) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let scale = Complex64::new(alpha, beta);
    let p = diff1(q, g)?.into_iter().map(|z| z * scale).collect();
    Ok((p, c_field(q, g, alpha, beta)?.0))
}

/// For every plaquette `[x_j, x_{j+1}] × [t_k, t_{k+1}]`, composes the frame
/// propagators along the two edge paths (space then time, time then space)
/// and measures the angle of the mismatch. Space steps use the midpoint
/// `q`; time steps use trapezoid-averaged `(p, C)` plus the noise entries
/// when the path carries noise. The seam of a circle is skipped.
pub fn holonomy_defect(path: &QPath, alpha: f64, beta: f64) -> Result<HolonomyStats> {
    let g = &path.grid;
    let n = g.n();
    for q in &path.states {
        check_len(n, q.len())?;
    }
    let h = g.h();
    let coeffs = path
        .states
        .iter()
        .map(|q| coefficients(q, g, alpha, beta))
        .collect::<Result<Vec<_>>>()?;
    let mut max_defect = 0.0f64;
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 0..path.steps() {
        let (q0, q1) = (&path.states[k], &path.states[k + 1]);
        let ((p0, c0), (p1, c1)) = (&coeffs[k], &coeffs[k + 1]);
        let zero = vec![0.0; n];
        let (dw1, dw2, dpsi) = match &path.noise {
            Some(noise) => {
                let f = &noise[k];
                let mid: Vec<Complex64> = q0.iter().zip(q1).map(|(a, b)| (a + b) * 0.5).collect();
                let dpsi = phase_increment(&mid, g, &f.dw[0], &f.dw[1])?;
                (f.dw[0].clone(), f.dw[1].clone(), dpsi)
            }
            None => (zero.clone(), zero.clone(), zero),
        };
        let et: Vec<Rot3> = (0..n)
            .map(|j| {
                time_generator(
                    (p0[j] + p1[j]) * 0.5,
                    0.5 * (c0[j] + c1[j]),
                    dw1[j],
                    dw2[j],
                    dpsi[j],
                    path.dt,
                )
                .exp()
            })
            .collect();
        for j in 0..n - 1 {
            let ex0 = space_generator((q0[j] + q0[j + 1]) * 0.5, h).exp();
            let ex1 = space_generator((q1[j] + q1[j + 1]) * 0.5, h).exp();
            let first = et[j + 1].mul(&ex0);
            let second = ex1.mul(&et[j]);
            let d = first.mul(&second.transpose()).angle();
            max_defect = max_defect.max(d);
            sum += d;
            count += 1;
        }
    }
    Ok(HolonomyStats {
        dx: h,
        dt: path.dt,
        plaquettes: count,
        max_defect,
        mean_defect: if count > 0 { sum / count as f64 } else { 0.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyLevel {
    pub n: usize,
    pub stats: HolonomyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub label: String,
    /// Coarse to fine.
    pub levels: Vec<HolonomyLevel>,
    /// Orders of the max defect between consecutive levels, against `Δx`.
    pub orders: Vec<f64>,
    pub fitted_order: f64,
}

impl HolonomyReport {
    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .map(|l| {
                vec![
                    l.n.to_string(),
                    sci(l.stats.dx),
                    sci(l.stats.dt),
                    l.stats.plaquettes.to_string(),
                    sci(l.stats.max_defect),
                    sci(l.stats.mean_defect),
                ]
            })
            .collect();
        let mut out = format!("holonomy [{}]\n", self.label);
        out.push_str(&text_table(&["n", "dx", "dt", "plaquettes", "max", "mean"], &rows));
        let orders: Vec<String> = self.orders.iter().map(|o| format!("{o:.3}")).collect();
        out.push_str(&format!("orders [{}]  fitted {:.3}\n", orders.join(", "), self.fitted_order));
        out
    }
}

/// Defects on a sequence of paths, coarse to fine.
pub fn holonomy_study(label: &str, paths: &[QPath], alpha: f64, beta: f64) -> Result<HolonomyReport> {
    let levels = paths
        .iter()
        .map(|p| {
            Ok(HolonomyLevel {
                n: p.grid.n(),
                stats: holonomy_defect(p, alpha, beta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let dx: Vec<f64> = levels.iter().map(|l| l.stats.dx).collect();
    let err: Vec<f64> = levels.iter().map(|l| l.stats.max_defect).collect();
    Ok(HolonomyReport {
        label: label.to_string(),
        orders: pairwise_orders(&dx, &err),
        fitted_order: loglog_slope(&dx, &err),
        levels,
    })
}
