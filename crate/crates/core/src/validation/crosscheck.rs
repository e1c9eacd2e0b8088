use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid1D;
use crate::hashimoto::{transform, Regularization};
use crate::heat::{decay_monitor, heat_integrate, HeatConfig, HeatForm, DECAY_THRESHOLD};
use crate::initial::InitialData;
use crate::llg::{llg_integrate, stability_bound, step_plan, LLGConfig};

use super::{loglog_slope, pairwise_orders, sci, text_table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckSettings {
    pub alpha: f64,
    pub beta: f64,
    pub t_end: f64,
    /// Node counts, coarse to fine.
    pub refinements: Vec<usize>,
    /// Time step as a fraction of the stability bound.
    pub dt_fraction: f64,
    /// Approximate number of compared output times per level.
    pub samples: usize,
    pub regularization: Regularization,
}

impl CrossCheckSettings {
    pub fn new(alpha: f64, beta: f64, t_end: f64, refinements: Vec<usize>) -> Self {
        Self {
            alpha,
            beta,
            t_end,
            refinements,
            dt_fraction: 1.0,
            samples: 20,
            regularization: Regularization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckLevel {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    /// `max_t ‖H(u(t)) − e^{−iφ(t)} q(t)‖_∞`, with `φ(t)` the constant gauge
    /// phase that best aligns the two in `L²`.
    pub max_discrepancy: f64,
    /// Same, discrete `L²` norm.
    pub max_discrepancy_l2: f64,
    /// Without the gauge alignment.
    pub max_raw_discrepancy: f64,
    /// `φ(t_end)`: the gauge phase picked up by the heat side.
    pub final_gauge_phase: f64,
    /// Worst `max_{window}|q| / max|q|` over all compared times.
    pub worst_boundary_ratio: f64,
    pub monitor_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    pub alpha: f64,
    pub beta: f64,
    pub t_end: f64,
    /// Output times of the finest level.
    pub times: Vec<f64>,
    pub discrepancy_max: Vec<f64>,
    pub discrepancy_l2: Vec<f64>,
    pub raw_discrepancy_max: Vec<f64>,
    /// Sorted coarse to fine.
    pub levels: Vec<CrossCheckLevel>,
    /// Orders between consecutive levels, measured against `h`.
    pub orders: Vec<f64>,
    pub fitted_order: f64,
    /// Set when the decay monitor failed at any level; the equivalence claim
    /// is then suspended.
    pub monitor_flagged: bool,
}

impl CrossCheckReport {
    pub fn finest(&self) -> &CrossCheckLevel {
        self.levels.last().expect("at least one level")
    }

    pub fn to_text(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .map(|l| {
                vec![
                    l.n.to_string(),
                    sci(l.h),
                    sci(l.dt),
                    sci(l.max_discrepancy),
                    sci(l.max_discrepancy_l2),
                    sci(l.max_raw_discrepancy),
                    format!("{:.4}", l.final_gauge_phase),
                    if l.monitor_passed { "ok".into() } else { "FLAG".into() },
                ]
            })
            .collect();
        let mut out = format!(
            "crosscheck alpha={} beta={} t_end={}\n",
            self.alpha, self.beta, self.t_end
        );
        out.push_str(&text_table(
            &["n", "h", "dt", "max|Hu-q|", "max L2", "raw", "gauge", "monitor"],
            &rows,
        ));
        let orders: Vec<String> = self.orders.iter().map(|o| format!("{o:.3}")).collect();
        out.push_str(&format!(
            "orders [{}]  fitted {:.3}{}\n",
            orders.join(", "),
            self.fitted_order,
            if self.monitor_flagged {
                "  (decay monitor failed: equivalence suspended)"
            } else {
                ""
            }
        ));
        out
    }
}

struct LevelRun {
    level: CrossCheckLevel,
    times: Vec<f64>,
    inf: Vec<f64>,
    l2: Vec<f64>,
    raw: Vec<f64>,
}

fn run_level(init: &InitialData, g: &Grid1D, s: &CrossCheckSettings) -> Result<LevelRun> {
    let u0 = init.sample(g)?;
    let q0 = transform(&u0, g, s.regularization)?;
    let bound = stability_bound(g, s.alpha, s.beta);
    let dt = if s.t_end > 0.0 {
        (s.dt_fraction * bound).min(s.t_end)
    } else {
        s.dt_fraction * bound.min(1.0)
    };
    let (steps, _) = step_plan(dt, s.t_end);
    let stride = (steps / s.samples.max(1)).max(1);
    let llg = llg_integrate(
        &u0,
        g,
        &LLGConfig {
            alpha: s.alpha,
            beta: s.beta,
            dt,
            t_end: s.t_end,
            output_stride: stride,
            renormalize: true,
        },
    )?;
    let heat = heat_integrate(
        &q0,
        g,
        &HeatConfig {
            alpha: s.alpha,
            beta: s.beta,
            dt,
            t_end: s.t_end,
            output_stride: stride,
            form: HeatForm::Expanded,
        },
    )?;
    let weights = g.weights();
    let mut run = LevelRun {
        level: CrossCheckLevel {
            n: g.n(),
            h: g.h(),
            dt: step_plan(dt, s.t_end).1,
            max_discrepancy: 0.0,
            max_discrepancy_l2: 0.0,
            max_raw_discrepancy: 0.0,
            final_gauge_phase: 0.0,
            worst_boundary_ratio: 0.0,
            monitor_passed: true,
        },
        times: llg.times.clone(),
        inf: Vec::new(),
        l2: Vec::new(),
        raw: Vec::new(),
    };
    for (u, q) in llg.states.iter().zip(&heat.states) {
        let hu = transform(u, g, s.regularization)?;
        let mon = decay_monitor(q, g, DECAY_THRESHOLD)?;
        let ratio = if mon.global_max > 0.0 {
            mon.boundary_max / mon.global_max
        } else {
            0.0
        };
        run.level.worst_boundary_ratio = run.level.worst_boundary_ratio.max(ratio);
        run.level.monitor_passed &= mon.passed;
        // the one global phase that best aligns q with H(u) in L²
        let overlap: Complex64 = (0..g.n()).map(|j| hu[j] * q[j].conj() * weights[j]).sum();
        let gauge = if overlap.norm() > 0.0 { -overlap.arg() } else { 0.0 };
        let rot = Complex64::from_polar(1.0, -gauge);
        let mut inf = 0.0f64;
        let mut raw = 0.0f64;
        let mut l2 = 0.0;
        for j in 0..g.n() {
            let d = (hu[j] - q[j] * rot).norm();
            inf = inf.max(d);
            l2 += weights[j] * d * d;
            raw = raw.max((hu[j] - q[j]).norm());
        }
        run.inf.push(inf);
        run.l2.push(l2.sqrt());
        run.raw.push(raw);
        run.level.final_gauge_phase = gauge;
    }
    run.level.max_discrepancy = run.inf.iter().copied().fold(0.0, f64::max);
    run.level.max_discrepancy_l2 = run.l2.iter().copied().fold(0.0, f64::max);
    run.level.max_raw_discrepancy = run.raw.iter().copied().fold(0.0, f64::max);
    Ok(run)
}

/// Runs the LLG flow from `init` and the heat flow from its transform on
/// every refinement of `g`, and compares `H(u(t))` with `q(t)`.
pub fn crosscheck_deterministic(
    init: &InitialData,
    g: &Grid1D,
    settings: &CrossCheckSettings,
) -> Result<CrossCheckReport> {
    if settings.refinements.is_empty() {
        return Err(Error::Config("crosscheck needs at least one refinement".into()));
    }
    let mut refinements = settings.refinements.clone();
    refinements.sort_unstable();
    let mut runs = Vec::with_capacity(refinements.len());
    for &n in &refinements {
        runs.push(run_level(init, &g.refined(n)?, settings)?);
    }
    let hs: Vec<f64> = runs.iter().map(|r| r.level.h).collect();
    let errs: Vec<f64> = runs.iter().map(|r| r.level.max_discrepancy).collect();
    let finest = runs.pop().expect("non-empty");
    let mut levels: Vec<CrossCheckLevel> = runs.into_iter().map(|r| r.level).collect();
    let monitor_flagged = levels.iter().any(|l| !l.monitor_passed) || !finest.level.monitor_passed;
    levels.push(finest.level);
    Ok(CrossCheckReport {
        alpha: settings.alpha,
        beta: settings.beta,
        t_end: settings.t_end,
        times: finest.times,
        discrepancy_max: finest.inf,
        discrepancy_l2: finest.l2,
        raw_discrepancy_max: finest.raw,
        levels,
        orders: pairwise_orders(&hs, &errs),
        fitted_order: loglog_slope(&hs, &errs),
        monitor_flagged,
    })
}
