use hasimoto_core::hashimoto::{gauge_frame, transform, Regularization};
use hasimoto_core::heat::{decay_monitor, heat_integrate, mass, HeatConfig, HeatForm, DECAY_THRESHOLD};
use hasimoto_core::llg::{exchange_energy, llg_integrate, LLGConfig};
use hasimoto_core::stochastic::{run_sllg, EnsembleSpec, NoiseModel, SllgConfig};
use hasimoto_core::validation::{
    covariance_check, crosscheck_deterministic, heat_reference_path, holonomy_study, identity_suite,
    pairwise_orders, sllg_weak_residual, CrossCheckSettings, QPath, TestPair,
};
use hasimoto_core::{Complex64, Grid1D, SphereField, Vec3};
use serde_json::{json, Value};

use crate::catalog::ExperimentKind;
use crate::config::{ExperimentConfig, HOLONOMY_COARSE_STEPS, HOLONOMY_STRIDES};
use crate::error::{CliError, Result};
use crate::output::{Cell, Monitors, Series};

/// What an experiment hands back for writing.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub series: Vec<Series>,
    pub report: Value,
    pub monitors: Monitors,
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|source| CliError::Json { what: "report", source })
}

fn bump(x: f64, c: f64, r: f64) -> f64 {
    let s = (x - c) / r;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn window(g: &Grid1D) -> (f64, f64) {
    (g.x(0) + 0.5 * g.extent(), g.extent() / 3.0)
}

/// Smooth compactly supported test fields along each axis, centred in the
/// domain.
pub fn axis_test_functions(g: &Grid1D) -> Vec<(String, Vec<Vec3>)> {
    let (c, r) = window(g);
    let xs = g.coords();
    [("e1", Vec3::E1), ("e2", Vec3::E2), ("e3", Vec3::E3)]
        .into_iter()
        .map(|(name, axis)| (name.to_string(), xs.iter().map(|&x| axis * bump(x, c, r)).collect()))
        .collect()
}

/// Three pairs of smooth fields: a diagonal pair, a mixed pair with
/// disjoint directions and a pair without compact support.
pub fn covariance_pairs(g: &Grid1D) -> Vec<TestPair> {
    let (c, r) = window(g);
    let xs = g.coords();
    let k = std::f64::consts::TAU / g.extent();
    let a: Vec<Vec3> = xs.iter().map(|&x| Vec3::E1 * bump(x, c, r)).collect();
    let b: Vec<Vec3> = xs
        .iter()
        .map(|&x| Vec3::new(0.0, (k * x).cos(), 0.5) * bump(x, c - 0.25 * r, 0.75 * r))
        .collect();
    let d: Vec<Vec3> = xs
        .iter()
        .map(|&x| Vec3::new((k * x).sin(), 1.0, (2.0 * k * x).cos()))
        .collect();
    vec![
        TestPair::new("diagonal", a.clone(), a.clone()),
        TestPair::new("mixed", a, b.clone()),
        TestPair::new("global", d, b),
    ]
}

/// `q0 = H(u0)` together with the basepoint frame of the gauge. On a map
/// with vanishing curvature at the basepoint any normal direction serves.
fn initial_pair(u0: &SphereField, g: &Grid1D) -> Result<(Vec<Complex64>, Vec3, Vec3)> {
    let q0 = transform(u0, g, Regularization::default())?;
    let frame = match gauge_frame(u0, g) {
        Ok(f) => f,
        Err(_) => {
            let m = u0.values()[g.basepoint()];
            let trial = if m.0[0].abs() < 0.9 { Vec3::E1 } else { Vec3::E2 };
            hasimoto_core::rotation::Frame::new(m, (trial - m * m.dot(trial)).normalized())
        }
    };
    Ok((q0, frame.u, frame.e))
}

fn node_rows(series: &mut Series, t: f64, g: &Grid1D, cols: impl Fn(usize) -> Vec<f64>) {
    for j in 0..g.n() {
        let mut row: Vec<Cell> = vec![t.into(), j.into(), g.x(j).into()];
        row.extend(cols(j).into_iter().map(Cell::Float));
        series.push(row);
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        ExperimentKind::Llg => llg(cfg),
        ExperimentKind::Heat => heat(cfg),
        ExperimentKind::Crosscheck => crosscheck(cfg),
        ExperimentKind::Identities => identities(cfg),
        ExperimentKind::Sllg => sllg(cfg),
        ExperimentKind::Holonomy => holonomy(cfg),
        ExperimentKind::Covariance => covariance(cfg),
    }
}

fn llg(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let u0 = cfg.init.initial_data().sample(&g)?;
    let run = LLGConfig {
        alpha: cfg.alpha,
        beta: cfg.beta,
        dt: cfg.time_step(&g),
        t_end: cfg.t_end,
        output_stride: cfg.stride,
        renormalize: true,
    };
    let traj = llg_integrate(&u0, &g, &run)?;
    let mut series = Series::new("u", &["t", "j", "x", "u1", "u2", "u3"]);
    let mut energy = Series::new("energy", &["t", "exchange_energy"]);
    for (t, u) in traj.times.iter().zip(&traj.states) {
        node_rows(&mut series, *t, &g, |j| u.values()[j].0.to_vec());
        energy.push(vec![(*t).into(), exchange_energy(u, &g)?.into()]);
    }
    let report = json!({
        "n": g.n(),
        "h": g.h(),
        "dt": run.dt,
        "t_end": cfg.t_end,
        "samples": traj.len(),
        "initial_energy": exchange_energy(&u0, &g)?,
        "final_energy": exchange_energy(traj.last(), &g)?,
        "final_norm_defect": traj.last().max_norm_defect(),
    });
    Ok(Outcome {
        series: vec![series, energy],
        report,
        monitors: Monitors::default(),
    })
}

fn heat(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let u0 = cfg.init.initial_data().sample(&g)?;
    let (q0, _, _) = initial_pair(&u0, &g)?;
    let run = HeatConfig {
        alpha: cfg.alpha,
        beta: cfg.beta,
        dt: cfg.time_step(&g),
        t_end: cfg.t_end,
        output_stride: cfg.stride,
        form: HeatForm::Expanded,
    };
    let traj = heat_integrate(&q0, &g, &run)?;
    let mut series = Series::new("q", &["t", "j", "x", "re", "im"]);
    let mut decay = false;
    let mut masses = Series::new("mass", &["t", "mass", "boundary_ratio"]);
    for (t, q) in traj.times.iter().zip(&traj.states) {
        node_rows(&mut series, *t, &g, |j| vec![q[j].re, q[j].im]);
        let mon = decay_monitor(q, &g, DECAY_THRESHOLD)?;
        decay |= !mon.passed;
        let ratio = if mon.global_max > 0.0 { mon.boundary_max / mon.global_max } else { 0.0 };
        masses.push(vec![(*t).into(), mass(q, &g).into(), ratio.into()]);
    }
    let report = json!({
        "n": g.n(),
        "h": g.h(),
        "dt": run.dt,
        "t_end": cfg.t_end,
        "samples": traj.len(),
        "initial_mass": mass(&q0, &g),
        "final_mass": mass(traj.last(), &g),
        "decay_monitor_flagged": decay,
    });
    Ok(Outcome {
        series: vec![series, masses],
        report,
        monitors: Monitors {
            decay,
            ..Monitors::default()
        },
    })
}

fn crosscheck(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let mut settings = CrossCheckSettings::new(cfg.alpha, cfg.beta, cfg.t_end, cfg.refinements.clone());
    settings.dt_fraction = cfg.dt_fraction;
    let report = crosscheck_deterministic(&cfg.init.initial_data(), &g, &settings)?;
    let mut series = Series::new(
        "discrepancy",
        &["t", "max_discrepancy", "l2_discrepancy", "raw_max_discrepancy"],
    );
    for i in 0..report.times.len() {
        series.push(vec![
            report.times[i].into(),
            report.discrepancy_max[i].into(),
            report.discrepancy_l2[i].into(),
            report.raw_discrepancy_max[i].into(),
        ]);
    }
    let mut levels = Series::new("levels", &["n", "h", "dt", "max_discrepancy", "final_gauge_phase"]);
    for l in &report.levels {
        levels.push(vec![
            l.n.into(),
            l.h.into(),
            l.dt.into(),
            l.max_discrepancy.into(),
            l.final_gauge_phase.into(),
        ]);
    }
    Ok(Outcome {
        series: vec![series, levels],
        monitors: Monitors {
            decay: report.monitor_flagged,
            ..Monitors::default()
        },
        report: to_value(&report)?,
    })
}

fn identities(cfg: &ExperimentConfig) -> Result<Outcome> {
    let base = cfg.grid.build()?;
    let init = cfg.init.initial_data();
    let mut reports = Vec::new();
    let mut series = Series::new("identities", &["n", "h", "identity", "max_abs", "max_rel", "h2_constant"]);
    for &n in &cfg.refinements {
        let g = base.refined(n)?;
        let u = init.sample(&g)?;
        let r = identity_suite(&u, &g)?;
        for res in &r.residuals {
            series.push(vec![
                n.into(),
                g.h().into(),
                res.name.clone().into(),
                res.max_abs.into(),
                res.max_rel.into(),
                res.h2_constant.into(),
            ]);
        }
        reports.push(r);
    }
    let hs: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let mut orders = serde_json::Map::new();
    if let Some(first) = reports.first() {
        for res in &first.residuals {
            let errs: Vec<f64> = reports
                .iter()
                .map(|r| r.get(&res.name).map(|x| x.max_abs).unwrap_or(f64::NAN))
                .collect();
            orders.insert(res.name.clone(), to_value(&pairwise_orders(&hs, &errs))?);
        }
    }
    Ok(Outcome {
        series: vec![series],
        report: json!({ "levels": to_value(&reports)?, "orders": orders }),
        monitors: Monitors::default(),
    })
}

fn noise_model(cfg: &ExperimentConfig, g: &Grid1D) -> Result<NoiseModel> {
    Ok(NoiseModel::new(g, cfg.noise.modes, cfg.noise.profile, cfg.noise.amplitude, cfg.seed)?
        .with_derivative(cfg.noise.derivative))
}

fn ensemble(cfg: &ExperimentConfig, g: &Grid1D) -> Result<EnsembleSpec> {
    let u0 = cfg.init.initial_data().sample(g)?;
    let (q0, m, e0) = initial_pair(&u0, g)?;
    let spec = EnsembleSpec {
        grid: *g,
        q0,
        m,
        e0,
        cfg: SllgConfig {
            alpha: cfg.alpha,
            beta: cfg.beta,
            dt: cfg.time_step(g),
            t_end: cfg.t_end,
        },
        noise: noise_model(cfg, g)?,
        paths: cfg.paths,
    };
    spec.cfg.validate(g)?;
    Ok(spec)
}

fn sllg(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let spec = ensemble(cfg, &g)?;
    let path = run_sllg(&spec.q0, &g, spec.m, spec.e0, &spec.cfg, &spec.noise, spec.path_seed(0))?;
    let mut series = Series::new("path", &["t", "j", "x", "u1", "u2", "u3", "e1", "e2", "e3"]);
    let last = path.steps();
    for (k, t) in path.times.iter().enumerate() {
        if k % cfg.stride != 0 && k != last {
            continue;
        }
        let f = &path.frames[k];
        node_rows(&mut series, *t, &g, |j| {
            let (u, e) = (f.u[j].0, f.e[j].0);
            vec![u[0], u[1], u[2], e[0], e[1], e[2]]
        });
    }
    let dts: Vec<f64> = (0..cfg.levels).map(|l| spec.cfg.dt / f64::powi(2.0, l as i32)).collect();
    let weak = sllg_weak_residual(&spec, &dts, &axis_test_functions(&g), cfg.rule)?;
    let mut ws = Series::new("weak", &["dt", "phi", "mean", "stderr", "rms", "consistent"]);
    for l in &weak.levels {
        for s in &l.stats {
            ws.push(vec![
                l.dt.into(),
                s.label.clone().into(),
                s.mean.into(),
                s.stderr.into(),
                s.rms.into(),
                s.consistent.into(),
            ]);
        }
    }
    let closure = weak
        .levels
        .iter()
        .map(|l| l.max_closure_defect)
        .chain([path.max_closure_defect()])
        .fold(0.0, f64::max);
    let report = json!({
        "path": {
            "steps": path.steps(),
            "dt": path.dt(),
            "max_orthonormality_defect": path.max_orthonormality_defect(),
            "max_closure_defect": path.max_closure_defect(),
        },
        "weak_residual": to_value(&weak)?,
    });
    Ok(Outcome {
        series: vec![series, ws],
        report,
        monitors: Monitors {
            closure: g.is_periodic().then_some(closure),
            ..Monitors::default()
        },
    })
}

fn holonomy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let u0 = cfg.init.initial_data().sample(&g)?;
    let (q0, _, _) = initial_pair(&u0, &g)?;
    let dt = cfg.time_step(&g);
    let steps = HOLONOMY_STRIDES[0] * cfg.time_ratio * HOLONOMY_COARSE_STEPS;
    let reference = heat_reference_path(&q0, &g, cfg.alpha, cfg.beta, dt, steps)?;
    let frozen = QPath::frozen(g, q0, dt, steps);
    let levels = |p: &QPath| -> Result<Vec<QPath>> {
        HOLONOMY_STRIDES
            .iter()
            .map(|&s| Ok(p.subsample(s, s * cfg.time_ratio)?))
            .collect()
    };
    let positive = holonomy_study("heat", &levels(&reference)?, cfg.alpha, cfg.beta)?;
    let negative = holonomy_study("frozen", &levels(&frozen)?, cfg.alpha, cfg.beta)?;
    let mut series = Series::new(
        "holonomy",
        &["control", "n", "dx", "dt", "plaquettes", "max_defect", "mean_defect"],
    );
    for r in [&positive, &negative] {
        for l in &r.levels {
            series.push(vec![
                r.label.clone().into(),
                l.n.into(),
                l.stats.dx.into(),
                l.stats.dt.into(),
                l.stats.plaquettes.into(),
                l.stats.max_defect.into(),
                l.stats.mean_defect.into(),
            ]);
        }
    }
    let report = json!({
        "positive": to_value(&positive)?,
        "negative": to_value(&negative)?,
        "order_gap": positive.fitted_order - negative.fitted_order,
    });
    Ok(Outcome {
        series: vec![series],
        report,
        monitors: Monitors::default(),
    })
}

fn covariance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = cfg.grid.build()?;
    let spec = ensemble(cfg, &g)?;
    let report = covariance_check(&spec, &covariance_pairs(&g))?;
    let mut series = Series::new(
        "covariance",
        &["pair", "monte_carlo", "halfwidth", "formula", "difference", "difference_halfwidth", "agree"],
    );
    for e in &report.entries {
        series.push(vec![
            e.label.clone().into(),
            e.monte_carlo.into(),
            e.halfwidth.into(),
            e.formula.into(),
            e.difference.into(),
            e.difference_halfwidth.into(),
            e.agree.into(),
        ]);
    }
    Ok(Outcome {
        series: vec![series],
        report: to_value(&report)?,
        monitors: Monitors::default(),
    })
}
