//! Executable checks of the correspondence between the LLG flow, the heat
//! equation for `q` and the stochastic construction, with reports that
//! serialize to JSON and render as aligned text.

mod covariance;
mod crosscheck;
mod holonomy;
mod identities;
mod weak;

pub use covariance::{
    covariance_check, covariance_sample, frozen_frame_check, frozen_frame_covariance, CovarianceEntry,
    CovarianceReport, TestPair,
};
pub use crosscheck::{crosscheck_deterministic, CrossCheckLevel, CrossCheckReport, CrossCheckSettings};
pub use holonomy::{
    heat_reference_path, holonomy_defect, holonomy_study, HolonomyLevel, HolonomyReport,
    HolonomyStats, QPath,
};
pub use identities::{
    identity_suite, IdentityReport, IdentityResidual, LAGRANGE, RATIO, SECOND_DERIVATIVE,
    THIRD_DERIVATIVE,
};
pub use weak::{
    sllg_weak_residual, weak_residual_path, StratonovichRule, WeakResidualLevel, WeakResidualReport,
    WeakResidualStats,
};

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Observed orders `log(e_k/e_{k+1}) / log(x_k/x_{k+1})` between
/// consecutive levels.
pub fn pairwise_orders(xs: &[f64], errs: &[f64]) -> Vec<f64> {
    xs.windows(2)
        .zip(errs.windows(2))
        .map(|(x, e)| (e[0] / e[1]).ln() / (x[0] / x[1]).ln())
        .collect()
}

/// Mean and standard error of a sample.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aligned plain-text table.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut width: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for r in rows {
        for (c, cell) in r.iter().enumerate().take(cols) {
            width[c] = width[c].max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{:>w$}", s, w = width[c]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(headers.to_vec());
    out.push('\n');
    out.push_str(&width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in rows {
        out.push('\n');
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out.push('\n');
    out
}

pub(crate) fn sci(v: f64) -> String {
    format!("{v:.3e}")
}
