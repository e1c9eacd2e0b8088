use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{diff1, Grid1D, SphereField};
use crate::hashimoto::Regularization;

use super::{sci, text_table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    /// `max |lhs − rhs|` over the evaluated nodes.
    pub max_abs: f64,
    /// `max_abs / max(|lhs| + |rhs|)`.
    pub max_rel: f64,
    /// `max_abs / h²`.
    pub h2_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: usize,
    pub h: f64,
    pub evaluated_nodes: usize,
    /// No node has `Θ > ε`; nothing was evaluated.
    pub skipped: bool,
    pub residuals: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.residuals.iter().find(|r| r.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "identities n={} h={} nodes={}{}\n",
            self.n,
            sci(self.h),
            self.evaluated_nodes,
            if self.skipped { " (skipped: curvature vanishes everywhere)" } else { "" }
        );
        let rows: Vec<Vec<String>> = self
            .residuals
            .iter()
            .map(|r| vec![r.name.clone(), sci(r.max_abs), sci(r.max_rel), sci(r.h2_constant)])
            .collect();
        out.push_str(&text_table(&["identity", "max abs", "max rel", "abs/h^2"], &rows));
        out
    }
}

pub const LAGRANGE: &str = "lagrange";
pub const SECOND_DERIVATIVE: &str = "second_derivative_norm";
pub const THIRD_DERIVATIVE: &str = "third_derivative_projection";
pub const RATIO: &str = "ratio";

/// Evaluates, node-wise where `Θ > ε`,
///
/// ```text
/// |u_x|²|u_xx|² = |u_x×u_xx|² + ⟨u_x,u_xx⟩²
/// |u_xx|²       = Θ⁴ + Θ_x² + η²Θ²
/// ⟨u, u_xxx⟩    = −3ΘΘ_x
/// (Θ_x² − |u×u_xx|²)/Θ = −η²Θ
/// ```
///
/// Every derivative is an iterated first difference, so a great circle
/// satisfies all four to round-off. On a line the two nodes at each end are
/// skipped, since iterated one-sided stencils lose accuracy there.
pub fn identity_suite(u: &SphereField, g: &Grid1D) -> Result<IdentityReport> {
    let u = u.values();
    let ux = diff1(u, g)?;
    let uxx = diff1(&ux, g)?;
    let uxxx = diff1(&uxx, g)?;
    let theta: Vec<f64> = ux.iter().map(|v| v.norm()).collect();
    let theta_x = diff1(&theta, g)?;
    let eps = Regularization::default().resolve(&theta);
    let n = g.n();
    let range = if g.is_periodic() { 0..n } else { 2..n.saturating_sub(2) };
    let nodes: Vec<usize> = range.filter(|&j| theta[j] > eps).collect();

    let mut acc = [(0.0f64, 0.0f64); 4];
    for &j in &nodes {
        let (a, b) = (ux[j], uxx[j]);
        let th = theta[j];
        let eta = u[j].cross(a).dot(b) / (th * th);
        let pairs = [
            (a.norm_sq() * b.norm_sq(), a.cross(b).norm_sq() + a.dot(b).powi(2)),
            (
                b.norm_sq(),
                th.powi(4) + theta_x[j].powi(2) + eta * eta * th * th,
            ),
            (u[j].dot(uxxx[j]), -3.0 * th * theta_x[j]),
            (
                (theta_x[j].powi(2) - u[j].cross(b).norm_sq()) / th,
                -eta * eta * th,
            ),
        ];
        for (k, (lhs, rhs)) in pairs.iter().enumerate() {
            acc[k].0 = acc[k].0.max((lhs - rhs).abs());
            acc[k].1 = acc[k].1.max(lhs.abs() + rhs.abs());
        }
    }
    let h2 = g.h() * g.h();
    let residuals = [LAGRANGE, SECOND_DERIVATIVE, THIRD_DERIVATIVE, RATIO]
        .iter()
        .zip(acc)
        .map(|(name, (abs, scale))| IdentityResidual {
            name: name.to_string(),
            max_abs: abs,
            max_rel: if scale > 0.0 { abs / scale } else { 0.0 },
            h2_constant: abs / h2,
        })
        .collect();
    Ok(IdentityReport {
        n,
        h: g.h(),
        evaluated_nodes: nodes.len(),
        skipped: nodes.is_empty(),
        residuals,
    })
}
