//! The experiment catalog and per-experiment defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Llg,
    Heat,
    Crosscheck,
    Identities,
    Sllg,
    Holonomy,
    Covariance,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::Llg,
        ExperimentKind::Heat,
        ExperimentKind::Crosscheck,
        ExperimentKind::Identities,
        ExperimentKind::Sllg,
        ExperimentKind::Holonomy,
        ExperimentKind::Covariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Llg => "llg",
            ExperimentKind::Heat => "heat",
            ExperimentKind::Crosscheck => "crosscheck",
            ExperimentKind::Identities => "identities",
            ExperimentKind::Sllg => "sllg",
            ExperimentKind::Holonomy => "holonomy",
            ExperimentKind::Covariance => "covariance",
        }
    }

    /// Module of `hasimoto-core` that produces the experiment's verdict.
    pub fn validator(self) -> &'static str {
        match self {
            ExperimentKind::Llg => "llg",
            ExperimentKind::Heat => "heat",
            ExperimentKind::Crosscheck => "validation::crosscheck",
            ExperimentKind::Identities => "validation::identities",
            ExperimentKind::Sllg => "validation::weak",
            ExperimentKind::Holonomy => "validation::holonomy",
            ExperimentKind::Covariance => "validation::covariance",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Llg => "deterministic LLG flow of the initial map",
            ExperimentKind::Heat => "heat flow of the transformed initial data",
            ExperimentKind::Crosscheck => "transform of the LLG flow against the heat flow, under refinement",
            ExperimentKind::Identities => "curvature identities of the initial map, under refinement",
            ExperimentKind::Sllg => "stochastic construction: one sample path and weak residuals",
            ExperimentKind::Holonomy => "plaquette defect of heat solutions against frozen data",
            ExperimentKind::Covariance => "Monte Carlo covariance of the assembled noise against the formula",
        }
    }

    /// Defaults layered over [`COMMON_DEFAULTS`].
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            ExperimentKind::Llg | ExperimentKind::Heat => &[
                ("domain", "line"),
                ("x_min", "-18"),
                ("x_max", "18"),
                ("n", "256"),
                ("t_end", "0.1"),
                ("stride", "100"),
                ("init", "twist"),
            ],
            ExperimentKind::Crosscheck => &[
                ("domain", "line"),
                ("x_min", "-18"),
                ("x_max", "18"),
                ("n", "128"),
                ("refinements", "128,256,512"),
                ("t_end", "0.1"),
                ("init", "twist"),
            ],
            ExperimentKind::Identities => &[
                ("domain", "line"),
                ("x_min", "-10"),
                ("x_max", "10"),
                ("n", "129"),
                ("refinements", "129,257,513"),
                ("init", "twist"),
            ],
            ExperimentKind::Sllg => &[
                ("domain", "periodic"),
                ("n", "64"),
                ("modes", "4"),
                ("paths", "200"),
                ("dt", "0.0016"),
                ("t_end", "0.1"),
                ("stride", "10"),
                ("levels", "3"),
                ("derivative", "consistent"),
                ("init", "great_circle"),
                ("k", "0"),
            ],
            ExperimentKind::Holonomy => &[
                ("domain", "line"),
                ("x_min", "-10"),
                ("x_max", "10"),
                ("n", "513"),
                ("time_ratio", "1"),
                ("init", "twist"),
            ],
            ExperimentKind::Covariance => &[
                ("domain", "periodic"),
                ("n", "64"),
                ("modes", "4"),
                ("paths", "2000"),
                ("dt", "0.001"),
                ("t_end", "0.1"),
                ("init", "great_circle"),
            ],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
            })
    }
}

/// Every accepted configuration key with its fallback value.
pub const COMMON_DEFAULTS: &[(&str, &str)] = &[
    ("domain", "periodic"),
    ("n", "64"),
    ("circumference", "6.283185307179586"),
    ("x_min", "0"),
    ("x_max", "1"),
    ("alpha", "1"),
    ("beta", "1"),
    ("dt", "auto"),
    ("dt_fraction", "1"),
    ("t_end", "0.1"),
    ("stride", "1"),
    ("modes", "0"),
    ("profile", "unit"),
    ("decay", "1"),
    ("noise_amplitude", "1"),
    ("derivative", "analytic"),
    ("seed", "2024"),
    ("paths", "1"),
    ("init", "twist"),
    ("k", "1"),
    ("twist_amplitude", "1"),
    ("twist_width", "1"),
    ("twist_torsion", "0.5"),
    ("twist_center", "0"),
    ("init_file", ""),
    ("refinements", ""),
    ("levels", "3"),
    ("rule", "midpoint"),
    ("time_ratio", "1"),
];

/// Human-readable catalog. The output depends on nothing but this module.
pub fn render_catalog() -> String {
    let mut out = String::from("experiments:\n");
    for kind in ExperimentKind::ALL {
        out.push_str(&format!(
            "\n{}\n  {}\n  validated by: {}\n  defaults:",
            kind.name(),
            kind.summary(),
            kind.validator()
        ));
        for (k, v) in kind.defaults() {
            out.push_str(&format!(" {k}={v}"));
        }
        out.push('\n');
    }
    out.push_str("\nother keys and their fallbacks:\n ");
    for (k, v) in COMMON_DEFAULTS {
        out.push_str(&format!(" {k}={}", if v.is_empty() { "-" } else { v }));
    }
    out.push('\n');
    out
}
