//! Flat `key = value` configuration.
//!
//! Values are layered as experiment defaults, then the config file, then
//! `--set` overrides, then `--seed`. Resolution checks every key and every
//! precondition and reports all violations at once.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hasimoto_core::initial::InitialData;
use hasimoto_core::llg::stability_bound;
use hasimoto_core::stochastic::{CoefficientProfile, DerivativeRule};
use hasimoto_core::validation::StratonovichRule;
use hasimoto_core::{Domain, Grid1D, Vec3};
use serde::{Deserialize, Serialize};

use crate::catalog::{ExperimentKind, COMMON_DEFAULTS};
use crate::error::{CliError, Result};

/// Holonomy spatial strides, coarse to fine.
pub const HOLONOMY_STRIDES: [usize; 3] = [16, 8, 4];
/// Time steps of the coarsest holonomy level.
pub const HOLONOMY_COARSE_STEPS: usize = 4;

#[derive(Debug, Clone, Default)]
pub struct ConfigSources {
    pub experiment: Option<String>,
    pub file: Option<PathBuf>,
    pub sets: Vec<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub domain: Domain,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self) -> hasimoto_core::Result<Grid1D> {
        Grid1D::new(self.domain, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub modes: usize,
    pub profile: CoefficientProfile,
    pub amplitude: f64,
    pub derivative: DerivativeRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    GreatCircle { k: f64 },
    Twist {
        amplitude: f64,
        width: f64,
        torsion: f64,
        center: f64,
    },
    File {
        path: PathBuf,
        #[serde(skip)]
        nodes: Vec<Vec3>,
    },
}

impl InitSpec {
    pub fn initial_data(&self) -> InitialData {
        match self {
            InitSpec::GreatCircle { k } => InitialData::great_circle(*k),
            InitSpec::Twist {
                amplitude,
                width,
                torsion,
                center,
            } => InitialData::LocalizedTwist {
                amplitude: *amplitude,
                width: *width,
                torsion: *torsion,
                center: *center,
            },
            InitSpec::File { nodes, .. } => InitialData::Nodes(nodes.clone()),
        }
    }
}

/// A fully resolved and validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridSpec,
    pub alpha: f64,
    pub beta: f64,
    /// `None` selects `dt_fraction` of the stability bound.
    pub dt: Option<f64>,
    pub dt_fraction: f64,
    pub t_end: f64,
    pub stride: usize,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub paths: usize,
    pub init: InitSpec,
    pub refinements: Vec<usize>,
    pub levels: usize,
    pub rule: StratonovichRule,
    pub time_ratio: usize,
    /// The merged key-value set; feeding it back as a config file
    /// reproduces the run.
    pub keys: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn time_step(&self, g: &Grid1D) -> f64 {
        self.dt
            .unwrap_or_else(|| self.dt_fraction * stability_bound(g, self.alpha, self.beta))
    }

    /// The merged keys in config-file syntax.
    pub fn to_config_text(&self) -> String {
        let mut out = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.keys {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// Parses `key = value` lines. `#` starts a comment.
pub fn parse_kv_text(text: &str, origin: &str) -> std::result::Result<Vec<(String, String)>, Vec<String>> {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => pairs.push((k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(format!("{origin}:{}: expected `key = value`, got `{line}`", i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(pairs)
    } else {
        Err(errors)
    }
}

struct Reader<'a> {
    keys: &'a BTreeMap<String, String>,
    errors: Vec<String>,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.keys.get(key).map(String::as_str).unwrap_or("")
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            self.errors.push(format!("missing required field `{key}`"));
            return None;
        }
        match raw.parse::<T>() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("`{key} = {raw}`: {e}"));
                None
            }
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

fn read_nodes(path: &Path) -> std::result::Result<Vec<Vec3>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("init_file {}: {e}", path.display()))?;
    let mut nodes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: std::result::Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match vals {
            Ok(v) if v.len() == 3 && v.iter().all(|x| x.is_finite()) => nodes.push(Vec3::new(v[0], v[1], v[2])),
            _ => return Err(format!("init_file {}:{}: expected three numbers", path.display(), i + 1)),
        }
    }
    Ok(nodes)
}

/// Merges the sources and validates the result.
pub fn resolve(sources: &ConfigSources) -> Result<ExperimentConfig> {
    let mut errors = Vec::new();
    let mut file_pairs = Vec::new();
    if let Some(path) = &sources.file {
        match fs::read_to_string(path) {
            Ok(text) => match parse_kv_text(&text, &path.display().to_string()) {
                Ok(p) => file_pairs = p,
                Err(e) => errors.extend(e),
            },
            Err(e) => errors.push(format!("config file {}: {e}", path.display())),
        }
    }
    let mut set_pairs = Vec::new();
    for s in &sources.sets {
        match s.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => set_pairs.push((k.trim().to_string(), v.trim().to_string())),
            _ => errors.push(format!("--set expects key=value, got `{s}`")),
        }
    }

    let from_file = file_pairs.iter().rev().find(|(k, _)| k == "experiment").map(|(_, v)| v.clone());
    let from_set = set_pairs.iter().rev().find(|(k, _)| k == "experiment").map(|(_, v)| v.clone());
    let kind = match sources.experiment.clone().or(from_set).or(from_file) {
        None => {
            errors.push("missing required field `experiment`".into());
            None
        }
        Some(name) => match name.parse::<ExperimentKind>() {
            Ok(k) => Some(k),
            Err(e) => {
                errors.push(e);
                None
            }
        },
    };
    let Some(kind) = kind else {
        return Err(CliError::Config(errors));
    };

    let mut keys: BTreeMap<String, String> =
        COMMON_DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    for (k, v) in kind.defaults() {
        keys.insert(k.to_string(), v.to_string());
    }
    for (k, v) in file_pairs.into_iter().chain(set_pairs) {
        if k == "experiment" {
            continue;
        }
        if !keys.contains_key(&k) {
            errors.push(format!("unknown key `{k}`"));
            continue;
        }
        keys.insert(k, v);
    }
    if let Some(seed) = sources.seed {
        keys.insert("seed".into(), seed.to_string());
    }

    let mut r = Reader {
        keys: &keys,
        errors: Vec::new(),
    };

    let n = r.parse::<usize>("n");
    let domain = match r.raw("domain") {
        "periodic" => r.parse::<f64>("circumference").map(|c| Domain::Periodic { circumference: c }),
        "line" => match (r.parse::<f64>("x_min"), r.parse::<f64>("x_max")) {
            (Some(x_min), Some(x_max)) => Some(Domain::Line { x_min, x_max }),
            _ => None,
        },
        other => {
            r.errors.push(format!("`domain = {other}`: expected periodic or line"));
            None
        }
    };
    let mut grid = None;
    if let (Some(domain), Some(n)) = (domain, n) {
        let spec = GridSpec { domain, n };
        match spec.build() {
            Ok(g) => grid = Some((spec, g)),
            Err(e) => r.errors.push(e.to_string()),
        }
    }

    let alpha = r.parse::<f64>("alpha");
    let beta = r.parse::<f64>("beta");
    if let Some(a) = alpha {
        r.check(a.is_finite() && a >= 0.0, || format!("alpha must be finite and >= 0, got {a}"));
    }
    if let Some(b) = beta {
        r.check(b.is_finite(), || format!("beta must be finite, got {b}"));
    }
    let dt = match r.raw("dt") {
        "auto" => Some(None),
        _ => r.parse::<f64>("dt").map(Some),
    };
    let dt_fraction = r.parse::<f64>("dt_fraction");
    if let Some(f) = dt_fraction {
        r.check(f > 0.0 && f <= 1.0, || format!("dt_fraction must lie in (0, 1], got {f}"));
    }
    let t_end = r.parse::<f64>("t_end");
    if let Some(t) = t_end {
        r.check(t.is_finite() && t >= 0.0, || format!("t_end must be finite and >= 0, got {t}"));
    }
    let stride = r.parse::<usize>("stride");
    r.check(stride != Some(0), || "stride must be >= 1".into());

    let modes = r.parse::<usize>("modes");
    let profile = match r.raw("profile") {
        "unit" => Some(CoefficientProfile::Unit),
        "power" => r.parse::<f64>("decay").map(|s| CoefficientProfile::Power { s }),
        other => {
            r.errors.push(format!("`profile = {other}`: expected unit or power"));
            None
        }
    };
    if let Some(CoefficientProfile::Power { s }) = profile {
        r.check(s.is_finite() && s >= 0.0, || format!("decay must be finite and >= 0, got {s}"));
    }
    let amplitude = r.parse::<f64>("noise_amplitude");
    if let Some(a) = amplitude {
        r.check(a.is_finite(), || format!("noise_amplitude must be finite, got {a}"));
    }
    let derivative = match r.raw("derivative") {
        "analytic" => Some(DerivativeRule::Analytic),
        "consistent" => Some(DerivativeRule::TransportConsistent),
        other => {
            r.errors.push(format!("`derivative = {other}`: expected analytic or consistent"));
            None
        }
    };
    let seed = r.parse::<u64>("seed");
    let paths = r.parse::<usize>("paths");
    let levels = r.parse::<usize>("levels");
    r.check(levels != Some(0), || "levels must be >= 1".into());
    let rule = match r.raw("rule") {
        "midpoint" => Some(StratonovichRule::Midpoint),
        "simpson" => Some(StratonovichRule::GeodesicSimpson),
        "left_point" => Some(StratonovichRule::LeftPoint),
        other => {
            r.errors.push(format!("`rule = {other}`: expected midpoint, simpson or left_point"));
            None
        }
    };
    let time_ratio = r.parse::<usize>("time_ratio");
    r.check(time_ratio != Some(0), || "time_ratio must be >= 1".into());

    let refinements: Vec<usize> = {
        let raw = r.raw("refinements").to_string();
        let mut out = Vec::new();
        for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match part.parse::<usize>() {
                Ok(v) if v >= 4 => out.push(v),
                _ => r.errors.push(format!("refinements: `{part}` is not a node count >= 4")),
            }
        }
        out
    };
    if matches!(kind, ExperimentKind::Crosscheck | ExperimentKind::Identities) {
        if refinements.len() < 2 {
            r.errors.push("missing required field `refinements` (at least two node counts)".into());
        } else if refinements.windows(2).any(|w| w[1] <= w[0]) {
            r.errors.push("refinements must increase".into());
        }
    }

    let init = match r.raw("init") {
        "great_circle" => r.parse::<f64>("k").map(|k| InitSpec::GreatCircle { k }),
        "twist" => {
            let a = r.parse::<f64>("twist_amplitude");
            let w = r.parse::<f64>("twist_width");
            let t = r.parse::<f64>("twist_torsion");
            let c = r.parse::<f64>("twist_center");
            if let Some(w) = w {
                r.check(w > 0.0, || format!("twist_width must be positive, got {w}"));
            }
            match (a, w, t, c) {
                (Some(amplitude), Some(width), Some(torsion), Some(center)) => Some(InitSpec::Twist {
                    amplitude,
                    width,
                    torsion,
                    center,
                }),
                _ => None,
            }
        }
        "file" => {
            let raw = r.raw("init_file").to_string();
            if raw.is_empty() {
                r.errors.push("missing required field `init_file` for init = file".into());
                None
            } else {
                let path = PathBuf::from(raw);
                match read_nodes(&path) {
                    Ok(nodes) => {
                        if let Some(n) = n {
                            r.check(nodes.len() == n, || {
                                format!("init_file holds {} nodes but n = {n}", nodes.len())
                            });
                        }
                        Some(InitSpec::File { path, nodes })
                    }
                    Err(e) => {
                        r.errors.push(e);
                        None
                    }
                }
            }
        }
        other => {
            r.errors.push(format!("`init = {other}`: expected great_circle, twist or file"));
            None
        }
    };

    // experiment-specific preconditions
    if let Some((spec, g)) = &grid {
        let stochastic = matches!(kind, ExperimentKind::Sllg | ExperimentKind::Covariance);
        if stochastic {
            if let Some(m) = modes {
                r.check(m == 0 || g.is_periodic(), || "noise modes require a periodic domain".into());
            }
            if let Some(p) = paths {
                let min = if kind == ExperimentKind::Covariance { 2 } else { 1 };
                r.check(p >= min, || format!("paths must be >= {min}, got {p}"));
            }
        }
        if kind == ExperimentKind::Sllg && g.is_periodic() {
            if let Some(InitSpec::GreatCircle { k }) = &init {
                let turns = k * g.extent() / std::f64::consts::TAU;
                r.check((turns - turns.round()).abs() < 1e-9, || {
                    format!("great circle with k = {k} does not close on the circle")
                });
            }
        }
        if kind == ExperimentKind::Holonomy {
            let fine = HOLONOMY_STRIDES[0];
            let divisible = match spec.domain {
                Domain::Line { .. } => (spec.n - 1) % fine == 0,
                Domain::Periodic { .. } => spec.n % fine == 0,
            };
            r.check(divisible, || {
                format!("holonomy needs the node count compatible with stride {fine}, got n = {}", spec.n)
            });
        }
        let steps_in_time = !matches!(kind, ExperimentKind::Identities | ExperimentKind::Crosscheck);
        if let (true, Some(Some(dt)), Some(a), Some(b)) = (steps_in_time, dt, alpha, beta) {
            let bound = stability_bound(g, a, b);
            if !(dt.is_finite() && dt > 0.0) {
                r.errors.push(format!("dt must be positive, got {dt}"));
            } else if dt > bound * (1.0 + 1e-12) {
                r.errors.push(format!("dt = {dt} exceeds the stability bound {bound:.6e}"));
            }
        }
    }

    errors.extend(r.errors);
    if !errors.is_empty() {
        return Err(CliError::Config(errors));
    }
    let (grid, _) = grid.expect("checked above");
    Ok(ExperimentConfig {
        experiment: kind,
        grid,
        alpha: alpha.expect("checked"),
        beta: beta.expect("checked"),
        dt: dt.expect("checked"),
        dt_fraction: dt_fraction.expect("checked"),
        t_end: t_end.expect("checked"),
        stride: stride.expect("checked"),
        noise: NoiseSpec {
            modes: modes.expect("checked"),
            profile: profile.expect("checked"),
            amplitude: amplitude.expect("checked"),
            derivative: derivative.expect("checked"),
        },
        seed: seed.expect("checked"),
        paths: paths.expect("checked"),
        init: init.expect("checked"),
        refinements,
        levels: levels.expect("checked"),
        rule: rule.expect("checked"),
        time_ratio: time_ratio.expect("checked"),
        keys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sources(exp: &str, sets: &[&str]) -> ConfigSources {
        ConfigSources {
            experiment: Some(exp.into()),
            sets: sets.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn defaults_resolve_for_every_experiment() {
        for k in ExperimentKind::ALL {
            let cfg = resolve(&sources(k.name(), &[])).unwrap();
            assert_eq!(cfg.experiment, k);
        }
    }

    #[test]
    fn reports_every_violation() {
        let err = resolve(&sources("llg", &["n=2", "alpha=-1", "bogus=3", "stride=0"])).unwrap_err();
        let CliError::Config(list) = err else { panic!() };
        assert_eq!(list.len(), 4, "{list:?}");
        assert!(list.iter().any(|e| e.contains("alpha")));
        assert!(list.iter().any(|e| e.contains("bogus")));
        assert!(list.iter().any(|e| e.contains("stride")));
    }

    #[test]
    fn experiment_is_required() {
        let err = resolve(&ConfigSources::default()).unwrap_err();
        assert!(err.to_string().contains("experiment"));
    }

    #[test]
    fn kv_parser_skips_comments() {
        let p = parse_kv_text("# c\n a = 1 # x\n\nb=two\n", "t").unwrap();
        assert_eq!(p, vec![("a".into(), "1".into()), ("b".into(), "two".into())]);
        assert!(parse_kv_text("novalue\n", "t").is_err());
    }

    #[test]
    fn config_text_round_trips() {
        let cfg = resolve(&sources("sllg", &["paths=7", "seed=11"])).unwrap();
        let pairs = parse_kv_text(&cfg.to_config_text(), "t").unwrap();
        let again = resolve(&ConfigSources {
            sets: pairs.iter().map(|(k, v)| format!("{k}={v}")).collect(),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg, again);
    }
}
