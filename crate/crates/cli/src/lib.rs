//! `hasimoto-lab`: configuration, seeding and output handling around the
//! `hasimoto-core` solvers and validators.

pub mod catalog;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

use clap::Parser;

pub use catalog::{render_catalog, ExperimentKind};
pub use config::{resolve, ConfigSources, ExperimentConfig};
pub use error::{CliError, Result};
pub use output::{Manifest, RunDir, RunStatus};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "HASIMOTO_LAB_OUT";
const DEFAULT_OUT_ROOT: &str = "hasimoto-lab-out";
pub const LIST_COMMAND: &str = "list-experiments";

#[derive(Debug, Parser)]
#[command(name = "hasimoto-lab", version, about = "Run Hashimoto transform experiments")]
pub struct Cli {
    /// Experiment kind, or `list-experiments` for the catalog.
    pub experiment: Option<String>,
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Output directory. Defaults to `$HASIMOTO_LAB_OUT/<experiment>-<seed>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the `seed` key.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn default_dir(cfg: &ExperimentConfig) -> PathBuf {
    let root = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(format!("{}-{}", cfg.experiment, cfg.seed))
}

/// Validates the configuration, then runs it in `out` (or the default
/// directory). Nothing is written when validation fails. Once the directory
/// exists the manifest is always finalized, as incomplete on failure.
pub fn run(sources: &ConfigSources, out: Option<&Path>) -> Result<Manifest> {
    let cfg = resolve(sources)?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| default_dir(&cfg));
    let mut run_dir = RunDir::create(&dir, &cfg)?;
    let result = experiments::run_experiment(&cfg).and_then(|outcome| {
        for s in &outcome.series {
            run_dir.write_series(s)?;
        }
        run_dir.write_report(&outcome.report)?;
        Ok(outcome.monitors)
    });
    match result {
        Ok(monitors) => run_dir.finish(monitors, None),
        Err(e) => {
            let monitors = output::Monitors {
                blow_up: matches!(e, CliError::Core(hasimoto_core::Error::BlowUp { .. })),
                ..Default::default()
            };
            run_dir.finish(monitors, Some(e.to_string()))?;
            Err(e)
        }
    }
}

/// Entry point shared by the binary; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    if cli.experiment.as_deref() == Some(LIST_COMMAND) {
        print!("{}", render_catalog());
        return 0;
    }
    let sources = ConfigSources {
        experiment: cli.experiment,
        file: cli.config,
        sets: cli.sets,
        seed: cli.seed,
    };
    match run(&sources, cli.out.as_deref()) {
        Ok(m) => {
            println!("{} complete; outputs: {}", m.experiment, m.outputs.join(", "));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
