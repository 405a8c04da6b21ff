//! Monte Carlo experiments for UW-SVD assisted MIMO detection.
//!
//! Each experiment is a pure function of its [`SimConfig`]: every trial draws
//! from random streams keyed by `(seed, trial)`, and per-trial results are
//! combined with integer sums in trial order, so outputs do not depend on the
//! number of worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cond;
pub mod config;
pub mod flops;
pub mod output;
pub mod ser;
pub mod theory;

use std::path::{Path, PathBuf};

use anyhow::Result;

pub use config::{CoordsSelection, Experiment, Overrides, SimConfig};
pub use output::{write_report, Report, Table};

/// Channel draws that cannot be detected and are skipped with a counter.
pub fn is_degenerate(e: &uwsvd::Error) -> bool {
    matches!(e, uwsvd::Error::DegenerateChannel { .. } | uwsvd::Error::Singular(_))
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(f),
        None => f(),
    }
}

pub fn run_experiment(experiment: Experiment, config: &SimConfig) -> Result<Report> {
    Ok(match experiment {
        Experiment::CondCdf => cond::cond_cdf(config)?.report(config),
        Experiment::SerCurve => ser::ser_curve(config)?.report(config),
        Experiment::EstError => ser::estimation_error(config)?.report(config),
        Experiment::TheoryCheck => theory::report(&theory::theory_check(config)?),
        Experiment::Flops => flops::flops_report(config)?.report(),
    })
}

/// Resolves the experiment (explicit choice, else the config's), runs it and
/// writes its outputs under the configured directory.
pub fn run_config(config: &SimConfig, experiment: Option<Experiment>) -> Result<(Report, Vec<PathBuf>)> {
    let experiment = match experiment.or(config.experiment) {
        Some(e) => e,
        None => {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            anyhow::bail!(
                "no experiment selected; set `experiment` to one of {}",
                names.join(", ")
            );
        }
    };
    let report = run_experiment(experiment, config)?;
    let files = write_report(&report, config, &config.output.dir)?;
    Ok((report, files))
}

/// Loads a config file, applies overrides and runs it.
pub fn run_config_file(
    path: &Path,
    experiment: Option<Experiment>,
    overrides: &Overrides,
) -> Result<(Report, Vec<PathBuf>)> {
    let mut config = SimConfig::load(path)?;
    config.apply(overrides);
    run_config(&config, experiment)
}
