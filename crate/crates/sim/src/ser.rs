//! SER-versus-iteration experiments, with and without channel estimation error.

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde_json::json;

use uwsvd::channel::{add_estimation_error, build_geometry, ChannelGenerator};
use uwsvd::detect::{
    build_problem_esignal, build_problem_original, exact_solve, post_process, post_process_counted, uw_svd_counted,
    Coords, UwSvdFactors,
};
use uwsvd::linalg::C64;
use uwsvd::modem::{demodulate_hard, modulate, random_symbols, symbol_errors, transmit_with_noise, unit_noise};
use uwsvd::modem::{Constellation, SnrSpec};
use uwsvd::rng::{stream, Purpose};
use uwsvd::solvers::{flop_estimate, run_with, Algorithm, SolverSpec};
use uwsvd::{Error, Flops};

use crate::config::{Experiment, SimConfig};
use crate::output::{fmt_f64, fmt_opt, Report, Table};
use crate::{is_degenerate, with_threads};

/// One `(solver, coords)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub algorithm: Algorithm,
    pub coords: Coords,
}

#[derive(Debug, Clone, Default)]
struct TrialOutcome {
    skipped: bool,
    /// `[varpi][snr][run][t-1]` symbol errors.
    errors: Vec<u64>,
    /// `[varpi][snr]` symbol errors of the exact detector.
    exact: Vec<u64>,
    /// `[varpi][run][t]` cumulative multiply-adds, first frame only.
    flops: Vec<u64>,
}

/// Aggregated SER curves.
#[derive(Debug, Clone)]
pub struct SerResults {
    pub experiment: Experiment,
    /// ϖ grid; `+inf` means perfect channel knowledge.
    pub varpi_db: Vec<f64>,
    pub snr_db: Vec<f64>,
    pub runs: Vec<Run>,
    pub iterations: usize,
    pub trials_used: usize,
    pub trials_skipped: usize,
    pub symbols_per_point: u64,
    convergence_factor: f64,
    errors: Vec<u64>,
    exact: Vec<u64>,
    flops: Vec<u64>,
    /// `[varpi][snr][solver]`: trials in which UW-SVD coords converged no later than original coords.
    not_slower: Vec<u64>,
    comparable: Vec<usize>,
}

impl SerResults {
    fn run_index(&self, algorithm: Algorithm, coords: Coords) -> Option<usize> {
        self.runs
            .iter()
            .position(|r| r.algorithm == algorithm && r.coords == coords)
    }

    fn idx(&self, v: usize, s: usize, r: usize) -> usize {
        ((v * self.snr_db.len() + s) * self.runs.len() + r) * self.iterations
    }

    /// SER after each of the `T` iterations.
    pub fn curve(&self, v: usize, s: usize, algorithm: Algorithm, coords: Coords) -> Option<Vec<f64>> {
        let r = self.run_index(algorithm, coords)?;
        let start = self.idx(v, s, r);
        let denom = self.symbols_per_point as f64;
        Some(
            self.errors[start..start + self.iterations]
                .iter()
                .map(|&e| e as f64 / denom)
                .collect(),
        )
    }

    pub fn exact_ser(&self, v: usize, s: usize) -> f64 {
        self.exact[v * self.snr_db.len() + s] as f64 / self.symbols_per_point as f64
    }

    /// First iteration whose SER is within the convergence factor of the exact SER.
    pub fn converged_at(&self, v: usize, s: usize, algorithm: Algorithm, coords: Coords) -> Option<usize> {
        let curve = self.curve(v, s, algorithm, coords)?;
        first_converged(&curve, self.convergence_factor * self.exact_ser(v, s))
    }

    /// Mean cumulative multiply-adds after iteration `t` (0 = setup).
    pub fn mean_flops(&self, v: usize, r: usize, t: usize) -> f64 {
        let width = self.iterations + 1;
        self.flops[(v * self.runs.len() + r) * width + t] as f64 / self.trials_used as f64
    }

    /// Fraction of trials in which UW-SVD coords did not converge later than
    /// original coords, when both were run.
    pub fn not_slower_fraction(&self, v: usize, s: usize, algorithm: Algorithm) -> Option<f64> {
        let solvers = self.solver_list();
        let k = solvers.iter().position(|x| *x == algorithm)?;
        let i = (v * self.snr_db.len() + s) * solvers.len() + k;
        let n = self.comparable[i];
        (n > 0).then(|| self.not_slower[i] as f64 / n as f64)
    }

    fn solver_list(&self) -> Vec<Algorithm> {
        let mut out: Vec<Algorithm> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.algorithm) {
                out.push(r.algorithm);
            }
        }
        out
    }

    pub fn report(&self, config: &SimConfig) -> Report {
        let with_varpi = self.experiment == Experiment::EstError;
        let model = config.channel.model.to_string();
        let rho = fmt_f64(config.channel.corr_rho);
        let mode = config.detection.mode.name();
        let mut head = vec!["model", "rho_corr"];
        if with_varpi {
            head.push("varpi_db");
        }
        let mut curves = Table::new(
            head.iter()
                .copied()
                .chain([
                    "snr_db",
                    "solver",
                    "coords",
                    "mode",
                    "iteration",
                    "ser",
                    "cumulative_flops",
                ])
                .collect(),
        );
        let mut conv = Table::new(
            head.iter()
                .copied()
                .chain([
                    "snr_db",
                    "solver",
                    "coords",
                    "mode",
                    "exact_ser",
                    "final_ser",
                    "converged_at",
                ])
                .collect(),
        );
        let mut lines = Vec::new();
        let mut summary_rows = Vec::new();
        for (v, &varpi) in self.varpi_db.iter().enumerate() {
            for (s, &snr) in self.snr_db.iter().enumerate() {
                let mut prefix = vec![model.clone(), rho.clone()];
                if with_varpi {
                    prefix.push(fmt_f64(varpi));
                }
                prefix.push(fmt_f64(snr));
                let exact = self.exact_ser(v, s);
                for (r, run) in self.runs.iter().enumerate() {
                    let curve = self.curve(v, s, run.algorithm, run.coords).expect("run exists");
                    for (t, ser) in curve.iter().enumerate() {
                        let mut row = prefix.clone();
                        row.extend([
                            run.algorithm.name().to_string(),
                            run.coords.name().to_string(),
                            mode.to_string(),
                            (t + 1).to_string(),
                            fmt_f64(*ser),
                            fmt_f64(self.mean_flops(v, r, t + 1)),
                        ]);
                        curves.push(row);
                    }
                    let at = self.converged_at(v, s, run.algorithm, run.coords);
                    let mut row = prefix.clone();
                    row.extend([
                        run.algorithm.name().to_string(),
                        run.coords.name().to_string(),
                        mode.to_string(),
                        fmt_f64(exact),
                        fmt_f64(*curve.last().expect("T >= 1")),
                        fmt_opt(at),
                    ]);
                    conv.push(row);
                    let label = if with_varpi {
                        format!("varpi {varpi} dB, snr {snr} dB")
                    } else {
                        format!("snr {snr} dB")
                    };
                    lines.push(format!(
                        "{label}: {}/{} converged at {} (exact SER {exact:.3e})",
                        run.algorithm,
                        run.coords.name(),
                        at.map(|t| t.to_string())
                            .unwrap_or_else(|| format!("> {}", self.iterations)),
                    ));
                    summary_rows.push(json!({
                        "varpi_db": if varpi.is_finite() { json!(varpi) } else { json!("inf") },
                        "snr_db": snr,
                        "solver": run.algorithm.name(),
                        "coords": run.coords.name(),
                        "converged_at": at,
                        "exact_ser": exact,
                        "uwsvd_not_slower_fraction": self.not_slower_fraction(v, s, run.algorithm),
                    }));
                }
            }
        }
        lines.push(format!(
            "{} trials used, {} degenerate draws skipped",
            self.trials_used, self.trials_skipped
        ));
        let stem = self.experiment.file_stem();
        Report {
            experiment: self.experiment,
            tables: vec![(stem.to_string(), curves), (format!("{stem}_converged"), conv)],
            summary: json!({
                "trials_used": self.trials_used,
                "trials_skipped": self.trials_skipped,
                "exact_flops": flop_estimate(mode, config.system.m, config.system.n(), config.system.n_ue, 0)
                    .map(|b| b.total(false))
                    .ok(),
                "runs": summary_rows,
            }),
            lines,
            failed: false,
        }
    }
}

fn first_converged(curve: &[f64], threshold: f64) -> Option<usize> {
    curve.iter().position(|&s| s <= threshold).map(|t| t + 1)
}

fn first_converged_counts(errors: &[u64], exact: u64, factor: f64) -> usize {
    errors
        .iter()
        .position(|&e| e as f64 <= factor * exact as f64)
        .map_or(errors.len() + 1, |t| t + 1)
}

struct Setup<'a> {
    config: &'a SimConfig,
    generator: ChannelGenerator,
    constellation: Constellation,
    varpi_db: Vec<f64>,
    snrs: Vec<SnrSpec>,
    runs: Vec<Run>,
}

impl Setup<'_> {
    fn trial(&self, trial: u64) -> Result<TrialOutcome> {
        let cfg = self.config;
        let seed = cfg.monte_carlo.seed;
        let t_max = cfg.detection.iterations;
        let (nv, ns, nr) = (self.varpi_db.len(), self.snrs.len(), self.runs.len());
        let mut out = TrialOutcome {
            skipped: false,
            errors: vec![0; nv * ns * nr * t_max],
            exact: vec![0; nv * ns],
            flops: vec![0; nv * nr * (t_max + 1)],
        };
        let skipped = || TrialOutcome {
            skipped: true,
            ..TrialOutcome::default()
        };
        let realization = match self.generator.generate_trial(seed, trial) {
            Ok(r) => r,
            Err(e) if is_degenerate(&e) => return Ok(skipped()),
            Err(e) => return Err(e.into()),
        };
        let h = &realization.h;
        let (m, n) = (h.rows(), h.cols());

        let mut symbol_rng = stream(seed, Purpose::Symbols, trial);
        let mut noise_rng = stream(seed, Purpose::Noise, trial);
        let frames: Vec<(Vec<usize>, Vec<C64>)> = (0..cfg.detection.frames)
            .map(|_| {
                let idx = random_symbols(n, &self.constellation, &mut symbol_rng);
                let noise = unit_noise(m, &mut noise_rng);
                (idx, noise)
            })
            .collect();
        let need_factors = self.runs.iter().any(|r| r.coords == Coords::ESignal);

        for (v, &varpi) in self.varpi_db.iter().enumerate() {
            // the same error realization, scaled, at every ϖ
            let h_det = if varpi.is_finite() {
                add_estimation_error(h, varpi, &mut stream(seed, Purpose::EstimationError, trial))
            } else {
                h.clone()
            };
            let mut factor_flops = Flops::default();
            let factors = if need_factors {
                match uw_svd_counted(&h_det, &realization.partition, &mut factor_flops) {
                    Ok(f) => Some(f),
                    Err(e) if is_degenerate(&e) => return Ok(skipped()),
                    Err(e) => return Err(e.into()),
                }
            } else {
                None
            };
            let uw_overhead = match &factors {
                Some(f) => {
                    let mut pp = Flops::default();
                    post_process_counted(f, &vec![C64::new(0.0, 0.0); n], &mut pp)?;
                    factor_flops.get() + pp.get()
                }
                None => 0,
            };
            let matched_filter = (m * n) as u64;

            for (f, (idx, noise)) in frames.iter().enumerate() {
                let x = modulate(idx, &self.constellation)?;
                for (s, snr) in self.snrs.iter().enumerate() {
                    let y = transmit_with_noise(h, &x, noise, snr.sigma_z_sq())?;
                    let original = build_problem_original(&h_det, &y, cfg.detection.mode, snr.rho_linear())?;
                    let x_exact = exact_solve(&original)?;
                    out.exact[v * ns + s] += self.count_errors(&x_exact, idx);
                    let esignal = match &factors {
                        Some(fac) => Some(build_problem_esignal(fac, &y, cfg.detection.mode, snr.rho_linear())?),
                        None => None,
                    };
                    for (r, run) in self.runs.iter().enumerate() {
                        let mut spec = SolverSpec::new(run.algorithm, t_max);
                        spec.omega = cfg.detection.omega;
                        spec.lbfgs_textbook = cfg.detection.lbfgs_textbook;
                        let base = ((v * ns + s) * nr + r) * t_max;
                        let errors = &mut out.errors[base..base + t_max];
                        let (problem, fac) = match run.coords {
                            Coords::Original => (&original, None),
                            Coords::ESignal => (esignal.as_ref().expect("factors computed"), factors.as_ref()),
                        };
                        let mut failure = None;
                        let trace = run_with(problem, &spec, false, &mut |t, it| match self.decide(it, fac) {
                            Ok(est) => errors[t - 1] += symbol_errors(&est, idx) as u64,
                            Err(e) => failure = Some(e),
                        })?;
                        if let Some(e) = failure {
                            return Err(e.into());
                        }
                        if f == 0 && s == 0 {
                            let extra = matched_filter + if fac.is_some() { uw_overhead } else { 0 };
                            let fb = (v * nr + r) * (t_max + 1);
                            for (dst, c) in out.flops[fb..fb + t_max + 1].iter_mut().zip(&trace.flops) {
                                *dst = c + extra;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn decide(&self, iterate: &[C64], factors: Option<&UwSvdFactors>) -> std::result::Result<Vec<usize>, Error> {
        Ok(match factors {
            Some(f) => demodulate_hard(&post_process(f, iterate)?, &self.constellation),
            None => demodulate_hard(iterate, &self.constellation),
        })
    }

    fn count_errors(&self, x: &[C64], truth: &[usize]) -> u64 {
        symbol_errors(&demodulate_hard(x, &self.constellation), truth) as u64
    }
}

pub fn ser_curve(config: &SimConfig) -> Result<SerResults> {
    run_ser(config, Experiment::SerCurve, vec![f64::INFINITY])
}

/// Detector built from `Ĥ`, transmission through the true channel.
pub fn estimation_error(config: &SimConfig) -> Result<SerResults> {
    if config.channel.varpi_db.is_empty() {
        bail!("est-error needs a non-empty channel.varpi_db grid");
    }
    run_ser(config, Experiment::EstError, config.channel.varpi_db.clone())
}

fn run_ser(config: &SimConfig, experiment: Experiment, varpi_db: Vec<f64>) -> Result<SerResults> {
    config.validate()?;
    let geometry = build_geometry(&config.system.geometry())?;
    let c = &config.channel;
    let generator = ChannelGenerator::new(c.model, &geometry, c.propagation, c.model4, c.corr_rho)?;
    let det = &config.detection;
    let snrs = det
        .snr_db
        .iter()
        .map(|&db| SnrSpec::from_db(db))
        .collect::<uwsvd::Result<Vec<_>>>()?;
    let mut runs = Vec::new();
    for &algorithm in &det.solvers {
        for coords in det.coords.coords() {
            runs.push(Run { algorithm, coords });
        }
    }
    let setup = Setup {
        config,
        generator,
        constellation: Constellation::new(det.qam_order)?,
        varpi_db,
        snrs,
        runs,
    };
    let trials = config.monte_carlo.trials as u64;
    let outcomes: Vec<TrialOutcome> = with_threads(config.monte_carlo.threads, || {
        (0..trials)
            .into_par_iter()
            .map(|t| setup.trial(t))
            .collect::<Result<Vec<_>>>()
    })?;

    let (nv, ns, nr, t_max) = (setup.varpi_db.len(), setup.snrs.len(), setup.runs.len(), det.iterations);
    let solvers: Vec<Algorithm> = {
        let mut v: Vec<Algorithm> = Vec::new();
        for r in &setup.runs {
            if !v.contains(&r.algorithm) {
                v.push(r.algorithm);
            }
        }
        v
    };
    let mut res = SerResults {
        experiment,
        varpi_db: setup.varpi_db.clone(),
        snr_db: det.snr_db.clone(),
        runs: setup.runs.clone(),
        iterations: t_max,
        trials_used: 0,
        trials_skipped: 0,
        symbols_per_point: 0,
        convergence_factor: det.convergence_factor,
        errors: vec![0; nv * ns * nr * t_max],
        exact: vec![0; nv * ns],
        flops: vec![0; nv * nr * (t_max + 1)],
        not_slower: vec![0; nv * ns * solvers.len()],
        comparable: vec![0; nv * ns * solvers.len()],
    };
    for o in &outcomes {
        if o.skipped {
            res.trials_skipped += 1;
            continue;
        }
        res.trials_used += 1;
        for (a, b) in res.errors.iter_mut().zip(&o.errors) {
            *a += b;
        }
        for (a, b) in res.exact.iter_mut().zip(&o.exact) {
            *a += b;
        }
        for (a, b) in res.flops.iter_mut().zip(&o.flops) {
            *a += b;
        }
        for v in 0..nv {
            for s in 0..ns {
                let exact = o.exact[v * ns + s];
                for (k, &alg) in solvers.iter().enumerate() {
                    let find = |coords| setup.runs.iter().position(|r| r.algorithm == alg && r.coords == coords);
                    let (Some(ro), Some(ru)) = (find(Coords::Original), find(Coords::ESignal)) else {
                        continue;
                    };
                    let slice = |r: usize| {
                        let b = ((v * ns + s) * nr + r) * t_max;
                        &o.errors[b..b + t_max]
                    };
                    let co = first_converged_counts(slice(ro), exact, det.convergence_factor);
                    let cu = first_converged_counts(slice(ru), exact, det.convergence_factor);
                    let i = (v * ns + s) * solvers.len() + k;
                    res.comparable[i] += 1;
                    res.not_slower[i] += u64::from(cu <= co);
                }
            }
        }
    }
    if res.trials_used == 0 {
        bail!("all {} channel draws were degenerate", res.trials_skipped);
    }
    res.symbols_per_point = (res.trials_used * det.frames * config.system.n()) as u64;
    Ok(res)
}
