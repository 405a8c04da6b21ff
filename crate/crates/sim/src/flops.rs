//! Complexity table: nominal formulas next to measured operation counters.

use anyhow::Result;
use serde_json::json;

use uwsvd::channel::gen_iid_rayleigh;
use uwsvd::detect::{build_problem_original, post_process_counted, uw_svd_counted, Mode};
use uwsvd::linalg::ZERO;
use uwsvd::rng::{complex_gaussian, stream, Purpose};
use uwsvd::solvers::{flop_estimate, run, Algorithm, SolverSpec, FLOP_ALGORITHMS};
use uwsvd::Flops;

use crate::config::{Experiment, SimConfig};
use crate::output::{fmt_f64, Report, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct FlopsRow {
    pub algorithm: &'static str,
    pub gram_build: u64,
    pub matrix_inverse: u64,
    pub per_iteration: u64,
    pub iterations: u64,
    pub total: u64,
    pub total_with_uwsvd: u64,
    /// Counter of one steady-state iteration, for the iterative solvers.
    pub measured_per_iteration: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlopsReport {
    pub rows: Vec<FlopsRow>,
    pub uw_svd_formula: u64,
    /// UW-SVD factorization plus one post-processing pass.
    pub uw_svd_measured: u64,
}

impl FlopsReport {
    pub fn row(&self, algorithm: &str) -> Option<&FlopsRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm)
    }

    fn per_iteration(&self, algorithm: &str) -> (u64, Option<u64>) {
        let r = self.row(algorithm).expect("tabulated algorithm");
        (r.per_iteration, r.measured_per_iteration)
    }

    /// UW-SVD overhead expressed in iterations of `algorithm`: (formula, measured).
    pub fn overhead_in_iterations(&self, algorithm: &str) -> (f64, Option<f64>) {
        let (nominal, measured) = self.per_iteration(algorithm);
        (
            self.uw_svd_formula as f64 / nominal as f64,
            measured.map(|m| self.uw_svd_measured as f64 / m as f64),
        )
    }

    pub fn report(&self) -> Report {
        let mut table = Table::new(vec![
            "algorithm",
            "gram_build",
            "matrix_inverse",
            "per_iteration",
            "iterations",
            "total",
            "total_with_uwsvd",
            "measured_per_iteration",
        ]);
        for r in &self.rows {
            table.push(vec![
                r.algorithm.into(),
                r.gram_build.to_string(),
                r.matrix_inverse.to_string(),
                r.per_iteration.to_string(),
                r.iterations.to_string(),
                r.total.to_string(),
                r.total_with_uwsvd.to_string(),
                r.measured_per_iteration.map(|v| v.to_string()).unwrap_or_default(),
            ]);
        }
        let mut overhead = Table::new(vec!["quantity", "formula", "measured", "ratio"]);
        let mut push = |name: &str, formula: f64, measured: f64| {
            overhead.push(vec![
                name.into(),
                fmt_f64(formula),
                fmt_f64(measured),
                fmt_f64(measured / formula),
            ]);
        };
        push(
            "uw_svd_overhead",
            self.uw_svd_formula as f64,
            self.uw_svd_measured as f64,
        );
        let mut lines = vec![format!(
            "UW-SVD overhead: formula {}, measured {} ({:.2}x)",
            self.uw_svd_formula,
            self.uw_svd_measured,
            self.uw_svd_measured as f64 / self.uw_svd_formula as f64
        )];
        for alg in ["ssor", "lbfgs"] {
            let (nominal, measured) = self.per_iteration(alg);
            let measured = measured.expect("iterative solver");
            push(&format!("{alg}_per_iteration"), nominal as f64, measured as f64);
            let (f, m) = self.overhead_in_iterations(alg);
            let m = m.expect("iterative solver");
            push(&format!("uw_svd_overhead_in_{alg}_iterations"), f, m);
            lines.push(format!(
                "{alg}: per iteration formula {nominal}, measured {measured}; UW-SVD overhead = {f:.2} iterations (measured {m:.2})"
            ));
        }
        Report {
            experiment: Experiment::Flops,
            tables: vec![
                (Experiment::Flops.file_stem().into(), table),
                (format!("{}_overhead", Experiment::Flops.file_stem()), overhead),
            ],
            summary: json!({
                "uw_svd_formula": self.uw_svd_formula,
                "uw_svd_measured": self.uw_svd_measured,
                "overhead_in_lbfgs_iterations": self.overhead_in_iterations("lbfgs").0,
                "overhead_in_ssor_iterations": self.overhead_in_iterations("ssor").0,
            }),
            lines,
            failed: false,
        }
    }
}

/// Nominal complexity breakdown for the configured dimensions, with counters measured on
/// one i.i.d. draw in original coordinates (LMMSE).
pub fn flops_report(config: &SimConfig) -> Result<FlopsReport> {
    config.validate()?;
    let s = &config.system;
    let (m, n, n_ue) = (s.m, s.n(), s.n_ue);
    let t = config.detection.iterations;
    let seed = config.monte_carlo.seed;
    let h = gen_iid_rayleigh(m, n, &mut stream(seed, Purpose::Channel, 0))?;
    let mut rng = stream(seed, Purpose::Noise, 0);
    let y: Vec<_> = (0..m).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
    let problem = build_problem_original(&h, &y, Mode::Lmmse, 10.0)?;

    let mut rows = Vec::new();
    for name in FLOP_ALGORITHMS {
        let b = flop_estimate(name, m, n, n_ue, t)?;
        let measured = match name.parse::<Algorithm>() {
            Ok(alg) => {
                let trace = run(&problem, &SolverSpec::new(alg, 3), |_, _| {})?;
                Some(trace.iteration_flops(2))
            }
            Err(_) => None,
        };
        rows.push(FlopsRow {
            algorithm: name,
            gram_build: b.gram_build,
            matrix_inverse: b.matrix_inverse,
            per_iteration: b.per_iteration,
            iterations: b.iterations,
            total: b.total(false),
            total_with_uwsvd: b.total(true),
            measured_per_iteration: measured,
        });
    }
    let partition = vec![n_ue; s.k_users];
    let mut counter = Flops::default();
    let factors = uw_svd_counted(&h, &partition, &mut counter)?;
    post_process_counted(&factors, &vec![ZERO; n], &mut counter)?;
    Ok(FlopsReport {
        rows,
        uw_svd_formula: flop_estimate("lbfgs", m, n, n_ue, 1)?.uw_svd_overhead,
        uw_svd_measured: counter.get(),
    })
}
