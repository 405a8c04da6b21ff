//! Iterative solvers for Hermitian positive definite detection systems.

mod cg;
mod lbfgs;
mod splitting;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cg::{step_cg, CgState};
pub use lbfgs::{step_lbfgs, LbfgsState, STAGNATION_FLOOR};
pub use splitting::{step_matrix_splitting, step_richardson, Preconditioner, SplittingKind};
pub use table::{flop_estimate, FlopBreakdown, FLOP_ALGORITHMS};

use crate::detect::DetectionProblem;
use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::linalg::{norm, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ri,
    Ji,
    Gs,
    Ssor,
    Lbfgs,
    Cg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [Self::Ri, Self::Ji, Self::Gs, Self::Ssor, Self::Lbfgs, Self::Cg];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ri => "ri",
            Algorithm::Ji => "ji",
            Algorithm::Gs => "gs",
            Algorithm::Ssor => "ssor",
            Algorithm::Lbfgs => "lbfgs",
            Algorithm::Cg => "cg",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == lower || (lower == "l-bfgs" && *a == Algorithm::Lbfgs))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown solver {s:?}; expected one of ri, ji, gs, ssor, lbfgs, cg"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub algorithm: Algorithm,
    pub max_iterations: usize,
    /// Zero vector when `None`.
    pub initial_iterate: Option<Vec<C64>>,
    /// Relaxation for GS/SSOR; 1 reproduces the plain splittings.
    pub omega: f64,
    pub lbfgs_textbook: bool,
}

impl SolverSpec {
    pub fn new(algorithm: Algorithm, max_iterations: usize) -> Self {
        Self {
            algorithm,
            max_iterations,
            initial_iterate: None,
            omega: 1.0,
            lbfgs_textbook: false,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::Validation("solver needs at least one iteration".into()));
        }
        if let Some(x0) = &self.initial_iterate {
            if x0.len() != n {
                return Err(Error::Dimension(format!(
                    "initial iterate has length {}, expected {n}",
                    x0.len()
                )));
            }
        }
        Ok(())
    }
}

/// Result of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub x: Vec<C64>,
    /// `‖b − A x_t‖` at the input iterate.
    pub input_residual_norm: f64,
    /// Curvature fell below the floor and the iterate was left unchanged.
    pub stagnated: bool,
}

/// Per-iteration record. Index 0 is the initial iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub residual_norms: Vec<f64>,
    /// Cumulative multiply-adds; entry 0 holds the setup cost.
    pub flops: Vec<u64>,
    /// Iterations (1-based) whose step stalled.
    pub stagnated: Vec<usize>,
    pub iterates: Vec<Vec<C64>>,
    pub solution: Vec<C64>,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len() - 1
    }

    pub fn setup_flops(&self) -> u64 {
        self.flops[0]
    }

    /// Multiply-adds spent in iteration `t` (1-based).
    pub fn iteration_flops(&self, t: usize) -> u64 {
        self.flops[t] - self.flops[t - 1]
    }

    /// CSV with columns `iteration,residual_norm,cumulative_flops`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,residual_norm,cumulative_flops\n");
        for (t, (r, f)) in self.residual_norms.iter().zip(&self.flops).enumerate() {
            out.push_str(&format!("{t},{r:e},{f}\n"));
        }
        out
    }
}

enum Engine {
    Richardson,
    Splitting(Preconditioner),
    Lbfgs(LbfgsState),
    Cg(CgState),
}

/// A solver bound to one problem.
pub struct Solver<'a> {
    problem: &'a DetectionProblem,
    engine: Engine,
    x: Vec<C64>,
    flops: Flops,
}

impl<'a> Solver<'a> {
    pub fn new(problem: &'a DetectionProblem, spec: &SolverSpec) -> Result<Self> {
        spec.validate(problem.n())?;
        let x = spec.initial_iterate.clone().unwrap_or_else(|| vec![ZERO; problem.n()]);
        let mut flops = Flops::default();
        let engine = match spec.algorithm {
            Algorithm::Ri => Engine::Richardson,
            Algorithm::Ji => Engine::Splitting(Preconditioner::new(problem, SplittingKind::Ji, 1.0, &mut flops)?),
            Algorithm::Gs => {
                Engine::Splitting(Preconditioner::new(problem, SplittingKind::Gs, spec.omega, &mut flops)?)
            }
            Algorithm::Ssor => Engine::Splitting(Preconditioner::new(
                problem,
                SplittingKind::Ssor,
                spec.omega,
                &mut flops,
            )?),
            Algorithm::Lbfgs => Engine::Lbfgs(LbfgsState::new(problem, spec.lbfgs_textbook, &mut flops)?),
            Algorithm::Cg => Engine::Cg(CgState::new(problem, &x, &mut flops)?),
        };
        Ok(Self {
            problem,
            engine,
            x,
            flops,
        })
    }

    pub fn iterate(&self) -> &[C64] {
        &self.x
    }

    pub fn flops(&self) -> Flops {
        self.flops
    }

    pub fn step(&mut self) -> Result<StepOutput> {
        let out = match &mut self.engine {
            Engine::Richardson => step_richardson(self.problem, &self.x, &mut self.flops),
            Engine::Splitting(pre) => step_matrix_splitting(self.problem, &self.x, pre, &mut self.flops)?,
            Engine::Lbfgs(state) => step_lbfgs(self.problem, state, &self.x, &mut self.flops),
            Engine::Cg(state) => step_cg(self.problem, state, &self.x, &mut self.flops),
        };
        self.x.clone_from(&out.x);
        Ok(out)
    }
}

/// Runs `spec.max_iterations` steps, calling `callback(t, x_t)` after each.
pub fn run(
    problem: &DetectionProblem,
    spec: &SolverSpec,
    mut callback: impl FnMut(usize, &[C64]),
) -> Result<SolverTrace> {
    run_with(problem, spec, false, &mut callback)
}

/// As [`run`], optionally keeping every iterate in the trace.
pub fn run_with(
    problem: &DetectionProblem,
    spec: &SolverSpec,
    keep_iterates: bool,
    callback: &mut dyn FnMut(usize, &[C64]),
) -> Result<SolverTrace> {
    let mut solver = Solver::new(problem, spec)?;
    let t_max = spec.max_iterations;
    let mut trace = SolverTrace {
        residual_norms: Vec::with_capacity(t_max + 1),
        flops: Vec::with_capacity(t_max + 1),
        stagnated: Vec::new(),
        iterates: Vec::new(),
        solution: Vec::new(),
    };
    trace.flops.push(solver.flops().get());
    if keep_iterates {
        trace.iterates.push(solver.iterate().to_vec());
    }
    for t in 1..=t_max {
        let out = solver.step()?;
        trace.residual_norms.push(out.input_residual_norm);
        trace.flops.push(solver.flops().get());
        if out.stagnated {
            trace.stagnated.push(t);
        }
        callback(t, &out.x);
        if keep_iterates {
            trace.iterates.push(out.x);
        }
    }
    // residual of the final iterate, outside the accounted cost
    let last = problem.residual(solver.iterate(), &mut Flops::default());
    trace.residual_norms.push(norm(&last));
    trace.solution = solver.iterate().to_vec();
    Ok(trace)
}

#[cfg(test)]
mod tests;
