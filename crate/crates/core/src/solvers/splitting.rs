use serde::{Deserialize, Serialize};

use super::StepOutput;
use crate::detect::DetectionProblem;
use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::linalg::{backward_substitute_adjoint, forward_substitute, norm, ComplexMatrix, C64, ZERO};

/// `x_{t+1} = x_t + (b − A x_t)`.
pub fn step_richardson(problem: &DetectionProblem, x: &[C64], flops: &mut Flops) -> StepOutput {
    let r = problem.residual(x, flops);
    let residual_norm = norm(&r);
    let next = x.iter().zip(&r).map(|(xi, ri)| xi + ri).collect();
    StepOutput {
        x: next,
        input_residual_norm: residual_norm,
        stagnated: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingKind {
    Ji,
    Gs,
    Ssor,
}

/// Matrix-splitting preconditioner `M`, applied through diagonal and
/// triangular solves.
///
/// With relaxation `ω` the splittings are `M_JI = D`,
/// `M_GS = D/ω + L₀` and `M_SSOR = ω/(2−ω) · (D/ω + L₀)(D/ω)⁻¹(D/ω + L₀)ᴴ`,
/// where `L₀` is the strictly lower part of `A`. At `ω = 1` these reduce to
/// `D`, `L` and `L D⁻¹ Lᴴ` with `L` the lower triangle including `D`.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: SplittingKind,
    omega: f64,
    diag: Vec<f64>,
    unit_diagonal: bool,
    /// Materialized operator, used for residuals (GS, SSOR).
    a: Option<ComplexMatrix>,
    /// `D/ω + L₀` (GS, SSOR).
    lower: Option<ComplexMatrix>,
}

impl Preconditioner {
    pub fn new(problem: &DetectionProblem, kind: SplittingKind, omega: f64, flops: &mut Flops) -> Result<Self> {
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::Validation(format!("relaxation omega = {omega} outside (0, 2)")));
        }
        let (diag, a, lower) = match kind {
            SplittingKind::Ji => (problem.diagonal(flops), None, None),
            SplittingKind::Gs | SplittingKind::Ssor => {
                let a = problem.materialize(flops);
                let diag = if problem.has_unit_diagonal() {
                    vec![1.0; a.rows()]
                } else {
                    a.diagonal().iter().map(|z| z.re).collect()
                };
                let mut lower = a.lower_triangle();
                for (i, &d) in diag.iter().enumerate() {
                    lower[(i, i)] = C64::new(d / omega, 0.0);
                }
                (diag, Some(a), Some(lower))
            }
        };
        if let Some(i) = diag.iter().position(|d| !(d.abs() > 0.0) || !d.is_finite()) {
            return Err(Error::Singular(format!(
                "preconditioner diagonal entry {i} is {}",
                diag[i]
            )));
        }
        Ok(Self {
            kind,
            omega,
            unit_diagonal: problem.has_unit_diagonal(),
            diag,
            a,
            lower,
        })
    }

    pub fn kind(&self) -> SplittingKind {
        self.kind
    }

    /// Dense `M`, for consistency checks.
    pub fn materialize(&self) -> ComplexMatrix {
        let n = self.diag.len();
        match self.kind {
            SplittingKind::Ji => ComplexMatrix::from_real_diagonal(&self.diag),
            SplittingKind::Gs => self.lower.clone().expect("GS keeps its factor"),
            SplittingKind::Ssor => {
                let l = self.lower.as_ref().expect("SSOR keeps its factor");
                let w = self.omega;
                let scaled = ComplexMatrix::from_fn(n, n, |i, j| l[(i, j)] * (w / self.diag[j]));
                scaled
                    .matmul(&l.adjoint())
                    .expect("square factors")
                    .scale(w / (2.0 - w))
            }
        }
    }

    /// `M⁻¹ r` in place.
    pub fn solve_in_place(&self, r: &mut [C64], flops: &mut Flops) -> Result<()> {
        let n = r.len();
        match self.kind {
            SplittingKind::Ji => {
                if !self.unit_diagonal {
                    for (ri, d) in r.iter_mut().zip(&self.diag) {
                        *ri /= *d;
                    }
                    flops.add(n);
                }
            }
            SplittingKind::Gs => {
                forward_substitute(self.lower.as_ref().expect("GS keeps its factor"), r)?;
                flops.add(n * (n + 1) / 2);
            }
            SplittingKind::Ssor => {
                let l = self.lower.as_ref().expect("SSOR keeps its factor");
                forward_substitute(l, r)?;
                if !(self.unit_diagonal && self.omega == 1.0) {
                    let w = self.omega;
                    let c = (2.0 - w) / w;
                    for (ri, d) in r.iter_mut().zip(&self.diag) {
                        *ri *= c * d / w;
                    }
                    flops.add(n);
                }
                backward_substitute_adjoint(l, r)?;
                flops.add(n * (n + 1));
            }
        }
        Ok(())
    }

    fn residual(&self, problem: &DetectionProblem, x: &[C64], flops: &mut Flops) -> Vec<C64> {
        match &self.a {
            Some(a) => {
                let mut r = vec![ZERO; x.len()];
                a.mul_vec_into(x, &mut r);
                flops.add(x.len() * x.len());
                for (ri, bi) in r.iter_mut().zip(problem.rhs()) {
                    *ri = bi - *ri;
                }
                r
            }
            None => problem.residual(x, flops),
        }
    }
}

/// `x_{t+1} = x_t + M⁻¹(b − A x_t)`.
pub fn step_matrix_splitting(
    problem: &DetectionProblem,
    x: &[C64],
    preconditioner: &Preconditioner,
    flops: &mut Flops,
) -> Result<StepOutput> {
    let mut r = preconditioner.residual(problem, x, flops);
    let residual_norm = norm(&r);
    preconditioner.solve_in_place(&mut r, flops)?;
    Ok(StepOutput {
        x: x.iter().zip(&r).map(|(xi, ri)| xi + ri).collect(),
        input_residual_norm: residual_norm,
        stagnated: false,
    })
}
