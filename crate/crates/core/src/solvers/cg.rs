use super::StepOutput;
use crate::detect::DetectionProblem;
use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::linalg::{dot, norm, norm_sqr, C64};

use super::lbfgs::STAGNATION_FLOOR;

/// Conjugate gradients preconditioned by `D(A)⁻¹`; plain CG whenever the
/// diagonal is the identity.
#[derive(Debug, Clone)]
pub struct CgState {
    inv_diag: Option<Vec<f64>>,
    residual: Vec<C64>,
    z: Vec<C64>,
    direction: Vec<C64>,
    rz: f64,
}

impl CgState {
    pub fn new(problem: &DetectionProblem, x0: &[C64], flops: &mut Flops) -> Result<Self> {
        let inv_diag = if problem.has_unit_diagonal() {
            None
        } else {
            let d = problem.diagonal(flops);
            if let Some(i) = d.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(Error::Singular(format!(
                    "preconditioner diagonal entry {i} is {}",
                    d[i]
                )));
            }
            flops.add(d.len());
            Some(d.iter().map(|v| 1.0 / v).collect())
        };
        let residual = problem.residual(x0, flops);
        let mut state = Self {
            inv_diag,
            z: Vec::new(),
            direction: Vec::new(),
            rz: 0.0,
            residual,
        };
        state.z = state.precondition(&state.residual, flops);
        state.direction = state.z.clone();
        state.rz = dot(&state.residual, &state.z).re;
        Ok(state)
    }

    fn precondition(&self, r: &[C64], flops: &mut Flops) -> Vec<C64> {
        match &self.inv_diag {
            None => r.to_vec(),
            Some(inv) => {
                flops.add(r.len());
                r.iter().zip(inv).map(|(ri, d)| ri * *d).collect()
            }
        }
    }
}

pub fn step_cg(problem: &DetectionProblem, state: &mut CgState, x: &[C64], flops: &mut Flops) -> StepOutput {
    let n = x.len();
    let residual_norm = norm(&state.residual);
    let ap = problem.apply(&state.direction, flops);
    let curvature = dot(&state.direction, &ap).re;
    flops.add(n);
    // also stalls once the recursive residual has underflowed to zero
    if !(state.rz > 0.0 && curvature > STAGNATION_FLOOR * norm_sqr(&state.direction)) {
        return StepOutput {
            x: x.to_vec(),
            input_residual_norm: residual_norm,
            stagnated: true,
        };
    }
    let alpha = state.rz / curvature;
    let next: Vec<C64> = x.iter().zip(&state.direction).map(|(xi, pi)| xi + pi * alpha).collect();
    for (ri, api) in state.residual.iter_mut().zip(&ap) {
        *ri -= api * alpha;
    }
    let z = state.precondition(&state.residual, flops);
    let rz = dot(&state.residual, &z).re;
    let beta = rz / state.rz;
    for (pi, zi) in state.direction.iter_mut().zip(&z) {
        *pi = zi + *pi * beta;
    }
    flops.add(4 * n);
    state.z = z;
    state.rz = rz;
    StepOutput {
        x: next,
        input_residual_norm: residual_norm,
        stagnated: false,
    }
}
