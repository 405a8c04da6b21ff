use super::StepOutput;
use crate::detect::DetectionProblem;
use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::linalg::{dot, norm, norm_sqr, C64};

/// Curvature `dᴴAd` at or below this multiple of `‖d‖²` stalls a step.
pub const STAGNATION_FLOOR: f64 = 1e-14;

/// Memory-one quasi-Newton state for the quadratic `½xᴴAx − Re(bᴴx)`.
///
/// The direction is `d_t = Θ_t g_t` with `g_t = A x_t − b`,
/// `Θ_0 = D(A)⁻¹` and, for `t ≥ 1`,
/// `Θ_t = (Δs Δgᴴ / (Δsᴴ Δg) − I) Θ_0`. The step size is the exact line
/// search `ξ_t = −gᴴd / dᴴAd`.
///
/// With `textbook` set, the direction is instead the standard memory-one
/// BFGS direction `−H_t g_t`,
/// `H_t = (I − ρΔsΔgᴴ) Θ_0 (I − ρΔgΔsᴴ) + ρΔsΔsᴴ`, `ρ = 1/Re(ΔgᴴΔs)`.
#[derive(Debug, Clone)]
pub struct LbfgsState {
    theta0: Vec<f64>,
    textbook: bool,
    delta_s: Option<Vec<C64>>,
    delta_g: Option<Vec<C64>>,
}

impl LbfgsState {
    pub fn new(problem: &DetectionProblem, textbook: bool, flops: &mut Flops) -> Result<Self> {
        let diag = problem.diagonal(flops);
        if let Some(i) = diag.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::Singular(format!("Hessian diagonal entry {i} is {}", diag[i])));
        }
        let theta0 = if problem.has_unit_diagonal() {
            diag
        } else {
            flops.add(diag.len());
            diag.iter().map(|d| 1.0 / d).collect()
        };
        Ok(Self {
            theta0,
            textbook,
            delta_s: None,
            delta_g: None,
        })
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    fn direction(&self, g: &[C64], flops: &mut Flops) -> Vec<C64> {
        let n = g.len();
        let precondition = |v: &[C64], flops: &mut Flops| -> Vec<C64> {
            flops.add(n);
            v.iter().zip(&self.theta0).map(|(vi, t)| vi * *t).collect()
        };
        let (Some(ds), Some(dg)) = (&self.delta_s, &self.delta_g) else {
            return precondition(g, flops);
        };
        let curvature = dot(ds, dg);
        flops.add(n);
        if self.textbook {
            let rho = 1.0 / curvature.re;
            // q = (I − ρ Δg Δsᴴ) g
            let sg = dot(ds, g);
            let q: Vec<C64> = g.iter().zip(dg).map(|(gi, yi)| gi - yi * (sg * rho)).collect();
            let r = precondition(&q, flops);
            // (I − ρ Δs Δgᴴ) r + ρ Δs (Δsᴴ g)
            let yr = dot(dg, &r);
            flops.add(4 * n);
            r.iter()
                .zip(ds)
                .map(|(ri, si)| -(ri - si * (yr * rho) + si * (sg * rho)))
                .collect()
        } else {
            let t0g = precondition(g, flops);
            let coeff = dot(dg, &t0g) / curvature;
            flops.add(2 * n);
            t0g.iter().zip(ds).map(|(ti, si)| si * coeff - ti).collect()
        }
    }
}

pub fn step_lbfgs(problem: &DetectionProblem, state: &mut LbfgsState, x: &[C64], flops: &mut Flops) -> StepOutput {
    let n = x.len();
    // g = A x − b
    let mut g = problem.apply(x, flops);
    for (gi, bi) in g.iter_mut().zip(problem.rhs()) {
        *gi -= bi;
    }
    let residual_norm = norm(&g);
    let d = state.direction(&g, flops);
    let ad = problem.apply(&d, flops);
    let curvature = dot(&d, &ad).re;
    let gd = dot(&g, &d);
    flops.add(2 * n);
    if !(curvature > STAGNATION_FLOOR * norm_sqr(&d)) {
        return StepOutput {
            x: x.to_vec(),
            input_residual_norm: residual_norm,
            stagnated: true,
        };
    }
    let xi = -gd / curvature;
    let next: Vec<C64> = x.iter().zip(&d).map(|(xi_, di)| xi_ + di * xi).collect();
    flops.add(n);
    state.delta_s = Some(d.iter().map(|di| di * xi).collect());
    state.delta_g = Some(ad.iter().map(|ai| ai * xi).collect());
    flops.add(2 * n);
    StepOutput {
        x: next,
        input_residual_norm: residual_norm,
        stagnated: false,
    }
}
