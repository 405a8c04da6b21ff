//! Economy-size singular value decomposition of tall complex matrices.

use super::eigen::{hermitian_jacobi_eigen, jacobi_rotation, rotate_columns};
use super::matrix::{dot, norm, ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::flops::Flops;

const MAX_SWEEPS: usize = 80;

/// `a = u · diag(singular_values) · vᴴ` with `u` m×n and `v` n×n.
#[derive(Debug, Clone)]
pub struct EconomySvd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl EconomySvd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (j, &s) in self.singular_values.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        us.matmul(&self.v.adjoint()).expect("conforming factors")
    }
}

fn check_tall(a: &ComplexMatrix) -> Result<()> {
    if a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "economy SVD needs rows >= cols, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Validation("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn economy_svd(a: &ComplexMatrix) -> Result<EconomySvd> {
    check_tall(a)?;
    let n = a.cols();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let tol = f64::EPSILON * (a.rows() as f64).sqrt();
    let mut worst = 0.0;
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        worst = 0.0f64;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let cp = w.column(p);
                let cq = w.column(q);
                let alpha = cp.iter().map(|z| z.norm_sqr()).sum::<f64>();
                let beta = cq.iter().map(|z| z.norm_sqr()).sum::<f64>();
                let gamma = dot(&cp, &cq);
                let scale = (alpha * beta).sqrt();
                if scale == 0.0 {
                    continue;
                }
                let rel = gamma.norm() / scale;
                worst = worst.max(rel);
                if rel <= tol {
                    continue;
                }
                rotated = true;
                let (c, s, phase) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            what: "one-sided Jacobi SVD",
            residual: worst,
        });
    }
    let sigma: Vec<f64> = (0..n).map(|j| norm(&w.column(j))).collect();
    Ok(finish(w, sigma, v, true))
}

/// SVD through the eigendecomposition of the n×n Gram matrix.
///
/// Costs about m·n(n+1)/2 + m·n² multiply-adds plus O(n³), against the
/// several m·n² sweeps of [`economy_svd`]. Orthonormality of `u` degrades
/// with cond(a)², so this is meant for short, moderately conditioned blocks.
/// `u` is defined as `a · v · diag(σ)⁻¹`, which keeps `u·Σ·vᴴ = a` to
/// working precision irrespective of that loss.
pub fn economy_svd_gram(a: &ComplexMatrix, flops: &mut Flops) -> Result<EconomySvd> {
    check_tall(a)?;
    let (m, n) = (a.rows(), a.cols());
    let gram = a.gram();
    flops.add(m * n * (n + 1) / 2);
    let (values, vectors) = hermitian_jacobi_eigen(&gram, flops)?;
    // descending order
    let order: Vec<usize> = (0..n).rev().collect();
    let sigma: Vec<f64> = order.iter().map(|&k| values[k].max(0.0).sqrt()).collect();
    let v = ComplexMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    let smax = sigma[0];
    // columns of v scaled by 1/σ, then u = a · (v Σ⁻¹)
    let scaled = ComplexMatrix::from_fn(n, n, |i, j| if sigma[j] > 0.0 { v[(i, j)] / sigma[j] } else { ZERO });
    flops.add(n * n);
    let u = a.matmul(&scaled)?;
    flops.add(m * n * n);
    let mut out = finish_sorted(u, sigma, v);
    complete_null_columns(&mut out, smax);
    Ok(out)
}

/// Normalizes columns of `w` into `u`, sorts by decreasing singular value and
/// applies the phase convention.
fn finish(w: ComplexMatrix, sigma: Vec<f64>, v: ComplexMatrix, normalize: bool) -> EconomySvd {
    let (m, n) = (w.rows(), w.cols());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let sorted_sigma: Vec<f64> = order.iter().map(|&k| sigma[k]).collect();
    let mut u = ComplexMatrix::zeros(m, n);
    for (j, &k) in order.iter().enumerate() {
        let s = sigma[k];
        for i in 0..m {
            u[(i, j)] = if normalize && s > 0.0 { w[(i, k)] / s } else { w[(i, k)] };
        }
    }
    let v_sorted = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    let smax = sorted_sigma.first().copied().unwrap_or(0.0);
    let mut out = finish_sorted(u, sorted_sigma, v_sorted);
    complete_null_columns(&mut out, smax);
    out
}

/// Makes the first non-negligible entry of each `u` column real and
/// non-negative, absorbing the phase into the matching `v` column.
fn finish_sorted(mut u: ComplexMatrix, sigma: Vec<f64>, mut v: ComplexMatrix) -> EconomySvd {
    let (m, n) = (u.rows(), u.cols());
    for j in 0..n {
        let col_scale = (0..m).map(|i| u[(i, j)].norm()).fold(0.0, f64::max);
        if col_scale == 0.0 {
            continue;
        }
        if let Some(lead) = (0..m).map(|i| u[(i, j)]).find(|z| z.norm() > 1e-8 * col_scale) {
            let rot = lead.conj() / lead.norm();
            for i in 0..m {
                u[(i, j)] *= rot;
            }
            for i in 0..n {
                v[(i, j)] *= rot;
            }
        }
    }
    EconomySvd {
        u,
        singular_values: sigma,
        v,
    }
}

/// Replaces `u` columns of numerically zero singular values with an
/// orthonormal completion so that uᴴu = I still holds.
fn complete_null_columns(svd: &mut EconomySvd, smax: f64) {
    let (m, n) = (svd.u.rows(), svd.u.cols());
    let floor = f64::EPSILON * (m as f64) * smax;
    for j in 0..n {
        if svd.singular_values[j] > floor && smax > 0.0 {
            continue;
        }
        let mut filled = false;
        for e in 0..m {
            let mut cand = vec![ZERO; m];
            cand[e] = C64::new(1.0, 0.0);
            for k in 0..n {
                if k == j {
                    continue;
                }
                let uk = svd.u.column(k);
                let proj = dot(&uk, &cand);
                for (c, x) in cand.iter_mut().zip(&uk) {
                    *c -= proj * x;
                }
            }
            let len = norm(&cand);
            if len > 0.5 {
                for c in cand.iter_mut() {
                    *c /= len;
                }
                svd.u.set_column(j, &cand);
                filled = true;
                break;
            }
        }
        debug_assert!(filled, "orthonormal completion exists for m >= n");
    }
}
