//! Hermitian eigenvalue routines.
//!
//! Eigenvalues of a complex Hermitian matrix are computed through the real
//! symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is that of the
//! input with every eigenvalue doubled. The embedding is an algebra
//! homomorphism, so matrix functions (the square root in particular) commute
//! with it. Real input skips the embedding. Small problems that need complex
//! eigenvectors use cyclic Jacobi rotations instead.

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::flops::Flops;

/// Relative tolerance on ‖A − Aᴴ‖_F accepted as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Absolute eigenvalue floor below which `sqrt_psd` clamps to zero.
pub const PSD_CLAMP_FLOOR: f64 = 1e-12;
/// `cond_number` refuses matrices with λ_min below this fraction of λ_max.
pub const SINGULAR_FLOOR: f64 = 1e-14;

const MAX_QL_ITERATIONS: usize = 64;
const MAX_JACOBI_SWEEPS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenExtremes {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl EigenExtremes {
    pub fn ratio(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Square row-major real symmetric matrix, eigen-decomposed in place.
struct SymmetricEigen {
    n: usize,
    d: Vec<f64>,
    e: Vec<f64>,
    v: Vec<f64>,
}

impl SymmetricEigen {
    fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        let mut s = Self {
            n,
            d: vec![0.0; n],
            e: vec![0.0; n],
            v: a,
        };
        s.tred2();
        s.tql2()?;
        Ok(s)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.v[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.v[i * self.n + j]
    }

    // Householder tridiagonalization (EISPACK tred2).
    fn tred2(&mut self) {
        let n = self.n;
        for j in 0..n {
            self.d[j] = self.at(n - 1, j);
        }
        for i in (1..n).rev() {
            let mut scale = 0.0;
            let mut h = 0.0;
            for k in 0..i {
                scale += self.d[k].abs();
            }
            if scale == 0.0 {
                self.e[i] = self.d[i - 1];
                for j in 0..i {
                    self.d[j] = self.at(i - 1, j);
                    *self.at_mut(i, j) = 0.0;
                    *self.at_mut(j, i) = 0.0;
                }
            } else {
                for k in 0..i {
                    self.d[k] /= scale;
                    h += self.d[k] * self.d[k];
                }
                let mut f = self.d[i - 1];
                let mut g = h.sqrt();
                if f > 0.0 {
                    g = -g;
                }
                self.e[i] = scale * g;
                h -= f * g;
                self.d[i - 1] = f - g;
                for j in 0..i {
                    self.e[j] = 0.0;
                }
                for j in 0..i {
                    f = self.d[j];
                    *self.at_mut(j, i) = f;
                    g = self.e[j] + self.at(j, j) * f;
                    for k in (j + 1)..i {
                        g += self.at(k, j) * self.d[k];
                        self.e[k] += self.at(k, j) * f;
                    }
                    self.e[j] = g;
                }
                f = 0.0;
                for j in 0..i {
                    self.e[j] /= h;
                    f += self.e[j] * self.d[j];
                }
                let hh = f / (h + h);
                for j in 0..i {
                    self.e[j] -= hh * self.d[j];
                }
                for j in 0..i {
                    f = self.d[j];
                    g = self.e[j];
                    for k in j..i {
                        let delta = f * self.e[k] + g * self.d[k];
                        *self.at_mut(k, j) -= delta;
                    }
                    self.d[j] = self.at(i - 1, j);
                    *self.at_mut(i, j) = 0.0;
                }
            }
            self.d[i] = h;
        }

        for i in 0..n.saturating_sub(1) {
            let vii = self.at(i, i);
            *self.at_mut(n - 1, i) = vii;
            *self.at_mut(i, i) = 1.0;
            let h = self.d[i + 1];
            if h != 0.0 {
                for k in 0..=i {
                    self.d[k] = self.at(k, i + 1) / h;
                }
                for j in 0..=i {
                    let mut g = 0.0;
                    for k in 0..=i {
                        g += self.at(k, i + 1) * self.at(k, j);
                    }
                    for k in 0..=i {
                        let dk = self.d[k];
                        *self.at_mut(k, j) -= g * dk;
                    }
                }
            }
            for k in 0..=i {
                *self.at_mut(k, i + 1) = 0.0;
            }
        }
        for j in 0..n {
            self.d[j] = self.at(n - 1, j);
            *self.at_mut(n - 1, j) = 0.0;
        }
        *self.at_mut(n - 1, n - 1) = 1.0;
        self.e[0] = 0.0;
    }

    // Implicit-shift QL on the tridiagonal form (EISPACK tql2); sorts ascending.
    fn tql2(&mut self) -> Result<()> {
        let n = self.n;
        for i in 1..n {
            self.e[i - 1] = self.e[i];
        }
        self.e[n - 1] = 0.0;

        let mut f = 0.0;
        let mut tst1: f64 = 0.0;
        let eps = f64::EPSILON;
        for l in 0..n {
            tst1 = tst1.max(self.d[l].abs() + self.e[l].abs());
            let mut m = l;
            while m < n {
                if self.e[m].abs() <= eps * tst1 {
                    break;
                }
                m += 1;
            }
            if m > l {
                let mut iter = 0;
                loop {
                    iter += 1;
                    if iter > MAX_QL_ITERATIONS {
                        return Err(Error::NoConvergence {
                            what: "tridiagonal QL",
                            residual: self.e[l].abs(),
                        });
                    }
                    let mut g = self.d[l];
                    let mut p = (self.d[l + 1] - g) / (2.0 * self.e[l]);
                    let mut r = p.hypot(1.0);
                    if p < 0.0 {
                        r = -r;
                    }
                    self.d[l] = self.e[l] / (p + r);
                    self.d[l + 1] = self.e[l] * (p + r);
                    let dl1 = self.d[l + 1];
                    let mut h = g - self.d[l];
                    for i in (l + 2)..n {
                        self.d[i] -= h;
                    }
                    f += h;

                    p = self.d[m];
                    let mut c = 1.0;
                    let mut c2 = c;
                    let mut c3 = c;
                    let el1 = self.e[l + 1];
                    let mut s = 0.0;
                    let mut s2 = 0.0;
                    for i in (l..m).rev() {
                        c3 = c2;
                        c2 = c;
                        s2 = s;
                        g = c * self.e[i];
                        h = c * p;
                        r = p.hypot(self.e[i]);
                        self.e[i + 1] = s * r;
                        s = self.e[i] / r;
                        c = p / r;
                        p = c * self.d[i] - s * g;
                        self.d[i + 1] = h + s * (c * g + s * self.d[i]);
                        for k in 0..n {
                            let vk1 = self.at(k, i + 1);
                            let vk = self.at(k, i);
                            *self.at_mut(k, i + 1) = s * vk + c * vk1;
                            *self.at_mut(k, i) = c * vk - s * vk1;
                        }
                    }
                    p = -s * s2 * c3 * el1 * self.e[l] / dl1;
                    self.e[l] = s * p;
                    self.d[l] = c * p;
                    if self.e[l].abs() <= eps * tst1 {
                        break;
                    }
                }
            }
            self.d[l] += f;
            self.e[l] = 0.0;
        }

        for i in 0..n.saturating_sub(1) {
            let mut k = i;
            let mut p = self.d[i];
            for j in (i + 1)..n {
                if self.d[j] < p {
                    k = j;
                    p = self.d[j];
                }
            }
            if k != i {
                self.d[k] = self.d[i];
                self.d[i] = p;
                for j in 0..n {
                    self.v.swap(j * n + i, j * n + k);
                }
            }
        }
        Ok(())
    }
}

fn validate_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.frobenius_norm().max(1.0);
    let defect = a.hermitian_defect();
    if !(defect <= HERMITIAN_TOLERANCE * scale) {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (‖A − Aᴴ‖_F = {defect:e})"
        )));
    }
    Ok(())
}

/// Real symmetric matrix (or embedding) that represents `a`.
enum RealForm {
    Direct(SymmetricEigen),
    Embedded(SymmetricEigen),
}

fn real_form(a: &ComplexMatrix) -> Result<RealForm> {
    let n = a.rows();
    if a.is_real() {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                // symmetrize so the routine sees exact symmetry
                v[i * n + j] = 0.5 * (a[(i, j)].re + a[(j, i)].re);
            }
        }
        Ok(RealForm::Direct(SymmetricEigen::new(n, v)?))
    } else {
        let m = 2 * n;
        let mut v = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = 0.5 * (a[(i, j)] + a[(j, i)].conj());
                v[i * m + j] = z.re;
                v[(i + n) * m + (j + n)] = z.re;
                v[i * m + (j + n)] = -z.im;
                v[(i + n) * m + j] = z.im;
            }
        }
        Ok(RealForm::Embedded(SymmetricEigen::new(m, v)?))
    }
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    validate_hermitian(a)?;
    Ok(match real_form(a)? {
        RealForm::Direct(s) => s.d,
        RealForm::Embedded(s) => s.d.iter().step_by(2).copied().collect(),
    })
}

/// Smallest and largest eigenvalue of a Hermitian positive semi-definite matrix.
pub fn eigen_extremes_hermitian(a: &ComplexMatrix) -> Result<EigenExtremes> {
    let values = hermitian_eigenvalues(a)?;
    let lambda_max = *values.last().expect("non-empty spectrum");
    let mut lambda_min = values[0];
    let floor = PSD_CLAMP_FLOOR * lambda_max.abs().max(1.0);
    if lambda_min < -floor {
        return Err(Error::Validation(format!(
            "matrix is not positive semi-definite (λ_min = {lambda_min:e})"
        )));
    }
    lambda_min = lambda_min.max(0.0);
    Ok(EigenExtremes { lambda_min, lambda_max })
}

/// λ_max / λ_min of a Hermitian positive definite matrix.
pub fn cond_number(a: &ComplexMatrix) -> Result<f64> {
    let ext = eigen_extremes_hermitian(a)?;
    if !(ext.lambda_min > SINGULAR_FLOOR * ext.lambda_max) {
        return Err(Error::Singular(format!(
            "λ_min = {:e} vs λ_max = {:e}",
            ext.lambda_min, ext.lambda_max
        )));
    }
    Ok(ext.ratio())
}

/// Principal square root of a Hermitian PSD matrix.
pub fn sqrt_psd(r: &ComplexMatrix) -> Result<ComplexMatrix> {
    validate_hermitian(r)?;
    let n = r.rows();
    let form = real_form(r)?;
    let (s, dim) = match &form {
        RealForm::Direct(s) => (s, n),
        RealForm::Embedded(s) => (s, 2 * n),
    };
    let lambda_max = s.d[dim - 1].abs();
    let floor = PSD_CLAMP_FLOOR * lambda_max.max(1.0);
    let mut roots = Vec::with_capacity(dim);
    for &lambda in &s.d {
        if lambda < -floor {
            return Err(Error::Validation(format!("matrix has negative eigenvalue {lambda:e}")));
        }
        roots.push(lambda.max(0.0).sqrt());
    }
    // S = Q diag(roots) Qᵀ, only the blocks that map back to the complex matrix
    let entry = |i: usize, j: usize| -> f64 { (0..dim).map(|k| s.at(i, k) * roots[k] * s.at(j, k)).sum() };
    let out = match form {
        RealForm::Direct(_) => {
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v = entry(i, j);
                    m[(i, j)] = C64::new(v, 0.0);
                    m[(j, i)] = C64::new(v, 0.0);
                }
            }
            m
        }
        RealForm::Embedded(_) => {
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let z = C64::new(entry(i, j), entry(i + n, j));
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
                m[(i, i)].im = 0.0;
            }
            m
        }
    };
    Ok(out)
}

/// Full eigendecomposition by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose columns
/// are the matching eigenvectors. Intended for small matrices.
pub fn hermitian_jacobi_eigen(a: &ComplexMatrix, flops: &mut Flops) -> Result<(Vec<f64>, ComplexMatrix)> {
    validate_hermitian(a)?;
    let n = a.rows();
    let mut w = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let total = w.frobenius_norm_sqr();
    let mut converged = n == 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += w[(p, q)].norm_sqr();
            }
        }
        if off <= (f64::EPSILON * f64::EPSILON) * total || off == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let (c, s, phase) = jacobi_rotation(w[(p, p)].re, w[(q, q)].re, apq);
                rotate_columns(&mut w, p, q, c, s, phase);
                rotate_rows(&mut w, p, q, c, s, phase);
                rotate_columns(&mut v, p, q, c, s, phase);
                w[(p, q)] = ZERO;
                w[(q, p)] = ZERO;
                w[(p, p)].im = 0.0;
                w[(q, q)].im = 0.0;
                flops.add(6 * n);
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| w[(p, q)].norm_sqr())
            .sum();
        return Err(Error::NoConvergence {
            what: "Hermitian Jacobi",
            residual: off.sqrt(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.total_cmp(&w[(j, j)].re));
    let values = order.iter().map(|&i| w[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Rotation (c, s, e^{iφ}) annihilating the (p, q) entry of the Hermitian
/// 2×2 block [[a_pp, a_pq], [conj(a_pq), a_qq]].
pub(crate) fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let mag = apq.norm();
    let phase = apq / mag;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c, phase)
}

/// A ← A·G with G_pp = c, G_pq = s, G_qp = −s·e^{−iφ}, G_qq = c·e^{−iφ}.
pub(crate) fn rotate_columns(a: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let pc = phase.conj();
    for k in 0..a.rows() {
        let akp = a[(k, p)];
        let akq = a[(k, q)] * pc;
        a[(k, p)] = akp * c - akq * s;
        a[(k, q)] = akp * s + akq * c;
    }
}

/// A ← Gᴴ·A for the same G as [`rotate_columns`].
fn rotate_rows(a: &mut ComplexMatrix, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    for k in 0..a.cols() {
        let apk = a[(p, k)];
        let aqk = a[(q, k)] * phase;
        a[(p, k)] = apk * c - aqk * s;
        a[(q, k)] = apk * s + aqk * c;
    }
}
