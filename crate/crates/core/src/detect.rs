//! Detection problems in original and e-signal coordinates.
//!
//! With the user-wise SVD `H = Ψ Σ Vᴴ`, detection of `x` from `y = Hx + z`
//! becomes detection of `s = Σ Vᴴ x` from `y = Ψ s + z`. The linear systems
//! solved are
//!
//! - original: `A x = b` with `A = HᴴH (+ ρ⁻¹ I)`, `b = Hᴴ y`;
//! - e-signal: `Φ s = δ` with `Φ = ΨᴴΨ (+ ρ⁻¹ Σ⁻²)`, `δ = Ψᴴ y`,
//!
//! and `x̂ = V Σ⁻¹ ŝ` maps an e-signal solution back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flops::Flops;
use crate::linalg::{backward_substitute_adjoint, forward_substitute};
use crate::linalg::{cholesky, economy_svd_gram, ComplexMatrix, C64, ZERO};

/// Ratio σ_min/σ_max below which a user block is treated as rank deficient.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Eigenvalues of a user Gram block within this multiple of `ε·λ_max` are
/// indistinguishable from zero.
const GRAM_RESOLUTION: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Zf,
    Lmmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Coords {
    #[serde(rename = "orig")]
    Original,
    #[serde(rename = "uwsvd")]
    ESignal,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Zf => "zf",
            Mode::Lmmse => "lmmse",
        }
    }
}

impl Coords {
    pub fn name(self) -> &'static str {
        match self {
            Coords::Original => "orig",
            Coords::ESignal => "uwsvd",
        }
    }
}

/// `H = Ψ · diag(σ) · blockdiag(V_1, …, V_K)ᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct UwSvdFactors {
    pub psi: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v_blocks: Vec<ComplexMatrix>,
    pub partition: Vec<usize>,
}

impl UwSvdFactors {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn offsets(&self) -> Vec<usize> {
        offsets(&self.partition)
    }

    pub fn block_diagonal_v(&self) -> ComplexMatrix {
        let n = self.n();
        let mut v = ComplexMatrix::zeros(n, n);
        for (vk, &start) in self.v_blocks.iter().zip(&self.offsets()) {
            for i in 0..vk.rows() {
                for j in 0..vk.cols() {
                    v[(start + i, start + j)] = vk[(i, j)];
                }
            }
        }
        v
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let scaled = ComplexMatrix::from_fn(self.psi.rows(), self.n(), |i, j| self.psi[(i, j)] * self.sigma[j]);
        scaled
            .matmul(&self.block_diagonal_v().adjoint())
            .expect("factor shapes agree by construction")
    }

    /// `Σ Vᴴ x`.
    pub fn forward(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len("x", x.len(), self.n())?;
        let mut s = vec![ZERO; self.n()];
        for (vk, &start) in self.v_blocks.iter().zip(&self.offsets()) {
            let nk = vk.rows();
            let sk = vk.adjoint_mul_vec(&x[start..start + nk])?;
            for (i, z) in sk.into_iter().enumerate() {
                s[start + i] = z * self.sigma[start + i];
            }
        }
        Ok(s)
    }
}

fn offsets(partition: &[usize]) -> Vec<usize> {
    partition
        .iter()
        .scan(0, |acc, &nk| {
            let start = *acc;
            *acc += nk;
            Some(start)
        })
        .collect()
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

fn check_partition(h: &ComplexMatrix, partition: &[usize]) -> Result<()> {
    if partition.is_empty() || partition.contains(&0) {
        return Err(Error::Validation(format!("invalid user partition {partition:?}")));
    }
    if partition.iter().sum::<usize>() != h.cols() {
        return Err(Error::Dimension(format!(
            "partition {partition:?} does not sum to {} columns",
            h.cols()
        )));
    }
    if let Some(&nk) = partition.iter().find(|&&nk| nk > h.rows()) {
        return Err(Error::Dimension(format!(
            "user with {nk} antennas exceeds {} rows",
            h.rows()
        )));
    }
    Ok(())
}

pub fn uw_svd(h: &ComplexMatrix, partition: &[usize]) -> Result<UwSvdFactors> {
    uw_svd_counted(h, partition, &mut Flops::default())
}

/// User-wise economy SVD, accumulating multiply-adds into `flops`.
pub fn uw_svd_counted(h: &ComplexMatrix, partition: &[usize], flops: &mut Flops) -> Result<UwSvdFactors> {
    check_partition(h, partition)?;
    let mut psi = ComplexMatrix::zeros(h.rows(), h.cols());
    let mut sigma = Vec::with_capacity(h.cols());
    let mut v_blocks = Vec::with_capacity(partition.len());
    for (k, (&start, &nk)) in offsets(partition).iter().zip(partition).enumerate() {
        let block = h.columns(start, nk);
        let svd = economy_svd_gram(&block, flops)?;
        let smax = svd.singular_values[0];
        let smin = svd.singular_values[nk - 1];
        let resolvable = smin * smin > GRAM_RESOLUTION * f64::EPSILON * smax * smax;
        if !(smax > 0.0) || smin < SIGMA_FLOOR * smax || !resolvable {
            return Err(Error::DegenerateChannel {
                user: k,
                ratio: if smax > 0.0 { smin / smax } else { 0.0 },
            });
        }
        psi.set_columns(start, &svd.u);
        sigma.extend_from_slice(&svd.singular_values);
        v_blocks.push(svd.v);
    }
    Ok(UwSvdFactors {
        psi,
        sigma,
        v_blocks,
        partition: partition.to_vec(),
    })
}

/// `x̂ = V Σ⁻¹ ŝ`, block by block.
pub fn post_process(factors: &UwSvdFactors, s_hat: &[C64]) -> Result<Vec<C64>> {
    post_process_counted(factors, s_hat, &mut Flops::default())
}

pub fn post_process_counted(factors: &UwSvdFactors, s_hat: &[C64], flops: &mut Flops) -> Result<Vec<C64>> {
    check_len("e-signal estimate", s_hat.len(), factors.n())?;
    guard_sigma(factors)?;
    let mut x = vec![ZERO; factors.n()];
    for (vk, &start) in factors.v_blocks.iter().zip(&factors.offsets()) {
        let nk = vk.rows();
        let scaled: Vec<C64> = (start..start + nk).map(|i| s_hat[i] / factors.sigma[i]).collect();
        vk.mul_vec_into(&scaled, &mut x[start..start + nk]);
        flops.add(nk + nk * nk);
    }
    Ok(x)
}

fn guard_sigma(factors: &UwSvdFactors) -> Result<()> {
    for (k, &start) in factors.offsets().iter().enumerate() {
        let block = &factors.sigma[start..start + factors.partition[k]];
        let smax = block.iter().cloned().fold(0.0, f64::max);
        let smin = block.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(smax > 0.0) || smin < SIGMA_FLOOR * smax {
            return Err(Error::DegenerateChannel {
                user: k,
                ratio: smin / smax,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Operator {
    /// `Fᴴ F + diag(reg)`, applied as two passes over the M×N factor.
    Factored { factor: ComplexMatrix, reg: Vec<f64> },
    /// Explicit Hermitian matrix.
    Explicit(ComplexMatrix),
}

/// Hermitian positive (semi-)definite system `A x = b` in operator form.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProblem {
    operator: Operator,
    rhs: Vec<C64>,
    mode: Mode,
    coords: Coords,
    /// Diagonal is known to be all ones without computation.
    unit_diagonal: bool,
}

fn regularizer(mode: Mode, rho: f64, n: usize, sigma: Option<&[f64]>) -> Result<Vec<f64>> {
    match mode {
        Mode::Zf => Ok(vec![0.0; n]),
        Mode::Lmmse => {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::Validation(format!(
                    "LMMSE needs a positive finite SNR, got {rho}"
                )));
            }
            Ok(match sigma {
                None => vec![1.0 / rho; n],
                Some(s) => s.iter().map(|&si| 1.0 / (rho * si * si)).collect(),
            })
        }
    }
}

/// `A = HᴴH (+ρ⁻¹I)`, `b = Hᴴy`; `rho` is the linear SNR.
pub fn build_problem_original(h: &ComplexMatrix, y: &[C64], mode: Mode, rho: f64) -> Result<DetectionProblem> {
    check_len("received vector", y.len(), h.rows())?;
    let reg = regularizer(mode, rho, h.cols(), None)?;
    Ok(DetectionProblem {
        rhs: h.adjoint_mul_vec(y)?,
        operator: Operator::Factored { factor: h.clone(), reg },
        mode,
        coords: Coords::Original,
        unit_diagonal: false,
    })
}

/// `Φ = ΨᴴΨ (+ρ⁻¹Σ⁻²)`, `δ = Ψᴴy`; `rho` is the linear SNR.
pub fn build_problem_esignal(factors: &UwSvdFactors, y: &[C64], mode: Mode, rho: f64) -> Result<DetectionProblem> {
    check_len("received vector", y.len(), factors.psi.rows())?;
    guard_sigma(factors)?;
    let reg = regularizer(mode, rho, factors.n(), Some(&factors.sigma))?;
    if reg.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateChannel { user: 0, ratio: 0.0 });
    }
    Ok(DetectionProblem {
        rhs: factors.psi.adjoint_mul_vec(y)?,
        operator: Operator::Factored {
            factor: factors.psi.clone(),
            reg,
        },
        mode,
        coords: Coords::ESignal,
        unit_diagonal: mode == Mode::Zf,
    })
}

impl DetectionProblem {
    /// System with an explicit Hermitian matrix, for synthetic experiments.
    pub fn from_matrix(a: ComplexMatrix, rhs: Vec<C64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("system matrix is {}x{}", a.rows(), a.cols())));
        }
        check_len("right-hand side", rhs.len(), a.rows())?;
        let scale = a.frobenius_norm().max(1.0);
        if a.hermitian_defect() > crate::linalg::HERMITIAN_TOLERANCE * scale {
            return Err(Error::Validation("system matrix is not Hermitian".into()));
        }
        Ok(Self {
            operator: Operator::Explicit(a),
            rhs,
            mode: Mode::Zf,
            coords: Coords::Original,
            unit_diagonal: false,
        })
    }

    /// Explicit square system without the Hermitian check. Only the
    /// splitting iterations are meaningful on non-Hermitian matrices.
    pub fn from_matrix_unchecked(a: ComplexMatrix, rhs: Vec<C64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("system matrix is {}x{}", a.rows(), a.cols())));
        }
        check_len("right-hand side", rhs.len(), a.rows())?;
        Ok(Self {
            operator: Operator::Explicit(a),
            rhs,
            mode: Mode::Zf,
            coords: Coords::Original,
            unit_diagonal: false,
        })
    }

    pub fn n(&self) -> usize {
        self.rhs.len()
    }

    pub fn rhs(&self) -> &[C64] {
        &self.rhs
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn coords(&self) -> Coords {
        self.coords
    }

    pub fn has_unit_diagonal(&self) -> bool {
        self.unit_diagonal
    }

    /// Regularizer added to the diagonal (zeros for ZF).
    pub fn regularizer(&self) -> Option<&[f64]> {
        match &self.operator {
            Operator::Factored { reg, .. } => Some(reg),
            Operator::Explicit(_) => None,
        }
    }

    /// out ← A v.
    pub fn apply_into(&self, v: &[C64], out: &mut [C64], flops: &mut Flops) {
        match &self.operator {
            Operator::Factored { factor, reg } => {
                let mut t = vec![ZERO; factor.rows()];
                factor.mul_vec_into(v, &mut t);
                factor.adjoint_mul_vec_into(&t, out);
                flops.add(2 * factor.rows() * factor.cols());
                if self.mode == Mode::Lmmse {
                    for ((o, &vi), &r) in out.iter_mut().zip(v).zip(reg) {
                        *o += vi * r;
                    }
                    flops.add(v.len());
                }
            }
            Operator::Explicit(a) => {
                a.mul_vec_into(v, out);
                flops.add(a.rows() * a.cols());
            }
        }
    }

    pub fn apply(&self, v: &[C64], flops: &mut Flops) -> Vec<C64> {
        let mut out = vec![ZERO; self.n()];
        self.apply_into(v, &mut out, flops);
        out
    }

    /// `b − A x`.
    pub fn residual(&self, x: &[C64], flops: &mut Flops) -> Vec<C64> {
        let mut r = self.apply(x, flops);
        for (ri, bi) in r.iter_mut().zip(&self.rhs) {
            *ri = bi - *ri;
        }
        r
    }

    /// Real diagonal of the operator. Unit-diagonal problems return ones
    /// without touching the factor.
    pub fn diagonal(&self, flops: &mut Flops) -> Vec<f64> {
        if self.unit_diagonal {
            return vec![1.0; self.n()];
        }
        match &self.operator {
            Operator::Factored { factor, reg } => {
                let mut d = reg.clone();
                for i in 0..factor.rows() {
                    for (dj, z) in d.iter_mut().zip(factor.row(i)) {
                        *dj += z.norm_sqr();
                    }
                }
                flops.add(factor.rows() * factor.cols());
                d
            }
            Operator::Explicit(a) => a.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// Dense Hermitian matrix of the operator.
    pub fn materialize(&self, flops: &mut Flops) -> ComplexMatrix {
        match &self.operator {
            Operator::Factored { factor, reg } => {
                let mut a = factor.gram();
                let n = factor.cols();
                flops.add(factor.rows() * n * (n + 1) / 2);
                for (i, r) in reg.iter().enumerate() {
                    a[(i, i)].re += r;
                }
                a
            }
            Operator::Explicit(a) => a.clone(),
        }
    }

    /// Lower triangle (with diagonal) of the materialized operator.
    pub fn lower_triangle(&self, flops: &mut Flops) -> ComplexMatrix {
        self.materialize(flops).lower_triangle()
    }
}

/// Direct Cholesky solve of the materialized system.
pub fn exact_solve(problem: &DetectionProblem) -> Result<Vec<C64>> {
    let a = problem.materialize(&mut Flops::default());
    let l = cholesky(&a)?;
    let mut x = problem.rhs.clone();
    forward_substitute(&l, &mut x)?;
    backward_substitute_adjoint(&l, &mut x)?;
    Ok(x)
}
