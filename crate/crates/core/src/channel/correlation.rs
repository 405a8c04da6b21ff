use crate::error::{Error, Result};
use crate::linalg::{sqrt_psd, ComplexMatrix, C64};

/// Correlation scaling μ such that antennas ϑ/2 apart correlate at `rho`.
/// `rho = 0` maps to μ = 0, i.e. no correlation.
pub fn mu_from_rho(rho: f64, wavelength: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::Validation(format!("correlation rho = {rho} outside [0, 1)")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    Ok(-(wavelength / 2.0) / rho.ln())
}

/// `r_ij = exp(−d_ij / μ)` over an n×n row-major distance table.
pub fn exp_corr_matrix(pairwise_distances: &[f64], n: usize, mu: f64) -> Result<ComplexMatrix> {
    if pairwise_distances.len() != n * n || n == 0 {
        return Err(Error::Dimension(format!(
            "distance table has {} entries, expected {n}x{n}",
            pairwise_distances.len()
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::Validation(format!("correlation scale mu = {mu} is negative")));
    }
    if let Some(d) = pairwise_distances.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::Validation(format!("negative distance {d}")));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        let d = pairwise_distances[i * n + j];
        let r = if i == j || d == 0.0 {
            1.0
        } else if mu == 0.0 {
            0.0
        } else {
            (-d / mu).exp()
        };
        C64::new(r, 0.0)
    }))
}

/// Square roots of the base-station and user correlation matrices, computed
/// once and applied to every fading draw. `None` stands for the identity.
#[derive(Debug, Clone, Default)]
pub struct Kronecker {
    sqrt_bs: Option<ComplexMatrix>,
    sqrt_ue: Option<ComplexMatrix>,
}

impl Kronecker {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(r_bs: &ComplexMatrix, r_ue: &ComplexMatrix) -> Result<Self> {
        let root = |r: &ComplexMatrix| -> Result<Option<ComplexMatrix>> {
            if r.is_square() && *r == ComplexMatrix::identity(r.rows()) {
                Ok(None)
            } else {
                sqrt_psd(r).map(Some)
            }
        };
        Ok(Self {
            sqrt_bs: root(r_bs)?,
            sqrt_ue: root(r_ue)?,
        })
    }

    /// Correlation at the users only, `Ω · √R_ue`.
    pub fn user_side(r_ue: &ComplexMatrix) -> Result<Self> {
        Ok(Self {
            sqrt_bs: None,
            sqrt_ue: Some(sqrt_psd(r_ue)?),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.sqrt_bs.is_none() && self.sqrt_ue.is_none()
    }

    /// `√R_bs · Ω · √R_ue`.
    pub fn apply(&self, omega: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = match &self.sqrt_bs {
            Some(s) => {
                if s.cols() != omega.rows() {
                    return Err(Error::Validation(format!(
                        "R_bs is {}x{} but the fading matrix has {} rows",
                        s.rows(),
                        s.cols(),
                        omega.rows()
                    )));
                }
                s.matmul(omega)?
            }
            None => omega.clone(),
        };
        if let Some(s) = &self.sqrt_ue {
            if s.rows() != omega.cols() {
                return Err(Error::Validation(format!(
                    "R_ue is {}x{} but the fading matrix has {} columns",
                    s.rows(),
                    s.cols(),
                    omega.cols()
                )));
            }
            out = out.matmul(s)?;
        }
        Ok(out)
    }
}

/// One-shot `√R_bs · Ω · √R_ue`.
pub fn apply_kronecker(omega: &ComplexMatrix, r_bs: &ComplexMatrix, r_ue: &ComplexMatrix) -> Result<ComplexMatrix> {
    if r_bs.rows() != omega.rows() || !r_bs.is_square() || r_ue.rows() != omega.cols() || !r_ue.is_square() {
        return Err(Error::Validation(format!(
            "correlation shapes {}x{} / {}x{} do not match fading matrix {}x{}",
            r_bs.rows(),
            r_bs.cols(),
            r_ue.rows(),
            r_ue.cols(),
            omega.rows(),
            omega.cols()
        )));
    }
    Kronecker::new(r_bs, r_ue)?.apply(omega)
}
