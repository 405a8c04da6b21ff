use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

fn check_system(l: &ComplexMatrix, rhs: &[C64]) -> Result<()> {
    if !l.is_square() {
        return Err(Error::Dimension(format!(
            "triangular factor is {}x{}",
            l.rows(),
            l.cols()
        )));
    }
    if rhs.len() != l.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, expected {}",
            rhs.len(),
            l.rows()
        )));
    }
    Ok(())
}

/// Forward substitution for `l · x = rhs`; entries above the diagonal are ignored.
pub fn solve_lower_triangular(l: &ComplexMatrix, rhs: &[C64]) -> Result<Vec<C64>> {
    check_system(l, rhs)?;
    let mut x = rhs.to_vec();
    forward_substitute(l, &mut x)?;
    Ok(x)
}

/// Back substitution for `lᴴ · x = rhs` using the lower factor `l` directly.
pub fn solve_lower_adjoint(l: &ComplexMatrix, rhs: &[C64]) -> Result<Vec<C64>> {
    check_system(l, rhs)?;
    let mut x = rhs.to_vec();
    backward_substitute_adjoint(l, &mut x)?;
    Ok(x)
}

pub(crate) fn forward_substitute(l: &ComplexMatrix, x: &mut [C64]) -> Result<()> {
    let n = l.rows();
    for i in 0..n {
        let row = l.row(i);
        let mut acc = x[i];
        for j in 0..i {
            acc -= row[j] * x[j];
        }
        let d = row[i];
        if d == ZERO {
            return Err(Error::Singular(format!("zero diagonal entry at {i}")));
        }
        x[i] = acc / d;
    }
    Ok(())
}

pub(crate) fn backward_substitute_adjoint(l: &ComplexMatrix, x: &mut [C64]) -> Result<()> {
    let n = l.rows();
    // (lᴴ)_{ij} = conj(l_{ji}); column-oriented sweep keeps row-major access
    for i in (0..n).rev() {
        let d = l[(i, i)].conj();
        if d == ZERO {
            return Err(Error::Singular(format!("zero diagonal entry at {i}")));
        }
        x[i] /= d;
        let xi = x[i];
        let row = l.row(i);
        for j in 0..i {
            x[j] -= row[j].conj() * xi;
        }
    }
    Ok(())
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "Cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = a[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if !(diag > 0.0) {
            return Err(Error::Singular(format!("non-positive pivot {diag:e} at {j}")));
        }
        let ljj = diag.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// Solves `a · x = b` for Hermitian positive definite `a`.
pub fn cholesky_solve(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let l = cholesky(a)?;
    let y = solve_lower_triangular(&l, b)?;
    solve_lower_adjoint(&l, &y)
}
