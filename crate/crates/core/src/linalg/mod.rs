//! Dense complex linear algebra.

mod eigen;
mod matrix;
mod svd;
mod triangular;

pub use eigen::{
    cond_number, eigen_extremes_hermitian, hermitian_eigenvalues, hermitian_jacobi_eigen, sqrt_psd, EigenExtremes,
    HERMITIAN_TOLERANCE, PSD_CLAMP_FLOOR,
};
pub use matrix::{distance, dot, norm, norm_sqr, real_vector, ComplexMatrix, C64, ONE, ZERO};
pub use svd::{economy_svd, economy_svd_gram, EconomySvd};
pub use triangular::{cholesky, cholesky_solve, solve_lower_adjoint, solve_lower_triangular};

pub(crate) use triangular::{backward_substitute_adjoint, forward_substitute};
