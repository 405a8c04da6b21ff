//! User-wise SVD (UW-SVD) preconditioning for iterative multi-user MIMO detection.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices, economy SVD, Hermitian eigen-extremes,
//!   triangular solves and PSD square roots.
//! - [`channel`]: geometry-aware channel generators (i.i.d. Rayleigh, i.n.d.
//!   Rayleigh, i.n.d. Rician, mixed LoS/NLoS), Kronecker correlation and
//!   channel-estimation error.
//! - [`modem`]: Gray-labelled QAM, AWGN transmission and symbol error rate.
//! - [`detect`]: the UW-SVD factorization, detection problems in original and
//!   e-signal coordinates, direct ZF/LMMSE baselines and post-processing.
//! - [`solvers`]: Richardson, Jacobi, Gauss-Seidel, SSOR, L-BFGS and CG with
//!   per-iteration traces and multiply-add accounting.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detect;
pub mod error;
pub mod flops;
pub mod linalg;
pub mod modem;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use flops::Flops;
