use serde::Serialize;

use crate::error::{Error, Result};

/// Multiply-add cost of a detector, by phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlopBreakdown {
    pub gram_build: u64,
    pub matrix_inverse: u64,
    pub per_iteration: u64,
    /// User-wise SVD plus post-processing.
    pub uw_svd_overhead: u64,
    pub iterations: u64,
}

impl FlopBreakdown {
    pub fn total(&self, with_uw_svd: bool) -> u64 {
        let base = self.gram_build + self.matrix_inverse + self.per_iteration * self.iterations;
        if with_uw_svd {
            base + self.uw_svd_overhead
        } else {
            base
        }
    }

    /// Iterations of this method that cost as much as the UW-SVD overhead.
    pub fn overhead_in_iterations(&self) -> f64 {
        self.uw_svd_overhead as f64 / self.per_iteration.max(1) as f64
    }
}

pub const FLOP_ALGORITHMS: [&str; 8] = ["zf", "lmmse", "ri", "ji", "gs", "ssor", "lbfgs", "cg"];

/// Nominal complexity formulas for `m` service antennas, `n` user
/// antennas in total and `n_ue` antennas per user. CG is not tabulated in
/// the reference table; its entry is the count of this implementation.
pub fn flop_estimate(algorithm: &str, m: usize, n: usize, n_ue: usize, t: usize) -> Result<FlopBreakdown> {
    if m == 0 || n == 0 || n_ue == 0 {
        return Err(Error::Validation("dimensions must be positive".into()));
    }
    let (m, n, n_ue) = (m as u64, n as u64, n_ue as u64);
    let (gram_build, matrix_inverse, per_iteration) = match algorithm.to_ascii_lowercase().as_str() {
        "zf" | "lmmse" => (m * n * n, n * n * n, 0),
        "ri" => (0, 0, 2 * m * n),
        "ji" => (0, 0, 2 * m * n + n),
        "gs" => (m * n * n, n * n, 3 * n * n / 2),
        "ssor" => (m * n * n, n * n, 2 * n * n + n),
        "lbfgs" | "l-bfgs" => (0, 0, 4 * m * n + n * n + 5 * n),
        "cg" => (0, 0, 2 * m * n + 5 * n),
        other => {
            return Err(Error::Validation(format!(
                "unknown algorithm {other:?}; expected one of {}",
                FLOP_ALGORITHMS.join(", ")
            )))
        }
    };
    let iterations = if per_iteration == 0 { 0 } else { t as u64 };
    Ok(FlopBreakdown {
        gram_build,
        matrix_inverse,
        per_iteration,
        uw_svd_overhead: n_ue * m * n + n_ue * n + 2 * n,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(flop_estimate("ssor", 256, 32, 4, 1).unwrap().per_iteration, 2080);
        let l = flop_estimate("lbfgs", 256, 32, 4, 1).unwrap();
        assert_eq!(l.per_iteration, 33_952);
        assert_eq!(l.uw_svd_overhead, 32_960);
        assert!((l.overhead_in_iterations() - 0.97).abs() < 0.01);
        let s = flop_estimate("ssor", 256, 32, 4, 1).unwrap();
        assert!((s.overhead_in_iterations() - 15.85).abs() < 0.01);
        let zf = flop_estimate("zf", 256, 32, 4, 10).unwrap();
        assert_eq!((zf.gram_build, zf.matrix_inverse, zf.iterations), (262_144, 32_768, 0));
        assert!(flop_estimate("sor", 256, 32, 4, 1).is_err());
    }
}
