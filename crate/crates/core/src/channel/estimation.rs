use rand::Rng;

use crate::linalg::ComplexMatrix;
use crate::rng::complex_gaussian;

/// `Ĥ = H + Z` where each entry of `Z` has power
/// `mean|H_ij|² / 10^(varpi_db / 10)`. `varpi_db = +∞` returns `H` unchanged.
pub fn add_estimation_error<R: Rng + ?Sized>(h: &ComplexMatrix, varpi_db: f64, rng: &mut R) -> ComplexMatrix {
    if varpi_db == f64::INFINITY {
        return h.clone();
    }
    let entries = (h.rows() * h.cols()) as f64;
    let var = h.frobenius_norm_sqr() / entries / 10f64.powf(varpi_db / 10.0);
    let mut out = h.clone();
    for z in out.as_mut_slice() {
        *z += complex_gaussian(rng, var);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::models::gen_iid_rayleigh;
    use crate::rng::{stream, Purpose};

    #[test]
    fn infinite_ratio_is_exact() {
        let mut rng = stream(1, Purpose::Channel, 0);
        let h = gen_iid_rayleigh(8, 4, &mut rng).unwrap();
        assert_eq!(add_estimation_error(&h, f64::INFINITY, &mut rng), h);
    }

    #[test]
    fn error_power_ratio() {
        for (varpi, expected) in [(0.0, 1.0), (20.0, 0.01)] {
            let mut rng = stream(2, Purpose::EstimationError, 0);
            let h = gen_iid_rayleigh(64, 16, &mut stream(2, Purpose::Channel, 0)).unwrap();
            let mut ratio = 0.0;
            let draws = 2000;
            for _ in 0..draws {
                let e = add_estimation_error(&h, varpi, &mut rng).sub(&h).unwrap();
                ratio += e.frobenius_norm_sqr() / h.frobenius_norm_sqr();
            }
            ratio /= draws as f64;
            assert!((ratio / expected - 1.0).abs() < 0.03, "ratio {ratio} vs {expected}");
        }
    }
}
