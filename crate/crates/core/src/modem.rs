//! Gray-labelled square QAM, AWGN transmission and symbol error rate.
//!
//! Symbol index `i` carries the in-phase label in its high bits and the
//! quadrature label in its low bits. Each axis uses a reflected Gray code
//! over levels ordered from the most positive amplitude, so index 0 is the
//! upper-right corner point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::rng::complex_gaussian;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    levels: usize,
    bits_per_axis: u32,
    scale: f64,
    points: Vec<C64>,
    /// Gray label at each amplitude position.
    label_at: Vec<usize>,
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        let (levels, scale) = match order {
            4 => (2, 1.0 / 2f64.sqrt()),
            16 => (4, 1.0 / 10f64.sqrt()),
            64 => (8, 1.0 / 42f64.sqrt()),
            _ => return Err(Error::Validation(format!("QAM order must be 4, 16 or 64, got {order}"))),
        };
        let bits_per_axis = (levels as u32).trailing_zeros();
        let label_at: Vec<usize> = (0..levels).map(|p| p ^ (p >> 1)).collect();
        let mut position_of = vec![0; levels];
        for (p, &label) in label_at.iter().enumerate() {
            position_of[label] = p;
        }
        let amplitude = |label: usize| ((levels - 1) as f64 - 2.0 * position_of[label] as f64) * scale;
        let points = (0..order)
            .map(|i| C64::new(amplitude(i >> bits_per_axis), amplitude(i & (levels - 1))))
            .collect();
        Ok(Self {
            order,
            levels,
            bits_per_axis,
            scale,
            points,
            label_at,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn min_distance(&self) -> f64 {
        2.0 * self.scale
    }

    fn slice_axis(&self, v: f64) -> usize {
        let pos = ((self.levels - 1) as f64 - v / self.scale) / 2.0;
        let max = (self.levels - 1) as f64;
        let pos = pos.clamp(0.0, max);
        let lo = pos.floor();
        let frac = pos - lo;
        let lo = lo as usize;
        if frac < 0.5 || lo as f64 == max {
            self.label_at[lo]
        } else if frac > 0.5 {
            self.label_at[lo + 1]
        } else {
            self.label_at[lo].min(self.label_at[lo + 1])
        }
    }

    /// Nearest point; exact ties go to the smaller index.
    pub fn decide(&self, z: C64) -> usize {
        (self.slice_axis(z.re) << self.bits_per_axis) | self.slice_axis(z.im)
    }
}

pub fn modulate(symbol_indices: &[usize], constellation: &Constellation) -> Result<Vec<C64>> {
    symbol_indices
        .iter()
        .map(|&i| {
            constellation
                .points
                .get(i)
                .copied()
                .ok_or_else(|| Error::Validation(format!("symbol index {i} outside 0..{}", constellation.order)))
        })
        .collect()
}

pub fn demodulate_hard(estimates: &[C64], constellation: &Constellation) -> Vec<usize> {
    estimates.iter().map(|&z| constellation.decide(z)).collect()
}

pub fn random_symbols<R: Rng + ?Sized>(n: usize, constellation: &Constellation, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..constellation.order)).collect()
}

/// `ρ = σ_x² / σ_z²` with unit symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub rho_db: f64,
}

impl SnrSpec {
    pub fn from_db(rho_db: f64) -> Result<Self> {
        if !rho_db.is_finite() {
            return Err(Error::Validation(format!("SNR {rho_db} dB is not finite")));
        }
        Ok(Self { rho_db })
    }

    pub fn rho_linear(&self) -> f64 {
        10f64.powf(self.rho_db / 10.0)
    }

    pub fn sigma_z_sq(&self) -> f64 {
        1.0 / self.rho_linear()
    }
}

/// Unit-variance complex Gaussian noise, scaled per SNR by the caller.
pub fn unit_noise<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    (0..len).map(|_| complex_gaussian(rng, 1.0)).collect()
}

/// `y = Hx + σ_z · w` for a pre-drawn unit-noise vector `w`.
pub fn transmit_with_noise(h: &ComplexMatrix, x: &[C64], noise: &[C64], sigma_z_sq: f64) -> Result<Vec<C64>> {
    if noise.len() != h.rows() {
        return Err(Error::Validation(format!(
            "noise length {} does not match {} receive antennas",
            noise.len(),
            h.rows()
        )));
    }
    let mut y = h.mul_vec(x).map_err(|e| Error::Validation(format!("transmit: {e}")))?;
    if sigma_z_sq > 0.0 {
        let s = sigma_z_sq.sqrt();
        for (yi, w) in y.iter_mut().zip(noise) {
            *yi += w * s;
        }
    }
    Ok(y)
}

/// `y = Hx + z` with `z ~ CN(0, σ_z² I)`.
pub fn transmit<R: Rng + ?Sized>(h: &ComplexMatrix, x: &[C64], snr: SnrSpec, rng: &mut R) -> Result<Vec<C64>> {
    let noise = unit_noise(h.rows(), rng);
    transmit_with_noise(h, x, &noise, snr.sigma_z_sq())
}

pub fn symbol_error_rate(decided: &[usize], truth: &[usize]) -> Result<f64> {
    if decided.len() != truth.len() {
        return Err(Error::Validation(format!(
            "decisions have length {}, truth has {}",
            decided.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    Ok(symbol_errors(decided, truth) as f64 / truth.len() as f64)
}

pub fn symbol_errors(decided: &[usize], truth: &[usize]) -> usize {
    decided.iter().zip(truth).filter(|(a, b)| a != b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn qpsk_index_zero() {
        let c = Constellation::new(4).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert_eq!(modulate(&[0], &c).unwrap()[0], C64::new(s, s));
    }

    #[test]
    fn unit_energy() {
        for order in [4, 16, 64] {
            let c = Constellation::new(order).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-14);
        }
        assert!(Constellation::new(8).is_err());
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for order in [4, 16, 64] {
            let c = Constellation::new(order).unwrap();
            let d = c.min_distance();
            for (i, p) in c.points().iter().enumerate() {
                for (j, q) in c.points().iter().enumerate() {
                    if ((p - q).norm() - d).abs() < 1e-12 {
                        assert_eq!((i ^ j).count_ones(), 1, "{order}-QAM points {i} and {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn round_trip_and_perturbation() {
        let c = Constellation::new(64).unwrap();
        let idx: Vec<usize> = (0..64).collect();
        let x = modulate(&idx, &c).unwrap();
        assert_eq!(demodulate_hard(&x, &c), idx);
        let r = 0.49 * c.min_distance() / 2f64.sqrt();
        let shifted: Vec<C64> = x.iter().map(|p| p + C64::new(r, -r)).collect();
        assert_eq!(demodulate_hard(&shifted, &c), idx);
        assert!(modulate(&[64], &c).is_err());
    }

    #[test]
    fn nearest_matches_brute_force() {
        let c = Constellation::new(16).unwrap();
        let mut rng = stream(3, Purpose::Synthetic, 0);
        for _ in 0..2000 {
            let z = complex_gaussian(&mut rng, 2.0);
            let brute = (0..16)
                .min_by(|&a, &b| {
                    (c.points()[a] - z)
                        .norm()
                        .partial_cmp(&(c.points()[b] - z).norm())
                        .unwrap()
                })
                .unwrap();
            assert_eq!(c.decide(z), brute);
        }
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let c = Constellation::new(4).unwrap();
        let s = 1.0 / 2f64.sqrt();
        // midpoint of points 0 (+,+) and 1 (+,−)
        assert_eq!(c.decide(C64::new(s, 0.0)), 0);
        // midpoint of points 1 (+,−) and 3 (−,−)
        assert_eq!(c.decide(C64::new(0.0, -s)), 1);
        assert_eq!(c.decide(C64::new(0.0, 0.0)), 0);
    }

    #[test]
    fn ser_counts() {
        assert_eq!(symbol_error_rate(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), 0.0);
        assert_eq!(symbol_error_rate(&[0, 0], &[1, 1]).unwrap(), 1.0);
        assert_eq!(symbol_error_rate(&[1, 2, 3, 0], &[1, 2, 3, 4]).unwrap(), 0.25);
        assert!(symbol_error_rate(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn noiseless_and_noise_power() {
        let h = ComplexMatrix::from_fn(3, 2, |i, j| C64::new(i as f64, j as f64));
        let x = vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)];
        let mut rng = stream(5, Purpose::Noise, 0);
        assert_eq!(
            transmit_with_noise(&h, &x, &unit_noise(3, &mut rng), 0.0).unwrap(),
            h.mul_vec(&x).unwrap()
        );

        let snr = SnrSpec::from_db(10.0).unwrap();
        let eye = ComplexMatrix::identity(100);
        let zero = vec![C64::new(0.0, 0.0); 100];
        let mut power = 0.0;
        for _ in 0..1000 {
            power += transmit(&eye, &zero, snr, &mut rng)
                .unwrap()
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>();
        }
        power /= 1e5;
        assert!((power / snr.sigma_z_sq() - 1.0).abs() < 0.03);
        assert!(transmit(&h, &x[..1], snr, &mut rng).is_err());
    }
}
