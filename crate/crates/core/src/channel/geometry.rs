use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ula,
    Upa { rows: usize, cols: usize },
}

/// Deployment description from which [`Geometry`] is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryConfig {
    pub array: ArrayKind,
    pub m: usize,
    pub k_users: usize,
    pub n_ue: usize,
    pub frequency_hz: f64,
    /// Length of the segment on which users are placed (meters).
    pub user_line_length: f64,
    /// Distance between the user line and the service array (meters).
    pub perpendicular_distance: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            array: ArrayKind::Ula,
            m: 256,
            k_users: 8,
            n_ue: 4,
            frequency_hz: 3.5e9,
            user_line_length: 30.0,
            perpendicular_distance: 15.0,
        }
    }
}

/// Antenna positions of the service array and of every user.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub service_positions: Vec<Point>,
    pub user_positions: Vec<Vec<Point>>,
    pub carrier_frequency: f64,
    pub wavelength: f64,
}

impl Geometry {
    pub fn m(&self) -> usize {
        self.service_positions.len()
    }

    pub fn n(&self) -> usize {
        self.user_positions.iter().map(Vec::len).sum()
    }

    pub fn partition(&self) -> Vec<usize> {
        self.user_positions.iter().map(Vec::len).collect()
    }

    pub fn user_antennas(&self) -> impl Iterator<Item = &Point> {
        self.user_positions.iter().flatten()
    }

    /// M×N matrix (row-major) of service-to-user-antenna distances.
    pub fn link_distances(&self) -> Vec<f64> {
        let users: Vec<&Point> = self.user_antennas().collect();
        let mut out = Vec::with_capacity(self.m() * users.len());
        for s in &self.service_positions {
            for u in &users {
                out.push(distance(s, u));
            }
        }
        out
    }

    pub fn service_pairwise_distances(&self) -> Vec<f64> {
        pairwise(&self.service_positions)
    }

    pub fn user_pairwise_distances(&self) -> Vec<f64> {
        let users: Vec<Point> = self.user_antennas().copied().collect();
        pairwise(&users)
    }
}

pub fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn pairwise(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let d = distance(&points[i], &points[j]);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// Centered offsets `(i − (count−1)/2) · spacing`.
fn centered(count: usize, spacing: f64) -> impl Iterator<Item = f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(move |i| (i as f64 - mid) * spacing)
}

/// Service array in the x–z plane centered at the origin; users on a line
/// parallel to the x axis at `y = perpendicular_distance`, evenly spaced
/// over `user_line_length`, each with a half-wavelength ULA along x.
pub fn build_geometry(config: &GeometryConfig) -> Result<Geometry> {
    let GeometryConfig {
        array,
        m,
        k_users,
        n_ue,
        frequency_hz,
        user_line_length,
        perpendicular_distance,
    } = *config;
    if m == 0 || k_users == 0 || n_ue == 0 {
        return Err(Error::Validation("m, k_users and n_ue must be positive".into()));
    }
    if m < k_users * n_ue {
        return Err(Error::Validation(format!(
            "m = {m} service antennas cannot serve {k_users} users with {n_ue} antennas each"
        )));
    }
    if !(frequency_hz > 0.0) || !(user_line_length >= 0.0) || !(perpendicular_distance > 0.0) {
        return Err(Error::Validation(
            "frequency and perpendicular distance must be positive, line length non-negative".into(),
        ));
    }
    let wavelength = SPEED_OF_LIGHT / frequency_hz;
    let spacing = wavelength / 2.0;

    let service_positions: Vec<Point> = match array {
        ArrayKind::Ula => centered(m, spacing).map(|x| [x, 0.0, 0.0]).collect(),
        ArrayKind::Upa { rows, cols } => {
            if rows * cols != m {
                return Err(Error::Validation(format!(
                    "UPA {rows}x{cols} does not have m = {m} elements"
                )));
            }
            let zs: Vec<f64> = centered(rows, spacing).collect();
            let xs: Vec<f64> = centered(cols, spacing).collect();
            zs.iter().flat_map(|&z| xs.iter().map(move |&x| [x, 0.0, z])).collect()
        }
    };

    let centers: Vec<f64> = if k_users == 1 {
        vec![0.0]
    } else {
        let step = user_line_length / (k_users as f64 - 1.0);
        (0..k_users)
            .map(|k| -user_line_length / 2.0 + k as f64 * step)
            .collect()
    };
    let user_positions = centers
        .iter()
        .map(|&c| {
            centered(n_ue, spacing)
                .map(|dx| [c + dx, perpendicular_distance, 0.0])
                .collect()
        })
        .collect();

    Ok(Geometry {
        service_positions,
        user_positions,
        carrier_frequency: frequency_hz,
        wavelength,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ula_half_wavelength_spacing() {
        let g = build_geometry(&GeometryConfig::default()).unwrap();
        let spacing = distance(&g.service_positions[0], &g.service_positions[1]);
        // c / 3.5 GHz / 2
        assert!((spacing - 0.042827494).abs() < 1e-8);
        assert_eq!(g.m(), 256);
        assert_eq!(g.partition(), vec![4; 8]);
        for user in &g.user_positions {
            assert!((distance(&user[0], &user[1]) - spacing).abs() < 1e-12);
            assert!(user.iter().all(|p| p[1] == 15.0));
        }
        let first = g.user_positions[0][0][0];
        let last = g.user_positions[7][3][0];
        assert!((last - first) < 30.0 + 4.0 * spacing);
    }

    #[test]
    fn upa_grid() {
        let cfg = GeometryConfig {
            array: ArrayKind::Upa { rows: 16, cols: 16 },
            ..GeometryConfig::default()
        };
        let g = build_geometry(&cfg).unwrap();
        assert_eq!(g.service_positions.len(), 256);
        let spacing = g.wavelength / 2.0;
        assert!((distance(&g.service_positions[0], &g.service_positions[1]) - spacing).abs() < 1e-12);
        assert!((distance(&g.service_positions[0], &g.service_positions[16]) - spacing).abs() < 1e-12);
        let bad = GeometryConfig {
            array: ArrayKind::Upa { rows: 16, cols: 15 },
            ..GeometryConfig::default()
        };
        assert!(build_geometry(&bad).is_err());
    }

    #[test]
    fn single_user_is_centered() {
        let cfg = GeometryConfig {
            k_users: 1,
            ..GeometryConfig::default()
        };
        let g = build_geometry(&cfg).unwrap();
        let mean_x: f64 = g.user_positions[0].iter().map(|p| p[0]).sum::<f64>() / 4.0;
        assert!(mean_x.abs() < 1e-12);
    }

    #[test]
    fn too_many_user_antennas() {
        let cfg = GeometryConfig {
            m: 16,
            ..GeometryConfig::default()
        };
        assert!(matches!(build_geometry(&cfg), Err(Error::Validation(_))));
    }
}
