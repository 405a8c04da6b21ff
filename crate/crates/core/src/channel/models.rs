use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::correlation::{exp_corr_matrix, mu_from_rho, Kronecker};
use super::geometry::Geometry;
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::rng::{complex_gaussian, stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ChannelModel {
    /// i.i.d. Rayleigh.
    Model1,
    /// Distance-dependent (i.n.d.) Rayleigh.
    Model2,
    /// Distance-dependent (i.n.d.) Rician.
    Model3,
    /// Mixed LoS/NLoS with shadowing.
    Model4,
}

impl ChannelModel {
    pub const ALL: [ChannelModel; 4] = [Self::Model1, Self::Model2, Self::Model3, Self::Model4];

    pub fn id(self) -> u8 {
        self as u8 + 1
    }
}

impl TryFrom<u8> for ChannelModel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Self::Model1),
            2 => Ok(Self::Model2),
            3 => Ok(Self::Model3),
            4 => Ok(Self::Model4),
            _ => Err(format!("channel model must be 1, 2, 3 or 4, got {v}")),
        }
    }
}

impl From<ChannelModel> for u8 {
    fn from(m: ChannelModel) -> u8 {
        m.id()
    }
}

impl std::fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// Rician K-factor, either fixed or lognormal (normal in dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RicianK {
    FixedDb(f64),
    LognormalDb { mean_db: f64, std_db: f64 },
}

impl RicianK {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let db = match *self {
            RicianK::FixedDb(db) => db,
            RicianK::LognormalDb { mean_db, std_db } => {
                if std_db == 0.0 {
                    mean_db
                } else {
                    let z: f64 = rng.sample(StandardNormal);
                    mean_db + std_db * z
                }
            }
        };
        10f64.powf(db / 10.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            RicianK::FixedDb(db) => !db.is_nan() && db != f64::INFINITY,
            RicianK::LognormalDb { mean_db, std_db } => mean_db.is_finite() && std_db >= 0.0 && std_db.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid Rician K specification {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    pub beta_nlos: f64,
    pub gamma_nlos: f64,
    pub beta_los: f64,
    pub gamma_los: f64,
    /// K-factor used by Model 3.
    pub rician_k: RicianK,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            beta_nlos: 0.020,
            gamma_nlos: 1.765,
            beta_los: 0.007,
            gamma_los: 1.050,
            rician_k: RicianK::FixedDb(9.0),
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.beta_nlos, self.gamma_nlos, self.beta_los, self.gamma_los];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(
                "path-loss coefficients and exponents must be finite and non-negative".into(),
            ));
        }
        self.rician_k.validate()
    }
}

/// Parameters of the Model 4 LoS/NLoS field.
///
/// Per user antenna, the LoS state along the service array is a two-state
/// Markov chain with stationary LoS probability `los_probability` whose
/// autocorrelation decays as `exp(−|Δm| / persistence)`. Shadowing is
/// lognormal with standard deviation `shadowing_std_db`, smoothed by a
/// moving average over `round(persistence)` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model4Params {
    pub los_probability: f64,
    pub persistence: f64,
    pub shadowing_std_db: f64,
    /// K-factor drawn once per user.
    pub rician_k: RicianK,
}

impl Default for Model4Params {
    fn default() -> Self {
        Self {
            los_probability: 0.7,
            persistence: 10.0,
            shadowing_std_db: 4.0,
            rician_k: RicianK::LognormalDb {
                mean_db: 9.0,
                std_db: 10.0,
            },
        }
    }
}

impl Model4Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.persistence > 0.0 && self.persistence.is_finite()) {
            return Err(Error::Validation(format!(
                "LoS window length {} must be positive",
                self.persistence
            )));
        }
        if !(0.0..=1.0).contains(&self.los_probability) {
            return Err(Error::Validation(format!(
                "LoS probability {} outside [0, 1]",
                self.los_probability
            )));
        }
        if !(self.shadowing_std_db >= 0.0 && self.shadowing_std_db.is_finite()) {
            return Err(Error::Validation(
                "shadowing deviation must be finite and non-negative".into(),
            ));
        }
        self.rician_k.validate()
    }

    fn window(&self) -> usize {
        (self.persistence.round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
    pub partition: Vec<usize>,
    pub model: ChannelModel,
    pub corr_rho: f64,
    pub seed: Option<u64>,
    pub trial: u64,
    /// Row-major LoS states (Model 4 only).
    pub los_mask: Option<Vec<bool>>,
}

impl ChannelRealization {
    pub fn m(&self) -> usize {
        self.h.rows()
    }

    pub fn n(&self) -> usize {
        self.h.cols()
    }

    pub fn user_block(&self, k: usize) -> ComplexMatrix {
        let start: usize = self.partition[..k].iter().sum();
        self.h.columns(start, self.partition[k])
    }
}

/// Entries i.i.d. CN(0, 1/m).
pub fn gen_iid_rayleigh<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::Dimension(format!("fading matrix {m}x{n} is empty")));
    }
    let var = 1.0 / m as f64;
    let data = (0..m * n).map(|_| complex_gaussian(rng, var)).collect();
    ComplexMatrix::new(m, n, data)
}

/// Rescales each user block so that `‖H_k‖_F² = N_k`.
pub fn normalize_per_user(h: &mut ComplexMatrix, partition: &[usize]) -> Result<()> {
    let cols = h.cols();
    if partition.iter().sum::<usize>() != cols {
        return Err(Error::Dimension(format!(
            "partition {partition:?} does not sum to {cols}"
        )));
    }
    let mut start = 0;
    for (k, &nk) in partition.iter().enumerate() {
        let mut power = 0.0;
        for i in 0..h.rows() {
            power += h.row(i)[start..start + nk].iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::DegenerateChannel { user: k, ratio: 0.0 });
        }
        let c = (nk as f64 / power).sqrt();
        for i in 0..h.rows() {
            for z in &mut h.row_mut(i)[start..start + nk] {
                *z *= c;
            }
        }
        start += nk;
    }
    Ok(())
}

/// Geometry-bound generator for one channel model; precomputes distances,
/// path loss, LoS phasors and correlation roots.
#[derive(Debug, Clone)]
pub struct ChannelGenerator {
    model: ChannelModel,
    m: usize,
    partition: Vec<usize>,
    wavelength: f64,
    distances: Vec<f64>,
    params: PropagationParams,
    model4: Model4Params,
    corr_rho: f64,
    kronecker: Kronecker,
}

impl ChannelGenerator {
    pub fn new(
        model: ChannelModel,
        geometry: &Geometry,
        params: PropagationParams,
        model4: Model4Params,
        corr_rho: f64,
    ) -> Result<Self> {
        params.validate()?;
        model4.validate()?;
        let distances = geometry.link_distances();
        if model != ChannelModel::Model1 {
            if let Some(idx) = distances.iter().position(|d| !(*d > 0.0)) {
                let n = geometry.n();
                return Err(Error::Geometry(format!(
                    "service antenna {} coincides with user antenna {}",
                    idx / n,
                    idx % n
                )));
            }
        }
        let mu = mu_from_rho(corr_rho, geometry.wavelength)?;
        let kronecker = if mu == 0.0 {
            Kronecker::identity()
        } else {
            let r_bs = exp_corr_matrix(&geometry.service_pairwise_distances(), geometry.m(), mu)?;
            let r_ue = exp_corr_matrix(&geometry.user_pairwise_distances(), geometry.n(), mu)?;
            Kronecker::new(&r_bs, &r_ue)?
        };
        Ok(Self {
            model,
            m: geometry.m(),
            partition: geometry.partition(),
            wavelength: geometry.wavelength,
            distances,
            params,
            model4,
            corr_rho,
            kronecker,
        })
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn n(&self) -> usize {
        self.partition.iter().sum()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Draw from the channel stream of `(seed, trial)`.
    pub fn generate_trial(&self, seed: u64, trial: u64) -> Result<ChannelRealization> {
        let mut rng = stream(seed, Purpose::Channel, trial);
        let mut r = self.generate(&mut rng)?;
        r.seed = Some(seed);
        r.trial = trial;
        Ok(r)
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        let mut los_mask = None;
        let mut h = self.unnormalized(rng, &mut los_mask)?;
        normalize_per_user(&mut h, &self.partition)?;
        Ok(ChannelRealization {
            h,
            partition: self.partition.clone(),
            model: self.model,
            corr_rho: self.corr_rho,
            seed: None,
            trial: 0,
            los_mask,
        })
    }

    /// Channel before per-user normalization.
    pub fn unnormalized<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        los_mask: &mut Option<Vec<bool>>,
    ) -> Result<ComplexMatrix> {
        let n = self.n();
        let omega = gen_iid_rayleigh(self.m, n, rng)?;
        let mut h = self.kronecker.apply(&omega)?;
        let p = &self.params;
        match self.model {
            ChannelModel::Model1 => {}
            ChannelModel::Model2 => {
                for (z, d) in h.as_mut_slice().iter_mut().zip(&self.distances) {
                    *z *= p.beta_nlos / d.powf(p.gamma_nlos);
                }
            }
            ChannelModel::Model3 => {
                let kappa = p.rician_k.sample(rng);
                let (w_los, w_nlos) = rician_weights(kappa);
                for (z, d) in h.as_mut_slice().iter_mut().zip(&self.distances) {
                    *z = (self.los_phasor(*d) * w_los + *z * w_nlos) * (p.beta_los / d.powf(p.gamma_los));
                }
            }
            ChannelModel::Model4 => {
                *los_mask = Some(self.apply_model4(&mut h, rng));
            }
        }
        Ok(h)
    }

    /// Unit-power phasor on the same `1/M` scale as the fading entries.
    fn los_phasor(&self, d: f64) -> C64 {
        C64::from_polar((self.m as f64).recip().sqrt(), -2.0 * PI * d / self.wavelength)
    }

    fn apply_model4<R: Rng + ?Sized>(&self, h: &mut ComplexMatrix, rng: &mut R) -> Vec<bool> {
        let p = &self.params;
        let f = &self.model4;
        let n = self.n();
        let m = self.m;

        let mut user_weights = Vec::with_capacity(n);
        for &nk in &self.partition {
            let w = rician_weights(f.rician_k.sample(rng));
            user_weights.extend(std::iter::repeat_n(w, nk));
        }

        let decay = (-1.0 / f.persistence).exp();
        let to_los = f.los_probability * (1.0 - decay);
        let to_nlos = (1.0 - f.los_probability) * (1.0 - decay);
        let window = f.window();
        let mut mask = vec![false; m * n];
        let mut shadow = vec![1.0; m * n];
        let mut raw = vec![0.0; m + window - 1];
        for col in 0..n {
            let mut state = rng.random::<f64>() < f.los_probability;
            for row in 0..m {
                if row > 0 {
                    let u: f64 = rng.random();
                    state = if state { u >= to_nlos } else { u < to_los };
                }
                mask[row * n + col] = state;
            }
            if f.shadowing_std_db > 0.0 {
                for v in raw.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let norm = (window as f64).sqrt();
                let mut acc: f64 = raw[..window].iter().sum();
                for row in 0..m {
                    if row > 0 {
                        acc += raw[row + window - 1] - raw[row - 1];
                    }
                    let db = f.shadowing_std_db * acc / norm;
                    shadow[row * n + col] = 10f64.powf(db / 20.0);
                }
            }
        }

        for (idx, z) in h.as_mut_slice().iter_mut().enumerate() {
            let d = self.distances[idx];
            let entry = if mask[idx] {
                let (w_los, w_nlos) = user_weights[idx % n];
                (self.los_phasor(d) * w_los + *z * w_nlos) * (p.beta_los / d.powf(p.gamma_los))
            } else {
                *z * (p.beta_nlos / d.powf(p.gamma_nlos))
            };
            *z = entry * shadow[idx];
        }
        mask
    }
}

/// `(√(κ/(κ+1)), √(1/(κ+1)))`, stable for very large κ.
fn rician_weights(kappa: f64) -> (f64, f64) {
    if kappa.is_infinite() {
        return (1.0, 0.0);
    }
    ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
}

fn generator(
    model: ChannelModel,
    geometry: &Geometry,
    params: &PropagationParams,
    model4: Model4Params,
) -> Result<ChannelGenerator> {
    ChannelGenerator::new(model, geometry, *params, model4, 0.0)
}

/// Uncorrelated Model 2 draw.
pub fn gen_model2<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &PropagationParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    generator(ChannelModel::Model2, geometry, params, Model4Params::default())?.generate(rng)
}

/// Uncorrelated Model 3 draw.
pub fn gen_model3<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &PropagationParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    generator(ChannelModel::Model3, geometry, params, Model4Params::default())?.generate(rng)
}

/// Uncorrelated Model 4 draw.
pub fn gen_model4<R: Rng + ?Sized>(
    geometry: &Geometry,
    params: &PropagationParams,
    los_field: &Model4Params,
    rng: &mut R,
) -> Result<ChannelRealization> {
    generator(ChannelModel::Model4, geometry, params, *los_field)?.generate(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::geometry::{build_geometry, GeometryConfig};
    use crate::rng::{stream, Purpose};

    fn small_geometry() -> Geometry {
        build_geometry(&GeometryConfig {
            m: 32,
            k_users: 2,
            n_ue: 2,
            ..GeometryConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn model_ids_round_trip() {
        for m in ChannelModel::ALL {
            assert_eq!(ChannelModel::try_from(m.id()).unwrap(), m);
        }
        assert!(ChannelModel::try_from(5).is_err());
    }

    #[test]
    fn every_model_is_normalized_per_user() {
        let g = small_geometry();
        for model in ChannelModel::ALL {
            for rho in [0.0, 0.5] {
                let gen = ChannelGenerator::new(model, &g, PropagationParams::default(), Model4Params::default(), rho)
                    .unwrap();
                let r = gen.generate_trial(11, 2).unwrap();
                for k in 0..2 {
                    assert!((r.user_block(k).frobenius_norm_sqr() - 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn deterministic_for_seed_and_trial() {
        let g = small_geometry();
        let gen = ChannelGenerator::new(
            ChannelModel::Model4,
            &g,
            PropagationParams::default(),
            Model4Params::default(),
            0.8,
        )
        .unwrap();
        assert_eq!(gen.generate_trial(5, 9).unwrap(), gen.generate_trial(5, 9).unwrap());
        assert_ne!(
            gen.generate_trial(5, 9).unwrap().h,
            gen.generate_trial(5, 10).unwrap().h
        );
    }

    #[test]
    fn los_limit_has_path_loss_magnitude() {
        let g = small_geometry();
        let params = PropagationParams {
            rician_k: RicianK::FixedDb(120.0),
            ..PropagationParams::default()
        };
        let gen = ChannelGenerator::new(ChannelModel::Model3, &g, params, Model4Params::default(), 0.0).unwrap();
        let mut none = None;
        let h = gen
            .unnormalized(&mut stream(1, Purpose::Channel, 0), &mut none)
            .unwrap();
        for (z, d) in h.as_slice().iter().zip(g.link_distances()) {
            let expected = params.beta_los / d.powf(params.gamma_los) / (g.m() as f64).sqrt();
            assert!((z.norm() / expected - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn global_path_loss_scale_cancels() {
        let g = small_geometry();
        let a = PropagationParams::default();
        let b = PropagationParams { beta_nlos: 7.0, ..a };
        let ha = gen_model2(&g, &a, &mut stream(3, Purpose::Channel, 0)).unwrap().h;
        let hb = gen_model2(&g, &b, &mut stream(3, Purpose::Channel, 0)).unwrap().h;
        assert!(ha.sub(&hb).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn degenerate_field_matches_model3_and_model2() {
        let g = small_geometry();
        let params = PropagationParams::default();
        let fixed_k = RicianK::FixedDb(9.0);
        let all_los = Model4Params {
            los_probability: 1.0,
            shadowing_std_db: 0.0,
            rician_k: fixed_k,
            ..Model4Params::default()
        };
        let all_nlos = Model4Params {
            los_probability: 0.0,
            ..all_los
        };
        // with a fixed K-factor and no shadowing, only the fading matrix is
        // drawn before the (deterministic) field, so draws coincide exactly
        let h3 = gen_model3(&g, &params, &mut stream(4, Purpose::Channel, 1)).unwrap().h;
        let h4 = gen_model4(&g, &params, &all_los, &mut stream(4, Purpose::Channel, 1))
            .unwrap()
            .h;
        assert!(h3.sub(&h4).unwrap().frobenius_norm() < 1e-12);
        let h2 = gen_model2(&g, &params, &mut stream(4, Purpose::Channel, 1)).unwrap().h;
        let h4 = gen_model4(&g, &params, &all_nlos, &mut stream(4, Purpose::Channel, 1))
            .unwrap()
            .h;
        assert!(h2.sub(&h4).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn invalid_window_rejected() {
        let g = small_geometry();
        let bad = Model4Params {
            persistence: 0.0,
            ..Model4Params::default()
        };
        let err = ChannelGenerator::new(ChannelModel::Model4, &g, PropagationParams::default(), bad, 0.0);
        assert!(matches!(err, Err(Error::Validation(_))));
    }
}
