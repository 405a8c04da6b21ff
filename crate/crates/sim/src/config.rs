//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use uwsvd::channel::{ArrayKind, ChannelModel, GeometryConfig, Model4Params, PropagationParams};
use uwsvd::detect::{Coords, Mode};
use uwsvd::solvers::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    CondCdf,
    SerCurve,
    EstError,
    TheoryCheck,
    Flops,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Self::CondCdf,
        Self::SerCurve,
        Self::EstError,
        Self::TheoryCheck,
        Self::Flops,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::CondCdf => "cond-cdf",
            Experiment::SerCurve => "ser-curve",
            Experiment::EstError => "est-error",
            Experiment::TheoryCheck => "theory-check",
            Experiment::Flops => "flops",
        }
    }

    /// Stem of the output files.
    pub fn file_stem(self) -> &'static str {
        match self {
            Experiment::CondCdf => "cond_cdf",
            Experiment::SerCurve => "ser_curve",
            Experiment::EstError => "est_error",
            Experiment::TheoryCheck => "theory_check",
            Experiment::Flops => "flops",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            anyhow::anyhow!("unknown experiment {s:?}; valid names are {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoordsSelection {
    Orig,
    Uwsvd,
    Both,
}

impl CoordsSelection {
    pub fn coords(self) -> Vec<Coords> {
        match self {
            CoordsSelection::Orig => vec![Coords::Original],
            CoordsSelection::Uwsvd => vec![Coords::ESignal],
            CoordsSelection::Both => vec![Coords::Original, Coords::ESignal],
        }
    }
}

impl std::str::FromStr for CoordsSelection {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orig" => Ok(Self::Orig),
            "uwsvd" => Ok(Self::Uwsvd),
            "both" => Ok(Self::Both),
            _ => bail!("unknown coords {s:?}; expected orig, uwsvd or both"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m: usize,
    pub k_users: usize,
    pub n_ue: usize,
    #[serde(default = "default_array")]
    pub array: ArrayKind,
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    #[serde(default = "default_line_length")]
    pub user_line_length: f64,
    #[serde(default = "default_perpendicular")]
    pub perpendicular_distance: f64,
}

fn default_array() -> ArrayKind {
    ArrayKind::Ula
}
fn default_frequency() -> f64 {
    GeometryConfig::default().frequency_hz
}
fn default_line_length() -> f64 {
    GeometryConfig::default().user_line_length
}
fn default_perpendicular() -> f64 {
    GeometryConfig::default().perpendicular_distance
}

impl Default for SystemConfig {
    fn default() -> Self {
        let g = GeometryConfig::default();
        Self {
            m: g.m,
            k_users: g.k_users,
            n_ue: g.n_ue,
            array: g.array,
            frequency_hz: g.frequency_hz,
            user_line_length: g.user_line_length,
            perpendicular_distance: g.perpendicular_distance,
        }
    }
}

impl SystemConfig {
    pub fn n(&self) -> usize {
        self.k_users * self.n_ue
    }

    pub fn geometry(&self) -> GeometryConfig {
        GeometryConfig {
            array: self.array,
            m: self.m,
            k_users: self.k_users,
            n_ue: self.n_ue,
            frequency_hz: self.frequency_hz,
            user_line_length: self.user_line_length,
            perpendicular_distance: self.perpendicular_distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub model: ChannelModel,
    /// Exponential correlation coefficient ϱ at half-wavelength spacing.
    pub corr_rho: f64,
    pub propagation: PropagationParams,
    pub model4: Model4Params,
    /// Channel-to-estimation-error power ratios ϖ (dB) for `est-error`.
    pub varpi_db: Vec<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            model: ChannelModel::Model2,
            corr_rho: 0.0,
            propagation: PropagationParams::default(),
            model4: Model4Params::default(),
            varpi_db: vec![20.0, 15.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub mode: Mode,
    /// SNR grid ρ (dB). `cond-cdf` regularizes with the first entry.
    pub snr_db: Vec<f64>,
    pub qam_order: usize,
    pub solvers: Vec<Algorithm>,
    pub coords: CoordsSelection,
    /// Iterations T per solver run.
    pub iterations: usize,
    /// Relaxation for GS/SSOR.
    pub omega: f64,
    pub lbfgs_textbook: bool,
    /// Converged-at threshold as a multiple of the exact detector's SER.
    pub convergence_factor: f64,
    /// Symbol vectors transmitted per channel draw.
    pub frames: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Lmmse,
            snr_db: vec![10.0],
            qam_order: 16,
            solvers: vec![Algorithm::Ssor, Algorithm::Lbfgs],
            coords: CoordsSelection::Both,
            iterations: 20,
            omega: 1.0,
            lbfgs_textbook: false,
            convergence_factor: 1.05,
            frames: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; all available cores when unset. Results do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            trials: 500,
            seed: 1,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("results"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub system: SystemConfig,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SimConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.m == 0 || s.k_users == 0 || s.n_ue == 0 {
            bail!("system.m, system.k_users and system.n_ue must be positive");
        }
        if s.n() > s.m {
            bail!("{} user antennas exceed m = {}", s.n(), s.m);
        }
        let c = &self.channel;
        if !(0.0..1.0).contains(&c.corr_rho) {
            bail!("channel.corr_rho = {} outside [0, 1)", c.corr_rho);
        }
        if c.varpi_db.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            bail!("channel.varpi_db entries must be numbers or +inf");
        }
        let d = &self.detection;
        if d.snr_db.is_empty() || d.snr_db.iter().any(|v| !v.is_finite()) {
            bail!("detection.snr_db must be a non-empty list of finite values");
        }
        if ![4, 16, 64].contains(&d.qam_order) {
            bail!("detection.qam_order must be 4, 16 or 64, got {}", d.qam_order);
        }
        if d.solvers.is_empty() {
            bail!("detection.solvers must not be empty");
        }
        if d.iterations == 0 {
            bail!("detection.iterations must be at least 1");
        }
        if !(d.omega > 0.0 && d.omega < 2.0) {
            bail!("detection.omega = {} outside (0, 2)", d.omega);
        }
        if !(d.convergence_factor >= 1.0) {
            bail!("detection.convergence_factor must be at least 1");
        }
        if d.frames == 0 {
            bail!("detection.frames must be at least 1");
        }
        if self.monte_carlo.trials == 0 {
            bail!("monte_carlo.trials must be at least 1");
        }
        if self.monte_carlo.threads == Some(0) {
            bail!("monte_carlo.threads must be at least 1");
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.model {
            self.channel.model = v;
        }
        if let Some(v) = o.rho_corr {
            self.channel.corr_rho = v;
        }
        if let Some(v) = &o.snr_db {
            self.detection.snr_db.clone_from(v);
        }
        if let Some(v) = o.qam_order {
            self.detection.qam_order = v;
        }
        if let Some(v) = &o.solvers {
            self.detection.solvers.clone_from(v);
        }
        if let Some(v) = o.coords {
            self.detection.coords = v;
        }
        if let Some(v) = o.mode {
            self.detection.mode = v;
        }
        if let Some(v) = o.iterations {
            self.detection.iterations = v;
        }
        if let Some(v) = &o.varpi_db {
            self.channel.varpi_db.clone_from(v);
        }
        if let Some(v) = o.trials {
            self.monte_carlo.trials = v;
        }
        if let Some(v) = o.seed {
            self.monte_carlo.seed = v;
        }
        if let Some(v) = o.threads {
            self.monte_carlo.threads = Some(v);
        }
        if let Some(v) = &o.out {
            self.output.dir.clone_from(v);
        }
    }
}

/// Command-line replacements for config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<ChannelModel>,
    pub rho_corr: Option<f64>,
    pub snr_db: Option<Vec<f64>>,
    pub qam_order: Option<usize>,
    pub solvers: Option<Vec<Algorithm>>,
    pub coords: Option<CoordsSelection>,
    pub mode: Option<Mode>,
    pub iterations: Option<usize>,
    pub varpi_db: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}
