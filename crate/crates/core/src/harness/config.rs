//! Experiment configuration: TOML file format, presets and validation.
//!
//! ```toml
//! base_seed = 7
//! trials = 100
//! snr_db = [0, 5, 10, 15, 20, 25]
//! schedulers = ["rss", "fls", "sus", "greedy", "dbs"]
//!
//! [array]
//! preset = "modular"          # modular | sparse | large-module | collocated
//! # n_modules = 32            # any field overrides the preset
//! # antennas_per_module = 4
//! # separation = 13.0
//! # carrier_hz = 15e9
//! # reference_gain_db = 0.0
//! # amplitude = "phase-only"  # phase-only | exact
//!
//! [scenario]
//! preset = "sector"           # sector | far | far-caption
//! num_users = 300
//! # sampling = "uniform-area" # uniform-area | uniform-polar
//! # r_min = 10.0; r_max = 60.0; theta_min_deg = -60.0; theta_max_deg = 60.0
//!
//! [scheduler]
//! mu = 0.5
//! l_init = 10.0
//! l_step = 1.0
//! gamma_variant = "residual-fraction"   # residual-fraction | as-written
//! stopping = "sum-se-decrease"          # sum-se-decrease | exhaustion
//! # sus_alpha = 0.4
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::AmplitudeModel;
use crate::error::{Error, Result};
use crate::geometry::{ArrayConfig, Region, Sampling, ScenarioConfig};
use crate::precoding::GammaVariant;
use crate::schedulers::{Scheduler, SchedulerConfig, Stopping};

pub const DEFAULT_CARRIER_HZ: f64 = 15e9;

/// Named array layouts with 128 antennas; all but the collocated one share
/// the 4.0572 m aperture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrayPreset {
    Modular,
    Sparse,
    LargeModule,
    Collocated,
}

impl ArrayPreset {
    pub const ALL: [ArrayPreset; 4] = [
        ArrayPreset::Modular,
        ArrayPreset::Sparse,
        ArrayPreset::LargeModule,
        ArrayPreset::Collocated,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ArrayPreset::Modular => "modular",
            ArrayPreset::Sparse => "sparse",
            ArrayPreset::LargeModule => "large-module",
            ArrayPreset::Collocated => "collocated",
        }
    }

    /// `(N, M, S)`.
    pub fn layout(&self) -> (usize, usize, f64) {
        match self {
            ArrayPreset::Modular => (32, 4, 13.0),
            ArrayPreset::Sparse => (128, 1, 3.19),
            ArrayPreset::LargeModule => (4, 32, 125.0),
            ArrayPreset::Collocated => (1, 128, 1.0),
        }
    }

    pub fn array(&self) -> ArrayConfig {
        let (n, m, s) = self.layout();
        ArrayConfig::new(n, m, s, DEFAULT_CARRIER_HZ).expect("preset layouts are valid")
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Fixed-aperture configurations `(N, M, S)` with `NM = 128`.
pub const CONFIG_STUDY_LAYOUTS: [(usize, usize, f64); 8] = [
    (128, 1, 3.19),
    (64, 2, 6.42),
    (32, 4, 13.0),
    (16, 8, 26.6),
    (8, 16, 55.86),
    (4, 32, 125.0),
    (2, 64, 343.0),
    (1, 128, 1.0),
];

/// Named user-drop regions.
pub fn scenario_preset(name: &str) -> Option<Region> {
    let sector = |r_min: f64, r_max: f64| Region::Sector {
        r_min,
        r_max,
        theta_min: (-60f64).to_radians(),
        theta_max: 60f64.to_radians(),
    };
    match name {
        "sector" => Some(sector(10.0, 60.0)),
        "far" => Some(sector(60.0, 150.0)),
        "far-caption" => Some(sector(60.0, 120.0)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub array: ArrayConfig,
    pub amplitude: AmplitudeModel,
    /// `scenario.seed` is overwritten per trial.
    pub scenario: ScenarioConfig,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub schedulers: Vec<Scheduler>,
    pub scheduler_cfg: SchedulerConfig,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    /// Noise power σ².
    pub noise_power: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            array: ArrayPreset::Modular.array(),
            amplitude: AmplitudeModel::PhaseOnly,
            scenario: ScenarioConfig {
                region: scenario_preset("sector").expect("known preset"),
                num_users: 300,
                sampling: Sampling::UniformArea,
                seed: 0,
            },
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            trials: 100,
            schedulers: Scheduler::ALL.to_vec(),
            scheduler_cfg: SchedulerConfig::default(),
            base_seed: 0,
            output_dir: PathBuf::from("out"),
            noise_power: 1.0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("snr_db", "must not be empty"));
        }
        if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::config("snr_db", format!("non-finite entry {bad}")));
        }
        if self.schedulers.is_empty() {
            return Err(Error::config("schedulers", "must not be empty"));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::config("noise_power", "must be positive"));
        }
        self.scenario.validate()?;
        self.scheduler_cfg.validate()
    }

    /// `P_TX = 10^(snr/10) σ² / β₀`.
    pub fn transmit_power(&self, snr_db: f64) -> f64 {
        10f64.powf(snr_db / 10.0) * self.noise_power / self.array.reference_gain()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            Error::config(toml_error_path(&e, text), message)
        })?;
        raw.build()
    }
}

/// Best-effort dotted path of the key a TOML error points at.
fn toml_error_path(err: &toml::de::Error, text: &str) -> String {
    let Some(span) = err.span() else {
        return "<config>".into();
    };
    let mut section = String::new();
    let mut key = String::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if offset > span.start {
            break;
        }
        if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            key.clear();
        } else if let Some((k, _)) = trimmed.split_once('=') {
            key = k.trim().to_string();
        }
        offset += line.len();
    }
    match (section.is_empty(), key.is_empty()) {
        (true, true) => "<config>".into(),
        (true, false) => key,
        (false, true) => section,
        (false, false) => format!("{section}.{key}"),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    base_seed: Option<u64>,
    trials: Option<u64>,
    snr_db: Option<Vec<f64>>,
    schedulers: Option<Vec<String>>,
    noise_power: Option<f64>,
    #[serde(default)]
    array: RawArray,
    #[serde(default)]
    scenario: RawScenario,
    #[serde(default)]
    scheduler: RawScheduler,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArray {
    preset: Option<String>,
    n_modules: Option<usize>,
    antennas_per_module: Option<usize>,
    separation: Option<f64>,
    carrier_hz: Option<f64>,
    reference_gain_db: Option<f64>,
    amplitude: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Option<String>,
    num_users: Option<usize>,
    sampling: Option<String>,
    r_min: Option<f64>,
    r_max: Option<f64>,
    theta_min_deg: Option<f64>,
    theta_max_deg: Option<f64>,
    x_min: Option<f64>,
    x_max: Option<f64>,
    y_min: Option<f64>,
    y_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScheduler {
    mu: Option<f64>,
    l_init: Option<f64>,
    l_step: Option<f64>,
    gamma_variant: Option<String>,
    stopping: Option<String>,
    sus_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

impl RawConfig {
    fn build(self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        cfg.array = self.array.build()?;
        cfg.amplitude = match self.array.amplitude.as_deref() {
            None | Some("phase-only") => AmplitudeModel::PhaseOnly,
            Some("exact") => AmplitudeModel::Exact,
            Some(other) => return Err(Error::config("array.amplitude", format!("unknown model '{other}'"))),
        };
        cfg.scenario = self.scenario.build()?;
        cfg.scheduler_cfg = self.scheduler.build()?;
        if let Some(seed) = self.base_seed {
            cfg.base_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(snr) = self.snr_db {
            cfg.snr_db = snr;
        }
        if let Some(p) = self.noise_power {
            cfg.noise_power = p;
        }
        if let Some(names) = self.schedulers {
            cfg.schedulers = names
                .iter()
                .map(|n| n.parse::<Scheduler>().map_err(|e| Error::config("schedulers", e)))
                .collect::<Result<_>>()?;
            let mut seen = cfg.schedulers.clone();
            seen.sort();
            seen.dedup();
            if seen.len() != cfg.schedulers.len() {
                return Err(Error::config("schedulers", "duplicate entry"));
            }
        }
        if let Some(dir) = self.output.dir {
            cfg.output_dir = dir;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RawArray {
    fn build(&self) -> Result<ArrayConfig> {
        let preset = match self.preset.as_deref() {
            None => ArrayPreset::Modular,
            Some(name) => ArrayPreset::from_name(name)
                .ok_or_else(|| Error::config("array.preset", format!("unknown preset '{name}'")))?,
        };
        let (n, m, s) = preset.layout();
        let array = ArrayConfig::new(
            self.n_modules.unwrap_or(n),
            self.antennas_per_module.unwrap_or(m),
            self.separation.unwrap_or(s),
            self.carrier_hz.unwrap_or(DEFAULT_CARRIER_HZ),
        )?;
        match self.reference_gain_db {
            Some(db) if !db.is_finite() => Err(Error::config("array.reference_gain_db", "must be finite")),
            Some(db) => array.reference_gain_set(10f64.powf(db / 10.0)),
            None => Ok(array),
        }
    }
}

impl RawScenario {
    fn build(&self) -> Result<ScenarioConfig> {
        let name = self.preset.as_deref().unwrap_or("sector");
        let base = scenario_preset(name)
            .ok_or_else(|| Error::config("scenario.preset", format!("unknown preset '{name}'")))?;
        let has_rect = self.x_min.is_some() || self.x_max.is_some() || self.y_min.is_some() || self.y_max.is_some();
        let has_sector = self.r_min.is_some()
            || self.r_max.is_some()
            || self.theta_min_deg.is_some()
            || self.theta_max_deg.is_some();
        if has_rect && has_sector {
            return Err(Error::config("scenario", "mixes sector and rectangle bounds"));
        }
        let region = if has_rect {
            let get = |v: Option<f64>, key: &str| v.ok_or_else(|| Error::config(format!("scenario.{key}"), "missing rectangle bound"));
            Region::Rectangle {
                x_min: get(self.x_min, "x_min")?,
                x_max: get(self.x_max, "x_max")?,
                y_min: get(self.y_min, "y_min")?,
                y_max: get(self.y_max, "y_max")?,
            }
        } else {
            let Region::Sector {
                r_min,
                r_max,
                theta_min,
                theta_max,
            } = base
            else {
                unreachable!("presets are sectors")
            };
            Region::Sector {
                r_min: self.r_min.unwrap_or(r_min),
                r_max: self.r_max.unwrap_or(r_max),
                theta_min: self.theta_min_deg.map_or(theta_min, f64::to_radians),
                theta_max: self.theta_max_deg.map_or(theta_max, f64::to_radians),
            }
        };
        let sampling = match self.sampling.as_deref() {
            None | Some("uniform-area") => Sampling::UniformArea,
            Some("uniform-polar") => Sampling::UniformPolar,
            Some(other) => return Err(Error::config("scenario.sampling", format!("unknown sampling '{other}'"))),
        };
        Ok(ScenarioConfig {
            region,
            num_users: self.num_users.unwrap_or(300),
            sampling,
            seed: 0,
        })
    }
}

impl RawScheduler {
    fn build(&self) -> Result<SchedulerConfig> {
        let mut cfg = SchedulerConfig::default();
        if let Some(v) = self.gamma_variant.as_deref() {
            cfg.gamma_variant = match v {
                "residual-fraction" => GammaVariant::ResidualFraction,
                "as-written" => GammaVariant::AsWritten,
                other => return Err(Error::config("scheduler.gamma_variant", format!("unknown variant '{other}'"))),
            };
        }
        if let Some(s) = self.stopping.as_deref() {
            cfg.stopping = s.parse::<Stopping>().map_err(|e| Error::config("scheduler.stopping", e))?;
        }
        cfg.mu = self.mu.unwrap_or(cfg.mu);
        cfg.l_init = self.l_init.unwrap_or(cfg.l_init);
        cfg.l_step = self.l_step.unwrap_or(cfg.l_step);
        cfg.sus_alpha = self.sus_alpha;
        cfg.validate()?;
        Ok(cfg)
    }
}
