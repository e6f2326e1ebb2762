//! Run configuration: a JSON file whose every field has a default, so the
//! commands also run without one. Relative paths resolve against the
//! directory holding the configuration file.

use std::fs;
use std::path::{Path, PathBuf};

use dephaser::matrix_io::read_matrix_auto;
use dephaser::measurement::{phase_probe_family_specs, MeasurementSetting, SettingSpec, SettingsFile};
use dephaser::operator::DensityMatrix;
use dephaser::rovib::{
    thermal_distribution, thermal_distribution_reduced, wavenumber_to_angular, BathModel, RovibParams,
    DEFAULT_J_MAX, DEFAULT_TEMPERATURE_K,
};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub format_version: u32,
    pub model: ModelConfig,
    pub initial_state: StateSource,
    /// Settings file; when absent the probe family below is generated.
    pub settings: Option<PathBuf>,
    pub probe_family: ProbeFamilyConfig,
    /// Dataset written by `synth` and read by `estimate`; defaults to
    /// `dataset.csv` in the output directory.
    pub dataset: Option<PathBuf>,
    pub estimator: EstimatorConfig,
    pub simulate: SimulateConfig,
    pub channel: ChannelConfig,
    pub wigner: WignerConfig,
    pub outputs: PathBuf,
    pub seed: u64,
    pub noise_sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            format_version: CONFIG_FORMAT_VERSION,
            model: ModelConfig::default(),
            initial_state: StateSource::default(),
            settings: None,
            probe_family: ProbeFamilyConfig::default(),
            dataset: None,
            estimator: EstimatorConfig::default(),
            simulate: SimulateConfig::default(),
            channel: ChannelConfig::default(),
            wigner: WignerConfig::default(),
            outputs: PathBuf::from("out"),
            seed: 0,
            noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Vibrational period in seconds (`omega = 2 pi / period`).
    pub vib_period_s: f64,
    /// Coupling constant, 1/s.
    pub lambda: f64,
    pub dim: usize,
    pub j_max: usize,
    pub bath: BathConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vib_period_s: 500e-15,
            lambda: 2.73e7,
            dim: 6,
            j_max: DEFAULT_J_MAX,
            bath: BathConfig::default(),
        }
    }
}

/// Bath occupation: thermal from physical constants, thermal from the
/// reduced energy `hbar B / (k_B T)`, or explicit weights from a `j,p_j` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathConfig {
    Thermal { temperature_k: f64, b_rot_cm: f64 },
    Reduced { beta: f64 },
    File { path: PathBuf },
}

/// Rotational constant used when none is configured: the smallest round
/// value for which levels up to `j = 150` hold 99.9% of the thermal mass at
/// the default temperature.
pub const DEFAULT_B_ROT_CM: f64 = 0.15;

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig::Thermal { temperature_k: DEFAULT_TEMPERATURE_K, b_rot_cm: DEFAULT_B_ROT_CM }
    }
}

/// Initial state: a matrix file (CSV or JSON), a coherent state
/// `{"coherent": [re, im]}`, or a Fock state `{"fock": n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSource {
    File(PathBuf),
    Coherent { coherent: [f64; 2] },
    Fock { fock: usize },
}

impl Default for StateSource {
    fn default() -> Self {
        StateSource::Coherent { coherent: [1.0, 0.3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeFamilyConfig {
    pub count: usize,
    /// Delays are drawn uniformly from `[0, t_max_s)`.
    pub t_max_s: f64,
    pub seed: u64,
}

impl Default for ProbeFamilyConfig {
    fn default() -> Self {
        ProbeFamilyConfig { count: 250, t_max_s: 2.5e-10, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaGrid {
    Explicit(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl LambdaGrid {
    pub fn values(&self) -> CliResult<Vec<f64>> {
        let v = match self {
            LambdaGrid::Explicit(v) => v.clone(),
            LambdaGrid::Range { start, stop, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        };
        if v.is_empty() || v.windows(2).any(|w| !(w[0] < w[1])) || v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("estimator.lambda_grid must be a non-empty, strictly ascending list".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorConfig {
    pub lambda_grid: LambdaGrid,
    /// Golden-section refinement tolerance (1/s); no refinement if absent.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            lambda_grid: LambdaGrid::Range { start: 2.1e7, stop: 2.9e7, points: 9 },
            tol: None,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// Times at which states are written; the last one is the "final" state.
    pub times_s: Vec<f64>,
    /// Time grid of the decay table.
    pub decay_times_s: Option<Vec<f64>>,
    /// Also write Wigner grids of the initial and final states.
    pub wigner: bool,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { times_s: vec![0.0, 7e-12], decay_times_s: None, wigner: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    pub t_s: f64,
    /// `j,p_j` weights; defaults to the model bath.
    pub weights: Option<PathBuf>,
    /// Coupling; defaults to the model coupling.
    pub lambda: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig { t_s: 7e-12, weights: None, lambda: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerConfig {
    /// Axes span `[-range, range]` in both quadratures.
    pub range: f64,
    pub points: usize,
}

impl Default for WignerConfig {
    fn default() -> Self {
        WignerConfig { range: 6.0, points: 121 }
    }
}

/// A configuration together with the directory its relative paths refer to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub base: PathBuf,
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

impl Loaded {
    pub fn from_path(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Loaded { config: RunConfig::default(), base: PathBuf::from(".") }),
            Some(p) => {
                let text = read_text(p)?;
                let config: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid configuration `{}`: {e}", p.display())))?;
                if config.format_version != CONFIG_FORMAT_VERSION {
                    return Err(CliError::Config(format!(
                        "configuration format_version {} is not supported (expected {CONFIG_FORMAT_VERSION})",
                        config.format_version
                    )));
                }
                let base = p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
                Ok(Loaded { config, base })
            }
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn params(&self) -> CliResult<RovibParams> {
        let m = &self.config.model;
        if !(m.vib_period_s.is_finite() && m.vib_period_s > 0.0) {
            return Err(CliError::Config(format!("model.vib_period_s must be positive, got {}", m.vib_period_s)));
        }
        RovibParams::new(2.0 * std::f64::consts::PI / m.vib_period_s, m.lambda, m.dim, m.j_max)
            .context(|| "model".into())
    }

    pub fn bath_weights(&self) -> CliResult<Vec<f64>> {
        let j_max = self.config.model.j_max;
        match &self.config.model.bath {
            BathConfig::Thermal { temperature_k, b_rot_cm } => {
                Ok(thermal_distribution(wavenumber_to_angular(*b_rot_cm), *temperature_k, j_max)
                    .context(|| "model.bath".into())?
                    .weights)
            }
            BathConfig::Reduced { beta } => {
                Ok(thermal_distribution_reduced(*beta, j_max).context(|| "model.bath".into())?.weights)
            }
            BathConfig::File { path } => read_weights(&self.resolve(path)),
        }
    }

    pub fn bath(&self) -> CliResult<BathModel> {
        BathModel::new(self.config.model.lambda, self.bath_weights()?).context(|| "model.bath".into())
    }

    pub fn initial_state(&self) -> CliResult<DensityMatrix> {
        let dim = self.config.model.dim;
        match &self.config.initial_state {
            StateSource::File(p) => read_state(&self.resolve(p)),
            StateSource::Coherent { coherent: [re, im] } => {
                DensityMatrix::coherent(dim, C64::new(*re, *im)).context(|| "initial_state".into())
            }
            StateSource::Fock { fock } => DensityMatrix::basis(dim, *fock).context(|| "initial_state".into()),
        }
    }

    /// Settings from the settings file, or the seeded probe family.
    pub fn setting_specs(&self) -> CliResult<Vec<SettingSpec>> {
        match &self.config.settings {
            Some(p) => {
                let path = self.resolve(p);
                let text = read_text(&path)?;
                let file: SettingsFile = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("invalid settings file `{}`: {e}", path.display())))?;
                Ok(file.specs().to_vec())
            }
            None => {
                let f = &self.config.probe_family;
                Ok(phase_probe_family_specs(f.count, f.t_max_s, f.seed))
            }
        }
    }

    pub fn settings(&self) -> CliResult<Vec<MeasurementSetting>> {
        let dim = self.config.model.dim;
        let settings_base = match &self.config.settings {
            Some(p) => self.resolve(p).parent().map(Path::to_path_buf).unwrap_or_default(),
            None => self.base.clone(),
        };
        self.setting_specs()?
            .iter()
            .map(|spec| {
                spec.build(dim, |file| {
                    let path = settings_base.join(file);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| dephaser::Error::InvalidInput(format!("cannot read `{}`: {e}", path.display())))?;
                    read_matrix_auto(&text)
                })
                .context(|| format!("setting `{}`", spec.id))
            })
            .collect()
    }
}

/// Density matrix from a CSV or JSON matrix file.
pub fn read_state(path: &Path) -> CliResult<DensityMatrix> {
    let text = read_text(path)?;
    let m = read_matrix_auto(&text).context(|| format!("state file `{}`", path.display()))?;
    DensityMatrix::new(m).context(|| format!("state file `{}`", path.display()))
}

/// Weights from a `j,p_j` CSV; levels must be listed as `0, 1, 2, ...`.
pub fn read_weights(path: &Path) -> CliResult<Vec<f64>> {
    let text = read_text(path)?;
    parse_weights(&text).map_err(|msg| CliError::Config(format!("weights file `{}`: {msg}", path.display())))
}

pub fn parse_weights(text: &str) -> Result<Vec<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match lines.next().map(str::trim) {
        Some("j,p_j") => {}
        other => return Err(format!("expected header `j,p_j`, found {other:?}")),
    }
    let mut weights = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',').map(str::trim);
        let j: usize = fields.next().and_then(|f| f.parse().ok()).ok_or(format!("line {}: bad level", i + 2))?;
        let p: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or(format!("line {}: bad weight", i + 2))?;
        if j != weights.len() {
            return Err(format!("line {}: expected level {}, found {j}", i + 2, weights.len()));
        }
        weights.push(p);
    }
    if weights.is_empty() {
        return Err("no weights listed".into());
    }
    Ok(weights)
}

pub fn weights_csv(weights: &[f64]) -> String {
    let mut s = String::from("j,p_j\n");
    for (j, p) in weights.iter().enumerate() {
        s.push_str(&format!("{j},{p:?}\n"));
    }
    s
}
