//! Experiment configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pbit_forge_core::anneal::{AnnealSchedule, RampShape, SamplerMode};
use pbit_forge_core::device::{
    ArrayGeometry, DriftModel, ProgramVerifyConfig, ReadNoise, SmtjDevice, SmtjVariability,
};
use pbit_forge_core::mapping::Quantization;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Maxcut,
    Coloring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Graph file, relative to the config file.
    pub graph: PathBuf,
    /// Number of colors (coloring only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colors: Option<usize>,
    /// Penalty / weight scale `A`.
    #[serde(default = "one")]
    pub scale: f64,
    pub g_scale_us: f64,
    pub levels_us: Vec<f64>,
    #[serde(default)]
    pub quantization: QuantizationKind,
    pub trials: usize,
    pub seed: u64,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub machine: MachineSection,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub crossbar: CrossbarSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSection>,
    /// Parameter grid for `sweep`: dotted config key to list of values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<BTreeMap<String, Vec<toml::Value>>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuantizationKind {
    #[default]
    Exact,
    Nearest,
}

impl From<QuantizationKind> for Quantization {
    fn from(q: QuantizationKind) -> Self {
        match q {
            QuantizationKind::Exact => Quantization::Exact,
            QuantizationKind::Nearest => Quantization::Nearest,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub v_start: f64,
    pub v_end: f64,
    #[serde(default = "default_updates_per_step")]
    pub updates_per_step: u64,
    pub total_updates: u64,
    #[serde(default = "default_v_ref")]
    pub v_ref: f64,
    #[serde(default)]
    pub shape: ShapeKind,
}

fn default_updates_per_step() -> u64 {
    50
}

fn default_v_ref() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    #[default]
    LinearVoltage,
    LinearTemperature,
}

impl From<&ScheduleConfig> for AnnealSchedule {
    fn from(s: &ScheduleConfig) -> Self {
        AnnealSchedule {
            v_start: s.v_start,
            v_end: s.v_end,
            updates_per_step: s.updates_per_step,
            total_updates: s.total_updates,
            v_ref: s.v_ref,
            shape: match s.shape {
                ShapeKind::LinearVoltage => RampShape::LinearVoltage,
                ShapeKind::LinearTemperature => RampShape::LinearTemperature,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    #[default]
    Hw,
    Ideal,
}

impl From<ModeKind> for SamplerMode {
    fn from(m: ModeKind) -> Self {
        match m {
            ModeKind::Hw => SamplerMode::HardwareFaithful,
            ModeKind::Ideal => SamplerMode::IdealSigmoid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    #[default]
    Sequential,
    Shuffled,
    Chromatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSection {
    #[serde(default)]
    pub mode: ModeKind,
    #[serde(default)]
    pub order: OrderKind,
    #[serde(default = "default_pulse")]
    pub pulse_width_s: f64,
    /// Energy snapshot stride in the JSON sidecar; 0 disables snapshots.
    #[serde(default = "default_snapshot_stride")]
    pub snapshot_stride: u64,
}

fn default_pulse() -> f64 {
    50e-6
}

fn default_snapshot_stride() -> u64 {
    50
}

impl Default for MachineSection {
    fn default() -> Self {
        Self {
            mode: ModeKind::default(),
            order: OrderKind::default(),
            pulse_width_s: default_pulse(),
            snapshot_stride: default_snapshot_stride(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DevicePreset {
    #[default]
    Fast,
    Slow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// One junction for every spin.
    #[default]
    Shared,
    /// One junction per row.
    PerRow,
}

/// Nominal SMTJ; unset fields come from the preset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default)]
    pub preset: DevicePreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_per_volt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_half: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_p_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ap_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_series_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_compliance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_scale_hz: Option<f64>,
    #[serde(default)]
    pub assignment: Assignment,
    /// Die-to-die spread; a fresh draw is made for every trial.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variability: Option<VariabilitySection>,
}

impl DeviceSection {
    pub fn nominal(&self) -> SmtjDevice {
        let base = match self.preset {
            DevicePreset::Fast => SmtjDevice::default(),
            DevicePreset::Slow => SmtjDevice::slow(),
        };
        SmtjDevice {
            slope_per_volt: self.slope_per_volt.unwrap_or(base.slope_per_volt),
            v_half: self.v_half.unwrap_or(base.v_half),
            r_p_ohm: self.r_p_ohm.unwrap_or(base.r_p_ohm),
            r_ap_ohm: self.r_ap_ohm.unwrap_or(base.r_ap_ohm),
            r_series_ohm: self.r_series_ohm.unwrap_or(base.r_series_ohm),
            v_compliance: self.v_compliance.unwrap_or(base.v_compliance),
            rate_scale_hz: self.rate_scale_hz.unwrap_or(base.rate_scale_hz),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariabilitySection {
    #[serde(default)]
    pub slope_rel_sigma: f64,
    #[serde(default)]
    pub v_half_sigma: f64,
    #[serde(default)]
    pub rate_log10_sigma: f64,
}

impl From<VariabilitySection> for SmtjVariability {
    fn from(v: VariabilitySection) -> Self {
        SmtjVariability {
            slope_rel_sigma: v.slope_rel_sigma,
            v_half_sigma: v.v_half_sigma,
            rate_log10_sigma: v.rate_log10_sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    #[default]
    Hardware,
    Unconstrained,
}

impl From<GeometryKind> for ArrayGeometry {
    fn from(g: GeometryKind) -> Self {
        match g {
            GeometryKind::Hardware => ArrayGeometry::HardwareFaithful,
            GeometryKind::Unconstrained => ArrayGeometry::Unconstrained,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossbarSection {
    #[serde(default)]
    pub geometry: GeometryKind,
    #[serde(default = "one")]
    pub v_read_max: f64,
    #[serde(default)]
    pub programming: ProgrammingSection,
    /// Gaussian MAC read noise; absent means noiseless reads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub read_noise: Option<ReadNoiseSection>,
}

impl Default for CrossbarSection {
    fn default() -> Self {
        Self {
            geometry: GeometryKind::default(),
            v_read_max: 1.0,
            programming: ProgrammingSection::default(),
            read_noise: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgrammingSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_pulses: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_pulse_noise_sigma_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settle_check: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allow_degraded: Option<bool>,
}

impl ProgrammingSection {
    pub fn resolve(&self) -> ProgramVerifyConfig {
        let d = ProgramVerifyConfig::default();
        ProgramVerifyConfig {
            tolerance_us: self.tolerance_us.unwrap_or(d.tolerance_us),
            max_pulses: self.max_pulses.unwrap_or(d.max_pulses),
            per_pulse_noise_sigma_us: self
                .per_pulse_noise_sigma_us
                .unwrap_or(d.per_pulse_noise_sigma_us),
            settle_check: self.settle_check.unwrap_or(d.settle_check),
            allow_degraded: self.allow_degraded.unwrap_or(d.allow_degraded),
            ..d
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadNoiseSection {
    #[serde(default = "default_relative_sigma")]
    pub relative_sigma: f64,
    #[serde(default = "default_full_scale")]
    pub full_scale_us: f64,
}

fn default_relative_sigma() -> f64 {
    0.01
}

fn default_full_scale() -> f64 {
    140.0
}

impl From<ReadNoiseSection> for ReadNoise {
    fn from(r: ReadNoiseSection) -> Self {
        ReadNoise {
            relative_sigma: r.relative_sigma,
            full_scale_us: r.full_scale_us,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSection {
    #[serde(default = "default_elapsed")]
    pub elapsed_hours: f64,
    #[serde(default = "one")]
    pub sigma_per_decade_us: f64,
    #[serde(default = "default_bound")]
    pub bound_us: f64,
}

fn default_elapsed() -> f64 {
    720.0
}

fn default_bound() -> f64 {
    15.0
}

impl From<DriftSection> for DriftModel {
    fn from(d: DriftSection) -> Self {
        DriftModel {
            sigma_per_decade_us: d.sigma_per_decade_us,
            bound_us: d.bound_us,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Validation(format!("config: {e}")))
    }

    pub fn to_toml_value(&self) -> Result<toml::Value, HarnessError> {
        toml::Value::try_from(self).map_err(|e| HarnessError::Validation(format!("config: {e}")))
    }

    /// Returns a copy with the dotted `key` (e.g. `schedule.v_end`) set to `value`.
    pub fn with_override(&self, key: &str, value: &toml::Value) -> Result<Self, HarnessError> {
        let mut root = self.to_toml_value()?;
        let mut parts = key.split('.').peekable();
        let mut node = &mut root;
        while let Some(part) = parts.next() {
            let table = node.as_table_mut().ok_or_else(|| {
                HarnessError::Validation(format!("sweep key `{key}` does not name a table field"))
            })?;
            if parts.peek().is_none() {
                table.insert(part.to_string(), value.clone());
                break;
            }
            node = table
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
        }
        root.try_into()
            .map_err(|e| HarnessError::Validation(format!("sweep `{key}` = {value}: {e}")))
    }
}

/// A config together with the directory its relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let config = ExperimentConfig::from_toml(&text)?;
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { config, base_dir })
    }

    pub fn graph_path(&self) -> PathBuf {
        self.base_dir.join(&self.config.graph)
    }
}
