use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: StateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource: Option<ResourceConfig>,
    #[serde(default)]
    pub planner: PlannerConfig,
    pub waveform: WaveformConfig,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    SinglePhoton,
    /// Squeezed single photon.
    Cat,
    TwoPhoton,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_out: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_re: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients_im: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub r0_db: f64,
    pub r1_db: f64,
    pub transmissivity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[default]
    Symmetric,
    MaxProb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub strategy: StrategyKind,
    pub p_min: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { strategy: StrategyKind::Symmetric, p_min: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformName {
    ExpRising,
    Square,
    SquarePulseModulated,
    BalancedTimeBin,
    /// Samples read from `samples_file` (CSV column `f`).
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    pub name: WaveformName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<PathBuf>,
    #[serde(default = "default_gamma_hz")]
    pub gamma_hz: f64,
    #[serde(default = "default_t_m2_s")]
    pub t_m2_s: f64,
    #[serde(default = "default_dt_s")]
    pub dt_s: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_awg_v0_v")]
    pub awg_v0_v: f64,
}

fn default_gamma_hz() -> f64 {
    2.9e6
}
fn default_t_m2_s() -> f64 {
    1.0e-6
}
fn default_dt_s() -> f64 {
    heraldlab_core::waveform::DEFAULT_DT
}
fn default_samples() -> usize {
    heraldlab_core::waveform::DEFAULT_SAMPLES
}
fn default_awg_v0_v() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SequenceConfig {
    pub tau_rep_s: f64,
    pub n_rep: usize,
    pub dark_rate_hz: f64,
    pub snr_min: f64,
    /// Trigger count rate of the unmodulated steady state.
    pub trigger_rate_hz: f64,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self { tau_rep_s: 200e-9, n_rep: 1200, dark_rate_hz: 300.0, snr_min: 10.0, trigger_rate_hz: 1e5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementConfig {
    pub phases: usize,
    pub frames_per_phase: usize,
    pub eta: f64,
    pub seed: u64,
    pub cutoff_sim: usize,
    pub cutoff_tomo: usize,
    pub vacuum_frames: usize,
    pub buffer_modes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lowpass_hz: Option<f64>,
    pub electronic_noise: f64,
    pub mle_max_iter: usize,
    pub mle_tol: f64,
    /// Zero selects per-sample likelihood.
    pub mle_bins: usize,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            phases: 12,
            frames_per_phase: 5000,
            eta: 1.0,
            seed: 1,
            cutoff_sim: 30,
            cutoff_tomo: 10,
            vacuum_frames: 5000,
            buffer_modes: 16,
            lowpass_hz: None,
            electronic_noise: 0.0,
            mle_max_iter: 5000,
            mle_tol: 1e-7,
            mle_bins: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_wigner_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_mode_matching: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_herald_fidelity: Option<f64>,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(f) = &cfg.waveform.samples_file {
            if f.is_relative() {
                cfg.waveform.samples_file = Some(path.parent().unwrap_or(Path::new(".")).join(f));
            }
        }
        Ok((cfg, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.state;
        if let Some(r) = s.r_out {
            check(r.is_finite() && r.abs() <= 1.5, || format!("state.r_out = {r} outside [-1.5, 1.5]"))?;
        }
        match s.kind {
            StateKind::Custom => {
                let re = s.coefficients_re.as_ref().ok_or_else(|| CliError::Config("custom state needs coefficients_re".into()))?;
                check(!re.is_empty() && re.len() <= 6, || "coefficients_re must hold 1 to 6 entries".into())?;
                if let Some(im) = &s.coefficients_im {
                    check(im.len() == re.len(), || "coefficients_im length differs from coefficients_re".into())?;
                }
            }
            _ => check(s.coefficients_re.is_none() && s.coefficients_im.is_none(), || {
                "coefficients are only allowed for custom states".into()
            })?,
        }
        if s.kind == StateKind::Cat {
            check(self.resource.is_some() || s.r_out.is_some(), || "cat state needs a resource or r_out".into())?;
        }
        if let Some(r) = &self.resource {
            check((0.0..=1.0).contains(&r.transmissivity), || format!("resource.transmissivity = {} not in [0, 1]", r.transmissivity))?;
            for (k, v) in [("r0_db", r.r0_db), ("r1_db", r.r1_db)] {
                check(v.is_finite() && v.abs() <= 17.0, || format!("resource.{k} = {v} outside [-17, 17] dB"))?;
            }
        }
        check(self.planner.p_min >= 0.0 && self.planner.p_min < 1.0, || "planner.p_min must lie in [0, 1)".into())?;

        let w = &self.waveform;
        check(w.gamma_hz.is_finite() && w.gamma_hz > 0.0, || format!("waveform.gamma_hz = {} must be positive", w.gamma_hz))?;
        check(w.dt_s > 0.0 && w.samples >= 16, || "waveform grid needs dt_s > 0 and at least 16 samples".into())?;
        check(w.t_m2_s > 0.0 && w.t_m2_s < w.dt_s * w.samples as f64, || "waveform.t_m2_s must lie inside the frame".into())?;
        check(w.awg_v0_v > 0.0, || "waveform.awg_v0_v must be positive".into())?;
        let need = |v: Option<f64>, k: &str| -> Result<(), CliError> {
            match v {
                Some(x) if x > 0.0 => Ok(()),
                _ => Err(CliError::Config(format!("waveform {:?} needs a positive {k}", w.name))),
            }
        };
        match w.name {
            WaveformName::Square | WaveformName::SquarePulseModulated => need(w.width_s, "width_s")?,
            WaveformName::BalancedTimeBin => {
                need(w.bin_s, "bin_s")?;
                check(w.gap_s.is_some_and(|g| g >= 0.0), || "balanced_time_bin needs gap_s >= 0".into())?;
            }
            WaveformName::Custom => check(w.samples_file.is_some(), || "custom waveform needs samples_file".into())?,
            WaveformName::ExpRising => {}
        }

        let q = &self.sequence;
        check(q.tau_rep_s > 0.0 && q.n_rep > 0, || "sequence needs tau_rep_s > 0 and n_rep > 0".into())?;
        check(q.dark_rate_hz >= 0.0 && q.snr_min >= 0.0 && q.trigger_rate_hz > 0.0, || "sequence rates must be non-negative".into())?;

        let m = &self.measurement;
        check(m.phases >= 1 && m.phases <= 180, || "measurement.phases must be in 1..=180".into())?;
        check(m.frames_per_phase >= 1, || "measurement.frames_per_phase must be positive".into())?;
        check((0.0..=1.0).contains(&m.eta), || format!("measurement.eta = {} not in [0, 1]", m.eta))?;
        check(m.cutoff_sim >= 4 && m.cutoff_sim <= 80, || "measurement.cutoff_sim must be in 4..=80".into())?;
        check(m.cutoff_tomo >= 1 && m.cutoff_tomo <= m.cutoff_sim, || "measurement.cutoff_tomo must be in 1..=cutoff_sim".into())?;
        check(m.vacuum_frames >= 2, || "measurement.vacuum_frames must be at least 2".into())?;
        check(m.electronic_noise >= 0.0, || "measurement.electronic_noise must be non-negative".into())?;
        check(m.mle_max_iter >= 1 && m.mle_tol >= 0.0, || "measurement MLE settings invalid".into())?;
        if let Some(f) = m.lowpass_hz {
            check(f > 0.0 && f < 0.4 / w.dt_s, || format!("measurement.lowpass_hz = {f} outside (0, 0.4/dt_s)"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[state]
kind = "single_photon"

[resource]
r0_db = 3.0
r1_db = -3.0
transmissivity = 0.5

[waveform]
name = "square_pulse_modulated"
width_s = 100e-9
"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.measurement.phases, 12);
        assert_eq!(c.waveform.samples, 6250);
        assert_eq!(c.planner.strategy, StrategyKind::Symmetric);
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        c.measurement.lowpass_hz = Some(100e6);
        c.thresholds.max_wigner_min = Some(0.0);
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("width_s = 100e-9", "width_s = 100e-9\nwidth_ns = 100");
        assert!(matches!(ExperimentConfig::from_toml(&bad), Err(CliError::Config(_))));
        let bad = format!("{MINIMAL}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn domain_errors() {
        for (from, to) in [
            ("transmissivity = 0.5", "transmissivity = 1.2"),
            ("width_s = 100e-9", "width_s = 100e-9\ngamma_hz = 0.0"),
            ("width_s = 100e-9", "width_s = -1.0"),
        ] {
            assert!(ExperimentConfig::from_toml(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }
}
