//! Temporal modes, modulation programs and the cavity-filtered detection model.

mod builtin;
mod io;
mod timing;

pub use builtin::{builtin_waveform, Builtin};
pub use io::{read_columns_csv, write_columns_csv};
pub use timing::{detection_rate, repetition_check, success_window, RepetitionReport, SuccessWindow};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Sample spacing of a 3.125 GS/s digitizer.
pub const DEFAULT_DT: f64 = 0.32e-9;
/// 2 µs frame.
pub const DEFAULT_SAMPLES: usize = 6250;
pub const AWG_LIMIT_V: f64 = 0.4;

#[derive(Debug, Error)]
pub enum WaveformError {
    #[error("modulation is identically zero")]
    EmptyModulation,
    #[error("target has support at t = {t:.3e} s, after t_m2 = {t_m2:.3e} s")]
    UnreachableWaveform { t: f64, t_m2: f64 },
    #[error("AWG voltage {max_v:.4} V exceeds ±{limit} V; scale sin_m by {rescale:.4}")]
    RangeExceeded { max_v: f64, limit: f64, rescale: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self, WaveformError> {
        if !(dt > 0.0) || n < 2 {
            return Err(WaveformError::InvalidParam(format!("grid dt = {dt}, n = {n}")));
        }
        Ok(Self { t0, dt, n })
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.t(self.n - 1)
    }

    /// Nearest sample index, clamped to the grid.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.n == other.n
            && (self.dt - other.dt).abs() <= 1e-12 * self.dt
            && (self.t0 - other.t0).abs() <= 1e-9 * self.dt
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self { t0: 0.0, dt: DEFAULT_DT, n: DEFAULT_SAMPLES }
    }
}

/// Real temporal mode in units of 1/√s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalWaveform {
    pub grid: TimeGrid,
    pub samples: Vec<f64>,
}

impl TemporalWaveform {
    pub fn new(grid: TimeGrid, samples: Vec<f64>) -> Result<Self, WaveformError> {
        if samples.len() != grid.n {
            return Err(WaveformError::GridMismatch(format!("{} samples on {} points", samples.len(), grid.n)));
        }
        Ok(Self { grid, samples })
    }

    /// `Σ f² dt`.
    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() * self.grid.dt
    }

    pub fn normalized(mut self) -> Result<Self, WaveformError> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(WaveformError::EmptyModulation);
        }
        self.samples.iter_mut().for_each(|x| *x /= n);
        Ok(self)
    }

    pub fn inner(&self, other: &Self) -> Result<f64, WaveformError> {
        if !self.grid.same_as(&other.grid) {
            return Err(WaveformError::GridMismatch("inner product".into()));
        }
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).sum::<f64>() * self.grid.dt)
    }

    /// `Σ f dt`.
    pub fn integral(&self) -> f64 {
        self.samples.iter().sum::<f64>() * self.grid.dt
    }

    /// Unit-norm discrete vector `f √dt`.
    pub fn discrete(&self) -> Vec<f64> {
        let s = self.grid.dt.sqrt();
        self.samples.iter().map(|x| x * s).collect()
    }
}

/// Transmission amplitude of the trigger modulator over one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulationProgram {
    pub grid: TimeGrid,
    pub sin_m: Vec<f64>,
    pub t_m1: f64,
    pub t_m2: f64,
    /// Cavity half-width in rad/s.
    pub gamma: f64,
}

impl ModulationProgram {
    pub fn new(grid: TimeGrid, sin_m: Vec<f64>, t_m1: f64, t_m2: f64, gamma: f64) -> Result<Self, WaveformError> {
        if sin_m.len() != grid.n {
            return Err(WaveformError::GridMismatch(format!("{} samples on {} points", sin_m.len(), grid.n)));
        }
        if !(gamma > 0.0) {
            return Err(WaveformError::InvalidParam(format!("gamma = {gamma}")));
        }
        if !(t_m1 <= t_m2) {
            return Err(WaveformError::InvalidParam(format!("t_m1 = {t_m1} after t_m2 = {t_m2}")));
        }
        if let Some(x) = sin_m.iter().find(|x| !(x.abs() <= 1.0 + 1e-12)) {
            return Err(WaveformError::InvalidParam(format!("|sin_m| = {x} > 1")));
        }
        let (k1, k2) = (grid.index_of(t_m1), grid.index_of(t_m2));
        if sin_m.iter().enumerate().any(|(k, x)| (k < k1 || k > k2) && *x != 0.0) {
            return Err(WaveformError::InvalidParam("sin_m nonzero outside [t_m1, t_m2]".into()));
        }
        Ok(Self { grid, sin_m, t_m1, t_m2, gamma })
    }

    pub fn t_m2_index(&self) -> usize {
        self.grid.index_of(self.t_m2)
    }
}

/// `gamma` from a linewidth-style frequency, `γ = 2π f`.
pub fn gamma_from_hz(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Cavity impulse response `g(t) ∝ e^{−γt}` for `t ≥ 0`, unit norm.
pub fn cavity_g(gamma: f64, grid: &TimeGrid) -> Result<TemporalWaveform, WaveformError> {
    shifted_decay(gamma, 0.0, grid)
}

/// `h(t) = g(t − t_m2)`.
pub fn displacement_profile(gamma: f64, t_m2: f64, grid: &TimeGrid) -> Result<TemporalWaveform, WaveformError> {
    shifted_decay(gamma, t_m2, grid)
}

fn shifted_decay(gamma: f64, start: f64, grid: &TimeGrid) -> Result<TemporalWaveform, WaveformError> {
    if !(gamma > 0.0) {
        return Err(WaveformError::InvalidParam(format!("gamma = {gamma}")));
    }
    let k0 = if start <= grid.t0 { 0 } else { grid.index_of(start) };
    let samples = (0..grid.n)
        .map(|k| if k < k0 { 0.0 } else { (-gamma * (grid.t(k) - grid.t(k0))).exp() })
        .collect();
    TemporalWaveform::new(*grid, samples)?.normalized()
}

/// `f1(t) = c′ e^{γ(t − t_m2)} sin_m(t)`, with `c′` fixing unit norm.
pub fn modulation_to_waveform(m: &ModulationProgram) -> Result<(TemporalWaveform, f64), WaveformError> {
    let raw: Vec<f64> = m
        .sin_m
        .iter()
        .enumerate()
        .map(|(k, s)| s * (m.gamma * (m.grid.t(k) - m.t_m2)).exp())
        .collect();
    let w = TemporalWaveform::new(m.grid, raw)?;
    let norm = w.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(WaveformError::EmptyModulation);
    }
    let cnorm = 1.0 / norm;
    let samples = w.samples.iter().map(|x| x * cnorm).collect();
    Ok((TemporalWaveform::new(m.grid, samples)?, cnorm))
}

/// Inverse of [`modulation_to_waveform`] with the depth maximized (`max |sin_m| = 1`).
pub fn target_to_modulation(f: &TemporalWaveform, gamma: f64, t_m2: f64) -> Result<ModulationProgram, WaveformError> {
    if !(gamma > 0.0) {
        return Err(WaveformError::InvalidParam(format!("gamma = {gamma}")));
    }
    let grid = f.grid;
    let k2 = grid.index_of(t_m2);
    let peak = f.samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if peak == 0.0 {
        return Err(WaveformError::EmptyModulation);
    }
    if let Some(k) = (k2 + 1..grid.n).find(|&k| f.samples[k].abs() > 1e-12 * peak) {
        return Err(WaveformError::UnreachableWaveform { t: grid.t(k), t_m2 });
    }
    let raw: Vec<f64> = f
        .samples
        .iter()
        .enumerate()
        .map(|(k, x)| if k > k2 { 0.0 } else { x * (-gamma * (grid.t(k) - t_m2)).exp() })
        .collect();
    let kmax = raw.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let sin_m: Vec<f64> = raw.iter().map(|x| x / kmax).collect();
    let k1 = sin_m.iter().position(|x| *x != 0.0).unwrap_or(k2);
    ModulationProgram::new(grid, sin_m, grid.t(k1), t_m2, gamma)
}

/// `V = (2V₀/π) arcsin(sin_m)`, rejected beyond ±0.4 V.
pub fn awg_voltage(m: &ModulationProgram, v0: f64) -> Result<Vec<f64>, WaveformError> {
    if !(v0 > 0.0) {
        return Err(WaveformError::InvalidParam(format!("V0 = {v0}")));
    }
    let v: Vec<f64> = m.sin_m.iter().map(|s| 2.0 * v0 / PI * s.clamp(-1.0, 1.0).asin()).collect();
    let max_v = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if max_v > AWG_LIMIT_V + 1e-12 {
        let max_s = m.sin_m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        return Err(WaveformError::RangeExceeded {
            max_v,
            limit: AWG_LIMIT_V,
            rescale: awg_max_sin(v0) / max_s,
        });
    }
    Ok(v)
}

/// Largest `|sin_m|` reachable within the voltage limit.
pub fn awg_max_sin(v0: f64) -> f64 {
    (PI * AWG_LIMIT_V / (2.0 * v0)).min(PI / 2.0).sin()
}

pub fn awg_to_sin(volts: &[f64], v0: f64) -> Vec<f64> {
    volts.iter().map(|v| (PI * v / (2.0 * v0)).sin()).collect()
}

/// Program scaled to fit the voltage limit.
pub fn rescale_for_awg(m: &ModulationProgram, v0: f64) -> ModulationProgram {
    let max_s = m.sin_m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let cap = awg_max_sin(v0);
    let mut out = m.clone();
    if max_s > cap {
        let s = cap / max_s;
        out.sin_m.iter_mut().for_each(|x| *x *= s);
    }
    out
}

/// `(∫ f_a f_b dt)²` for unit-norm inputs.
pub fn mode_matching(a: &TemporalWaveform, b: &TemporalWaveform) -> Result<f64, WaveformError> {
    let ov = a.inner(b)?;
    Ok((ov * ov / (a.norm_sqr() * b.norm_sqr())).clamp(0.0, 1.0))
}
