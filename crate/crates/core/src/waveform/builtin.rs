use serde::{Deserialize, Serialize};

use super::{TemporalWaveform, TimeGrid, WaveformError};

/// Built-in temporal modes, all ending at `t_m2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Builtin {
    /// `e^{γ(t − t_m2)}` up to `t_m2`: constant modulation.
    ExpRising,
    Square { width_s: f64 },
    /// Produced by a square modulation window of the given width.
    SquarePulseModulated { width_s: f64 },
    /// `+1` bin, gap, `−1` bin.
    BalancedTimeBin { bin_s: f64, gap_s: f64 },
}

fn samples_for(width: f64, dt: f64) -> Result<usize, WaveformError> {
    let k = (width / dt).round();
    if !(k >= 1.0) {
        return Err(WaveformError::InvalidParam(format!("width {width} s below one sample")));
    }
    Ok(k as usize)
}

pub fn builtin_waveform(b: &Builtin, grid: &TimeGrid, gamma: f64, t_m2: f64) -> Result<TemporalWaveform, WaveformError> {
    if !(gamma > 0.0) {
        return Err(WaveformError::InvalidParam(format!("gamma = {gamma}")));
    }
    let k2 = grid.index_of(t_m2);
    let mut s = vec![0.0; grid.n];
    let window = |len: usize| -> Result<usize, WaveformError> {
        if len > k2 + 1 {
            return Err(WaveformError::InvalidParam("waveform starts before the grid".into()));
        }
        Ok(k2 + 1 - len)
    };
    match b {
        Builtin::ExpRising => {
            for (k, x) in s.iter_mut().enumerate().take(k2 + 1) {
                *x = (gamma * (grid.t(k) - grid.t(k2))).exp();
            }
        }
        Builtin::Square { width_s } => {
            let start = window(samples_for(*width_s, grid.dt)?)?;
            s[start..=k2].iter_mut().for_each(|x| *x = 1.0);
        }
        Builtin::SquarePulseModulated { width_s } => {
            let start = window(samples_for(*width_s, grid.dt)?)?;
            for (k, x) in s.iter_mut().enumerate().take(k2 + 1).skip(start) {
                *x = (gamma * (grid.t(k) - grid.t(k2))).exp();
            }
        }
        Builtin::BalancedTimeBin { bin_s, gap_s } => {
            let bin = samples_for(*bin_s, grid.dt)?;
            let gap = (gap_s / grid.dt).round().max(0.0) as usize;
            let start = window(2 * bin + gap)?;
            s[start..start + bin].iter_mut().for_each(|x| *x = 1.0);
            s[k2 + 1 - bin..=k2].iter_mut().for_each(|x| *x = -1.0);
        }
    }
    TemporalWaveform::new(*grid, s)?.normalized()
}
