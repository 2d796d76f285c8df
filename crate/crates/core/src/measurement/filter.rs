use std::f64::consts::PI;

use rayon::prelude::*;

use super::frames::{FrameSource, QuadratureFrame};
use super::MeasurementError;
use crate::waveform::TimeGrid;

/// Linear-phase low-pass FIR (Hamming-windowed sinc) applied forward and
/// backward, so the net response is zero-phase with magnitude `|H|²`.
#[derive(Clone, Debug)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn design(cutoff_hz: f64, dt: f64) -> Result<Self, MeasurementError> {
        let fs = 1.0 / dt;
        if !(cutoff_hz > 0.0 && cutoff_hz < 0.4 * fs) {
            return Err(MeasurementError::InvalidInput(format!(
                "cutoff {cutoff_hz:.3e} Hz outside (0, 0.4·fs)"
            )));
        }
        let width = 0.4 * cutoff_hz;
        let mut n = (3.3 * fs / width).ceil() as usize;
        if n % 2 == 0 {
            n += 1;
        }
        // the squared response rolls off inside the transition band, so the
        // design edge sits above the requested cutoff to keep the noise bandwidth
        let fd = (cutoff_hz + 0.3 * width) / fs;
        let mid = (n / 2) as f64;
        let mut taps: Vec<f64> = (0..n)
            .map(|k| {
                let m = k as f64 - mid;
                let sinc = if m == 0.0 { 2.0 * fd } else { (2.0 * PI * fd * m).sin() / (PI * m) };
                let w = 0.54 - 0.46 * (2.0 * PI * k as f64 / (n - 1) as f64).cos();
                sinc * w
            })
            .collect();
        let dc: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= dc);
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Magnitude of the single-pass response at `f` (Hz).
    pub fn gain(&self, f: f64, dt: f64) -> f64 {
        let w = 2.0 * PI * f * dt;
        let (re, im) = self
            .taps
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (k, t)| (re + t * (w * k as f64).cos(), im - t * (w * k as f64).sin()));
        (re * re + im * im).sqrt()
    }

    fn run(&self, x: &[f64]) -> Vec<f64> {
        let l = self.taps.len();
        (0..x.len())
            .map(|i| {
                let lo = (i + 1).saturating_sub(l);
                (lo..=i).map(|j| self.taps[i - j] * x[j]).sum()
            })
            .collect()
    }

    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * self.taps.len()).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|k| 2.0 * x[0] - x[k]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|k| 2.0 * x[n - 1] - x[n - 1 - k]));
        let mut y = self.run(&ext);
        y.reverse();
        let mut y = self.run(&y);
        y.reverse();
        y[pad..pad + n].to_vec()
    }
}

pub fn lowpass_fir(frames: &[QuadratureFrame], cutoff_hz: f64) -> Result<Vec<QuadratureFrame>, MeasurementError> {
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let filter = FirFilter::design(cutoff_hz, first.grid.dt)?;
    frames
        .par_iter()
        .map(|f| {
            if !f.grid.same_as(&first.grid) {
                return Err(MeasurementError::GridMismatch);
            }
            Ok(QuadratureFrame { grid: f.grid, samples: filter.filtfilt(&f.samples), lo_phase: f.lo_phase })
        })
        .collect()
}

/// Frame source filtered on demand.
pub struct Filtered<'a> {
    inner: &'a dyn FrameSource,
    filter: FirFilter,
}

impl<'a> Filtered<'a> {
    pub fn new(inner: &'a dyn FrameSource, cutoff_hz: f64) -> Result<Self, MeasurementError> {
        let filter = FirFilter::design(cutoff_hz, inner.grid().dt)?;
        Ok(Self { inner, filter })
    }
}

impl FrameSource for Filtered<'_> {
    fn grid(&self) -> TimeGrid {
        self.inner.grid()
    }
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn lo_phase(&self, i: usize) -> f64 {
        self.inner.lo_phase(i)
    }
    fn frame(&self, i: usize) -> QuadratureFrame {
        let f = self.inner.frame(i);
        QuadratureFrame { samples: self.filter.filtfilt(&f.samples), ..f }
    }
}
