use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::marginal::MarginalSampler;
use super::MeasurementError;
use crate::fock::{loss_channel, DensityMatrix};
use crate::rng::{frame_stream, stream_rng, vacuum_stream};
use crate::waveform::{TemporalWaveform, TimeGrid};

/// Local-oscillator phases of one acquisition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSet {
    pub phases: Vec<f64>,
}

impl PhaseSet {
    pub fn new(phases: Vec<f64>) -> Result<Self, MeasurementError> {
        if phases.is_empty() {
            return Err(MeasurementError::InvalidInput("no phases".into()));
        }
        if phases.iter().any(|p| !(0.0..PI).contains(p)) || phases.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MeasurementError::InvalidInput("phases must increase within [0, π)".into()));
        }
        Ok(Self { phases })
    }

    /// `count` equally spaced phases in `[0, π)`.
    pub fn uniform(count: usize) -> Result<Self, MeasurementError> {
        Self::new((0..count).map(|i| PI * i as f64 / count as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

impl Default for PhaseSet {
    fn default() -> Self {
        Self::uniform(12).expect("valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureFrame {
    pub grid: TimeGrid,
    pub samples: Vec<f64>,
    pub lo_phase: f64,
}

/// Random-access collection of frames, possibly generated on demand.
pub trait FrameSource: Sync {
    fn grid(&self) -> TimeGrid;
    fn len(&self) -> usize;
    fn frame(&self, i: usize) -> QuadratureFrame;
    fn lo_phase(&self, i: usize) -> f64 {
        self.frame(i).lo_phase
    }
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FrameSource for [QuadratureFrame] {
    fn grid(&self) -> TimeGrid {
        self[0].grid
    }
    fn len(&self) -> usize {
        <[QuadratureFrame]>::len(self)
    }
    fn frame(&self, i: usize) -> QuadratureFrame {
        self[i].clone()
    }
    fn lo_phase(&self, i: usize) -> f64 {
        self[i].lo_phase
    }
}

impl FrameSource for Vec<QuadratureFrame> {
    fn grid(&self) -> TimeGrid {
        self[0].grid
    }
    fn len(&self) -> usize {
        <[QuadratureFrame]>::len(self)
    }
    fn frame(&self, i: usize) -> QuadratureFrame {
        self[i].clone()
    }
    fn lo_phase(&self, i: usize) -> f64 {
        self[i].lo_phase
    }
}

/// Homodyne frames of a state carried by the mode `f1`, behind a loss `1 − η`.
///
/// Each sample is white vacuum noise of variance 1/2 with its `f1`
/// component replaced by a quadrature value drawn from the state's marginal.
#[derive(Clone, Debug)]
pub struct SyntheticFrames {
    grid: TimeGrid,
    mode: Vec<f64>,
    phases: PhaseSet,
    samplers: Vec<MarginalSampler>,
    frames_per_phase: usize,
    seed: u64,
    electronic_noise: f64,
    vacuum: bool,
}

impl SyntheticFrames {
    pub fn new(
        rho: &DensityMatrix,
        f1: &TemporalWaveform,
        eta: f64,
        phases: &PhaseSet,
        frames_per_phase: usize,
        seed: u64,
    ) -> Result<Self, MeasurementError> {
        if (f1.norm_sqr() - 1.0).abs() > 1e-6 {
            return Err(MeasurementError::InvalidInput(format!("f1 has norm² {}", f1.norm_sqr())));
        }
        let lossy = loss_channel(rho, eta)?;
        let samplers = phases.phases.par_iter().map(|th| MarginalSampler::new(&lossy, *th)).collect();
        Ok(Self {
            grid: f1.grid,
            mode: f1.discrete(),
            phases: phases.clone(),
            samplers,
            frames_per_phase,
            seed,
            electronic_noise: 0.0,
            vacuum: false,
        })
    }

    /// Frames with the LO phases but no signal, from a separate stream set.
    pub fn vacuum_reference(&self, frames: usize) -> Self {
        let mut v = self.clone();
        v.vacuum = true;
        v.frames_per_phase = frames.div_ceil(self.phases.len().max(1));
        v
    }

    /// Extra white noise with variance `fraction · 1/2` per sample.
    pub fn with_electronic_noise(mut self, fraction: f64) -> Self {
        self.electronic_noise = fraction.max(0.0);
        self
    }

    pub fn phases(&self) -> &PhaseSet {
        &self.phases
    }

    pub fn frames_per_phase(&self) -> usize {
        self.frames_per_phase
    }

    pub fn phase_index(&self, i: usize) -> usize {
        i / self.frames_per_phase
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<(), MeasurementError> {
        if !self.grid.same_as(grid) {
            return Err(MeasurementError::GridMismatch);
        }
        Ok(())
    }
}

impl FrameSource for SyntheticFrames {
    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn len(&self) -> usize {
        self.frames_per_phase * self.phases.len()
    }

    fn lo_phase(&self, i: usize) -> f64 {
        self.phases.phases[i / self.frames_per_phase]
    }

    fn frame(&self, i: usize) -> QuadratureFrame {
        let (p, j) = (i / self.frames_per_phase, i % self.frames_per_phase);
        let stream = if self.vacuum { vacuum_stream(i) } else { frame_stream(p, j) };
        let mut rng = stream_rng(self.seed, stream);
        let q = if self.vacuum {
            None
        } else {
            Some(self.samplers[p].sample(rng.random::<f64>()))
        };
        let sd = 0.5f64.sqrt();
        let mut u: Vec<f64> = (0..self.grid.n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        if let Some(q) = q {
            let along: f64 = u.iter().zip(&self.mode).map(|(a, b)| a * b).sum();
            for (x, m) in u.iter_mut().zip(&self.mode) {
                *x += m * (q - along);
            }
        }
        if self.electronic_noise > 0.0 {
            let se = (0.5 * self.electronic_noise).sqrt();
            for x in u.iter_mut() {
                *x += se * rng.sample::<f64, _>(StandardNormal);
            }
        }
        QuadratureFrame { grid: self.grid, samples: u, lo_phase: self.phases.phases[p] }
    }
}

/// Materializes every frame of `src` in memory.
pub fn synthesize_frames(
    rho: &DensityMatrix,
    f1: &TemporalWaveform,
    eta: f64,
    phases: &PhaseSet,
    frames_per_phase: usize,
    seed: u64,
) -> Result<Vec<QuadratureFrame>, MeasurementError> {
    let src = SyntheticFrames::new(rho, f1, eta, phases, frames_per_phase, seed)?;
    Ok((0..src.len()).into_par_iter().map(|i| src.frame(i)).collect())
}

/// `Σ_k φ_k u_k` with `φ = mode·√dt` normalized; vacuum gives variance 1/2.
pub fn extract_quadrature(frame: &QuadratureFrame, mode: &TemporalWaveform) -> Result<f64, MeasurementError> {
    if !frame.grid.same_as(&mode.grid) {
        return Err(MeasurementError::GridMismatch);
    }
    let norm = mode.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(MeasurementError::InvalidInput("zero mode".into()));
    }
    let s = frame.grid.dt.sqrt() / norm;
    Ok(frame.samples.iter().zip(&mode.samples).map(|(u, m)| u * m * s).sum())
}

const MAGIC: &[u8; 4] = b"HLFR";
const VERSION: u32 = 1;

/// Container header: grid, seed and frame count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameHeader {
    pub dt: f64,
    pub n: usize,
    pub t0: f64,
    pub seed: u64,
    pub count: usize,
}

/// Little-endian binary container: header, then `(phase, samples…)` per frame.
pub fn write_frames(path: &Path, src: &dyn FrameSource, seed: u64) -> Result<(), MeasurementError> {
    let grid = src.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&grid.dt.to_le_bytes())?;
    w.write_all(&(grid.n as u64).to_le_bytes())?;
    w.write_all(&grid.t0.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(src.len() as u64).to_le_bytes())?;
    for i in 0..src.len() {
        let f = src.frame(i);
        w.write_all(&f.lo_phase.to_le_bytes())?;
        for x in &f.samples {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_frames(path: &Path) -> Result<(FrameHeader, Vec<QuadratureFrame>), MeasurementError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if &magic != MAGIC || u32::from_le_bytes(ver) != VERSION {
        return Err(MeasurementError::InvalidInput("not a frame container".into()));
    }
    let dt = read_f64(&mut r)?;
    let n = read_u64(&mut r)? as usize;
    let t0 = read_f64(&mut r)?;
    let seed = read_u64(&mut r)?;
    let count = read_u64(&mut r)? as usize;
    let grid = TimeGrid::new(t0, dt, n).map_err(|e| MeasurementError::InvalidInput(e.to_string()))?;
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let lo_phase = read_f64(&mut r)?;
        let samples = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
        frames.push(QuadratureFrame { grid, samples, lo_phase });
    }
    Ok((FrameHeader { dt, n, t0, seed, count }, frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::{builtin_waveform, Builtin};

    fn small_grid() -> TimeGrid {
        TimeGrid::new(0.0, 0.32e-9, 400).unwrap()
    }

    fn mode(grid: &TimeGrid) -> TemporalWaveform {
        builtin_waveform(&Builtin::SquarePulseModulated { width_s: 60e-9 }, grid, 1.8e7, 100e-9).unwrap()
    }

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn vacuum_variance_in_any_mode() {
        let grid = small_grid();
        let f1 = mode(&grid);
        let phases = PhaseSet::uniform(4).unwrap();
        let frames = synthesize_frames(&DensityMatrix::vacuum(10), &f1, 1.0, &phases, 500, 3).unwrap();
        let other = builtin_waveform(&Builtin::Square { width_s: 20e-9 }, &grid, 1.8e7, 120e-9).unwrap();
        for m in [&f1, &other] {
            let q: Vec<f64> = frames.iter().map(|f| extract_quadrature(f, m).unwrap()).collect();
            let (_, v) = moments(&q);
            assert!((v - 0.5).abs() < 3.0 / (q.len() as f64).sqrt(), "{v}");
        }
    }

    #[test]
    fn single_photon_second_moment() {
        let grid = small_grid();
        let f1 = mode(&grid);
        let phases = PhaseSet::uniform(3).unwrap();
        let frames = synthesize_frames(&DensityMatrix::fock(1, 10), &f1, 1.0, &phases, 2000, 11).unwrap();
        let q: Vec<f64> = frames.iter().map(|f| extract_quadrature(f, &f1).unwrap()).collect();
        let m2 = q.iter().map(|x| x * x).sum::<f64>() / q.len() as f64;
        assert!((m2 - 1.5).abs() < 4.0 * 1.5 / (q.len() as f64).sqrt(), "{m2}");
        let sq = builtin_waveform(&Builtin::Square { width_s: 20e-9 }, &grid, 1.8e7, 30e-9).unwrap();
        assert!(sq.inner(&f1).unwrap().abs() < 1e-12, "{}", sq.inner(&f1).unwrap());
        let qo: Vec<f64> = frames.iter().map(|f| extract_quadrature(f, &sq).unwrap()).collect();
        assert!((moments(&qo).1 - 0.5).abs() < 4.0 * 0.5 / (qo.len() as f64).sqrt());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let grid = small_grid();
        let f1 = mode(&grid);
        let ph = PhaseSet::uniform(2).unwrap();
        let a = SyntheticFrames::new(&DensityMatrix::fock(1, 10), &f1, 0.8, &ph, 5, 42).unwrap();
        let b = SyntheticFrames::new(&DensityMatrix::fock(1, 10), &f1, 0.8, &ph, 5, 42).unwrap();
        let c = SyntheticFrames::new(&DensityMatrix::fock(1, 10), &f1, 0.8, &ph, 5, 43).unwrap();
        assert_eq!(a.frame(7), b.frame(7));
        assert_ne!(a.frame(7).samples, c.frame(7).samples);
        assert_eq!(a.frame(7).lo_phase, ph.phases[1]);
        assert_ne!(a.vacuum_reference(10).frame(0).samples, a.frame(0).samples);
    }

    #[test]
    fn container_round_trip() {
        let grid = small_grid();
        let f1 = mode(&grid);
        let src = SyntheticFrames::new(&DensityMatrix::vacuum(4), &f1, 1.0, &PhaseSet::uniform(2).unwrap(), 3, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        write_frames(&p, &src, 1).unwrap();
        let (h, frames) = read_frames(&p).unwrap();
        assert_eq!(h.count, 6);
        assert_eq!(frames[4], src.frame(4));
    }

    #[test]
    fn zero_frame_and_grid_checks() {
        let grid = small_grid();
        let f1 = mode(&grid);
        let z = QuadratureFrame { grid, samples: vec![0.0; grid.n], lo_phase: 0.0 };
        assert_eq!(extract_quadrature(&z, &f1).unwrap(), 0.0);
        let other = TimeGrid::new(0.0, 0.5e-9, 400).unwrap();
        let bad = QuadratureFrame { grid: other, samples: vec![0.0; 400], lo_phase: 0.0 };
        assert!(extract_quadrature(&bad, &f1).is_err());
        assert!(PhaseSet::new(vec![0.2, 0.1]).is_err());
        assert_eq!(PhaseSet::default().len(), 12);
    }
}
