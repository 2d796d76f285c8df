use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use std::f64::consts::PI;

use super::frames::{FrameSource, QuadratureFrame};
use super::MeasurementError;
use crate::waveform::{TemporalWaveform, TimeGrid};

#[derive(Clone, Debug)]
pub struct PcaResult {
    /// Unit-norm temporal modes, by decreasing variance.
    pub components: Vec<TemporalWaveform>,
    pub variances: Vec<f64>,
    /// Factor applied to raw variances so the vacuum reads 1/2.
    pub normalization: f64,
}

fn sorted_eigen(cov: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let vals = order.iter().map(|i| eig.eigenvalues[*i]).collect();
    let vecs = DMatrix::from_columns(&order.iter().map(|i| eig.eigenvectors.column(*i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

fn orient(mut v: Vec<f64>) -> Vec<f64> {
    let peak = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
    if peak < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn to_waveform(grid: TimeGrid, discrete: Vec<f64>) -> TemporalWaveform {
    let s = 1.0 / grid.dt.sqrt();
    TemporalWaveform { grid, samples: discrete.into_iter().map(|x| x * s).collect() }
}

/// Full-resolution PCA of in-memory frames, pooled over phases.
///
/// Variances are per discrete mode, where white vacuum noise reads 1/2.
pub fn pca(frames: &[QuadratureFrame]) -> Result<PcaResult, MeasurementError> {
    let n = frames.first().map(|f| f.grid.n).unwrap_or(0);
    if frames.len() < 2 * n.max(1) {
        return Err(MeasurementError::InsufficientFrames { frames: frames.len(), needed: 2 * n.max(1) });
    }
    let grid = frames[0].grid;
    if frames.iter().any(|f| !f.grid.same_as(&grid)) {
        return Err(MeasurementError::GridMismatch);
    }
    let data = DMatrix::from_fn(frames.len(), n, |i, k| frames[i].samples[k]);
    let mean = data.row_mean();
    let centered = DMatrix::from_fn(frames.len(), n, |i, k| data[(i, k)] - mean[k]);
    let cov = centered.transpose() * &centered / (frames.len() as f64 - 1.0);
    let (vals, vecs) = sorted_eigen(cov);
    let components = (0..n)
        .map(|j| to_waveform(grid, orient(vecs.column(j).iter().copied().collect())))
        .collect();
    Ok(PcaResult { components, variances: vals, normalization: 1.0 })
}

/// Orthonormal set of discrete modes: candidates first, then low-frequency
/// cosines as a noise buffer.
#[derive(Clone, Debug)]
pub struct Subspace {
    grid: TimeGrid,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    pub fn new(grid: TimeGrid, candidates: &[TemporalWaveform], buffer: usize) -> Result<Self, MeasurementError> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut push = |mut v: Vec<f64>| {
            for _ in 0..2 {
                for b in &basis {
                    let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
            }
        };
        for c in candidates {
            if !c.grid.same_as(&grid) {
                return Err(MeasurementError::GridMismatch);
            }
            push(c.discrete());
        }
        let n = grid.n;
        for j in 0..buffer {
            push((0..n).map(|k| (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos()).collect());
        }
        Ok(Self { grid, basis })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, frame: &QuadratureFrame) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(&frame.samples).map(|(x, y)| x * y).sum())
            .collect()
    }

    /// Discrete mode with the given subspace coordinates.
    pub fn mode(&self, c: &[f64]) -> TemporalWaveform {
        let mut v = vec![0.0; self.grid.n];
        for (b, w) in self.basis.iter().zip(c) {
            v.iter_mut().zip(b).for_each(|(x, y)| *x += w * y);
        }
        to_waveform(self.grid, v)
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }
}

/// Streaming PCA in a reduced subspace, keeping per-frame coordinates.
#[derive(Clone, Debug)]
pub struct SubspacePca {
    pub result: PcaResult,
    /// Eigenvectors in subspace coordinates, one column per component.
    pub vectors: DMatrix<f64>,
    coords: Vec<f64>,
    dim: usize,
}

fn covariance(coords: &[f64], dim: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = coords.len() / dim;
    let mut mean = DVector::zeros(dim);
    for r in coords.chunks(dim) {
        mean += DVector::from_column_slice(r);
    }
    mean /= rows as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for r in coords.chunks(dim) {
        let d = DVector::from_column_slice(r) - &mean;
        cov.syger(1.0, &d, &d, 1.0);
    }
    cov.fill_upper_triangle_with_lower_triangle();
    (cov / (rows as f64 - 1.0).max(1.0), mean)
}

fn project_all(src: &dyn FrameSource, sub: &Subspace) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..src.len()).into_par_iter().map(|i| sub.coords(&src.frame(i))).collect();
    rows.concat()
}

/// PCA over `src` projected on `sub`; with a vacuum reference the variances
/// are rescaled so the vacuum variance along PC-1 reads 1/2.
pub fn pca_subspace(
    src: &dyn FrameSource,
    vacuum: Option<&dyn FrameSource>,
    sub: &Subspace,
) -> Result<SubspacePca, MeasurementError> {
    let dim = sub.dim();
    if src.len() < 2 * dim {
        return Err(MeasurementError::InsufficientFrames { frames: src.len(), needed: 2 * dim });
    }
    if !src.grid().same_as(&sub.grid()) {
        return Err(MeasurementError::GridMismatch);
    }
    let coords = project_all(src, sub);
    let (cov, _) = covariance(&coords, dim);
    let (vals, vecs) = sorted_eigen(cov);
    let vecs = DMatrix::from_columns(
        &(0..dim)
            .map(|j| {
                let col: Vec<f64> = vecs.column(j).iter().copied().collect();
                let m = sub.mode(&col);
                let peak = m.samples.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
                let s = if peak < 0.0 { -1.0 } else { 1.0 };
                DVector::from_iterator(dim, col.into_iter().map(|x| x * s))
            })
            .collect::<Vec<_>>(),
    );
    let normalization = match vacuum {
        Some(v) => {
            if v.len() < 2 {
                return Err(MeasurementError::InsufficientFrames { frames: v.len(), needed: 2 });
            }
            let (vcov, _) = covariance(&project_all(v, sub), dim);
            let pc1 = vecs.column(0);
            0.5 / pc1.dot(&(&vcov * pc1))
        }
        None => 1.0,
    };
    let components = (0..dim)
        .map(|j| sub.mode(&vecs.column(j).iter().copied().collect::<Vec<_>>()))
        .collect();
    Ok(SubspacePca {
        result: PcaResult { components, variances: vals.iter().map(|v| v * normalization).collect(), normalization },
        vectors: vecs,
        coords,
        dim,
    })
}

impl SubspacePca {
    /// Per-frame amplitude along component `j`, scaled by the vacuum normalization.
    pub fn scores(&self, j: usize) -> Vec<f64> {
        let v = self.vectors.column(j);
        let s = self.result.normalization.sqrt();
        self.coords
            .chunks(self.dim)
            .map(|r| s * r.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Flips component `j` so that it overlaps positively with `reference`.
    pub fn align(&mut self, j: usize, reference: &TemporalWaveform) -> Result<(), MeasurementError> {
        let ov = self.result.components[j].inner(reference).map_err(|_| MeasurementError::GridMismatch)?;
        if ov < 0.0 {
            self.vectors.column_mut(j).neg_mut();
            self.result.components[j].samples.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(())
    }
}
