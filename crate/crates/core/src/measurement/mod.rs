//! Synthetic balanced-homodyne acquisition, temporal-mode extraction and
//! density-matrix reconstruction.

mod filter;
mod frames;
mod marginal;
mod mle;
mod pca;
mod report;

pub use filter::{lowpass_fir, FirFilter, Filtered};
pub use frames::{
    extract_quadrature, read_frames, synthesize_frames, write_frames, FrameHeader, FrameSource, PhaseSet,
    QuadratureFrame, SyntheticFrames,
};
pub use marginal::{hermite_functions, kernel_pdf, marginal_pdf, phase_kernel, MarginalSampler};
pub use mle::{mle_tomography, MleOptions, TomographyResult};
pub use pca::{pca, pca_subspace, PcaResult, Subspace, SubspacePca};
pub use report::{wigner_report, WignerReport};

use thiserror::Error;

use crate::fock::FockError;

#[derive(Debug, Error)]
pub enum MeasurementError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("frame grid does not match the mode grid")]
    GridMismatch,
    #[error("{frames} frames is too few, need at least {needed}")]
    InsufficientFrames { frames: usize, needed: usize },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
