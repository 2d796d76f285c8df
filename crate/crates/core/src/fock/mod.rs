//! Truncated Fock-space linear algebra for one and two bosonic modes.
//!
//! Conventions used throughout the crate: `x = (a + a†)/√2`, `p = (a − a†)/(√2 i)`
//! (ħ = 1, vacuum variance 1/2), `S(r) = exp[r(a² − a†²)/2]` squeezes `x` for
//! `r > 0`, and `D(α) = exp(α a† − α* a)`.

mod channel;
mod gaussian;
mod state;
pub(crate) mod two_mode;
mod wigner;

pub use channel::loss_channel;
pub use gaussian::{displace_op, squeeze_op, GaussianOp, Truncated, LEAKAGE_TOLERANCE};
pub use state::{DensityMatrix, FockVector};
pub use two_mode::{beam_splitter, TwoModeState};
pub use wigner::{wigner, wigner_grid, wigner_origin};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Dense complex matrix on a truncated Fock space.
pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.1e} at cutoff {cutoff}")]
    CutoffTooSmall {
        cutoff: usize,
        leakage: f64,
        tolerance: f64,
    },
    #[error("cutoff {0} is below the minimum of 4 for Gaussian operators")]
    DegenerateCutoff(usize),
    #[error("{name} = {value} is outside its domain {domain}")]
    DomainError {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("matrix is not a valid density operator: {0}")]
    InvalidDensity(String),
}

/// Position quadrature `x = (a + a†)/√2` on `0..=cutoff`.
pub fn quadrature_x(cutoff: usize) -> CMatrix {
    let a = annihilation(cutoff);
    (&a + a.adjoint()).map(|z| z / std::f64::consts::SQRT_2)
}

/// Momentum quadrature `p = (a − a†)/(√2 i)` on `0..=cutoff`.
pub fn quadrature_p(cutoff: usize) -> CMatrix {
    let a = annihilation(cutoff);
    let scale = C64::new(0.0, -1.0 / std::f64::consts::SQRT_2);
    (&a - a.adjoint()).map(|z| z * scale)
}

/// Truncated annihilation operator.
pub fn annihilation(cutoff: usize) -> CMatrix {
    let d = cutoff + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// Squeezing parameter for a squeezing level given in dB, `e^{−2r} = 10^{−dB/10}`.
pub fn db_to_r(db: f64) -> f64 {
    (10f64.powf(db / 20.0)).ln()
}

pub fn r_to_db(r: f64) -> f64 {
    20.0 * r.exp().log10()
}
