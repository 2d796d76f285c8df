//! Two-mode squeezed resource and photon-number heralding.

mod oracle;

pub use oracle::{oracle_from_resource, trigger_forward_oracle, OracleOutput, SMALL_ALPHA};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{
    beam_splitter, squeeze_op, FockError, FockVector, Truncated, TwoModeState,
};

/// Leakage allowed when building the two-mode resource.
pub const RESOURCE_LEAKAGE: f64 = 1e-4;
/// Largest amplitude mass allowed above index `n` after undoing `S(r_out)`.
pub const STRUCTURE_RESIDUAL: f64 = 1e-4;
const ENTANGLEMENT_THRESHOLD: f64 = 1e-10;
const MIN_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeraldError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("resource is not entangled (|s12| = {s12:.2e}); heralding n = {n} is undefined")]
    NotEntangled { n: usize, s12: f64 },
    #[error("invalid resource parameters: {0}")]
    InvalidParams(String),
    #[error("heralded state for n = {n} has residual {residual:.2e} above index n")]
    StructureViolation { n: usize, residual: f64 },
}

/// Squeezing of the two input modes and the mixing transmissivity `T`.
///
/// `T = 0` leaves the modes unmixed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianResourceParams {
    pub r0: f64,
    pub r1: f64,
    pub t: f64,
}

impl GaussianResourceParams {
    pub fn new(r0: f64, r1: f64, t: f64) -> Result<Self, HeraldError> {
        let p = Self { r0, r1, t };
        p.validate()?;
        Ok(p)
    }

    pub fn from_db(r0_db: f64, r1_db: f64, t: f64) -> Result<Self, HeraldError> {
        Self::new(crate::fock::db_to_r(r0_db), crate::fock::db_to_r(r1_db), t)
    }

    pub fn validate(&self) -> Result<(), HeraldError> {
        if !(0.0..=1.0).contains(&self.t) {
            return Err(HeraldError::InvalidParams(format!("T = {} not in [0, 1]", self.t)));
        }
        if !self.r0.is_finite() || !self.r1.is_finite() {
            return Err(HeraldError::InvalidParams("non-finite squeezing".into()));
        }
        Ok(())
    }

    pub fn reflectivity(&self) -> f64 {
        1.0 - self.t
    }

    pub fn is_entangled(&self) -> bool {
        inverse_covariance(self).s12.abs() >= ENTANGLEMENT_THRESHOLD
    }

    /// `⟨n₁⟩ = T sinh²r₀ + R sinh²r₁`.
    pub fn mean_trigger_photons(&self) -> f64 {
        self.t * self.r0.sinh().powi(2) + self.reflectivity() * self.r1.sinh().powi(2)
    }

    pub fn mean_signal_photons(&self) -> f64 {
        self.reflectivity() * self.r0.sinh().powi(2) + self.t * self.r1.sinh().powi(2)
    }
}

/// Entries of the inverse `x`-quadrature covariance of the resource.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InverseCovariance {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl InverseCovariance {
    /// The covariance `σ` itself, `[[σ11, σ12], [σ12, σ22]]`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let det = self.s11 * self.s22 - self.s12 * self.s12;
        [
            [self.s22 / det, -self.s12 / det],
            [-self.s12 / det, self.s11 / det],
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ACoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// Heralded state for `n` trigger photons, written as `S(r_out) Σ_j c2_j |j⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldDecomposition {
    pub n: usize,
    pub prob: f64,
    pub c2: Vec<C64>,
    pub r_out: f64,
    pub residual: f64,
}

pub fn inverse_covariance(p: &GaussianResourceParams) -> InverseCovariance {
    let (t, r) = (p.t, p.reflectivity());
    let (e0, e1) = ((2.0 * p.r0).exp(), (2.0 * p.r1).exp());
    InverseCovariance {
        s11: 2.0 * (r * e0 + t * e1),
        s12: 2.0 * (r * t).sqrt() * (-e0 + e1),
        s22: 2.0 * (t * e0 + r * e1),
    }
}

pub fn a_coefficients(p: &GaussianResourceParams) -> ACoefficients {
    let s = inverse_covariance(p);
    let a1 = (0.5 + s.s22 / 4.0).sqrt();
    let a2 = -s.s12 / (4.0 * a1);
    let a3 = (s.s11 / 2.0 - s.s12 * s.s12 / (4.0 + 2.0 * s.s22)).sqrt();
    ACoefficients { a1, a2, a3 }
}

/// Squeezing of every heralded branch, independent of the photon number.
pub fn r_out(p: &GaussianResourceParams) -> f64 {
    let (t, r) = (p.t, p.reflectivity());
    let num = 1.0 + t * (2.0 * p.r0).exp() + r * (2.0 * p.r1).exp();
    let den = 1.0 + t * (-2.0 * p.r0).exp() + r * (-2.0 * p.r1).exp();
    // e^{-2 r_out} = e^{-2 r0 - 2 r1} num / den
    p.r0 + p.r1 - 0.5 * (num / den).ln()
}

/// `(S(r0) ⊗ S(r1))|0,0⟩` mixed on the beam splitter, normalized.
pub fn build_resource(
    p: &GaussianResourceParams,
    cutoff: usize,
) -> Result<Truncated<TwoModeState>, HeraldError> {
    p.validate()?;
    let vac = FockVector::vacuum(cutoff);
    let m0 = squeeze_op(p.r0, cutoff)?.apply_with_tolerance(&vac, RESOURCE_LEAKAGE)?;
    let m1 = squeeze_op(p.r1, cutoff)?.apply_with_tolerance(&vac, RESOURCE_LEAKAGE)?;
    let product = TwoModeState::product(&m0.value, &m1.value)?;
    let before = product.norm_sqr();
    let mut mixed = beam_splitter(&product, p.reflectivity())?;
    let lost = 1.0 - mixed.norm_sqr() / before;
    let leakage = 1.0 - (1.0 - m0.leakage) * (1.0 - m1.leakage) * (1.0 - lost);
    if leakage > RESOURCE_LEAKAGE {
        return Err(FockError::CutoffTooSmall {
            cutoff,
            leakage,
            tolerance: RESOURCE_LEAKAGE,
        }
        .into());
    }
    mixed.normalize()?;
    Ok(Truncated {
        value: mixed,
        leakage,
    })
}

/// `⟨n|₁Φ⟩` without normalization; its squared norm is `P(n)`.
pub fn project_mode1(resource: &TwoModeState, n: usize) -> (FockVector, f64) {
    resource.project_mode1(n)
}

fn decompose(psi: &FockVector, n: usize, r: f64) -> Result<(Vec<C64>, f64), HeraldError> {
    let undone = squeeze_op(-r, psi.cutoff())?.apply_with_tolerance(psi, RESOURCE_LEAKAGE)?;
    let amps = undone.value.amps();
    let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let kept: f64 = amps[..=n].iter().map(|z| z.norm_sqr()).sum();
    let residual = ((total - kept) / total).max(0.0);
    if residual > STRUCTURE_RESIDUAL {
        return Err(HeraldError::StructureViolation { n, residual });
    }
    let scale = kept.sqrt();
    Ok((amps[..=n].iter().map(|z| z / scale).collect(), residual))
}

/// Heralds on `n` trigger photons; returns the decomposition and the
/// normalized signal state.
pub fn herald_fock(
    p: &GaussianResourceParams,
    n: usize,
    cutoff: usize,
) -> Result<(HeraldDecomposition, FockVector), HeraldError> {
    let resource = build_resource(p, cutoff)?;
    herald_from_resource(p, &resource.value, n)
}

pub fn herald_from_resource(
    p: &GaussianResourceParams,
    resource: &TwoModeState,
    n: usize,
) -> Result<(HeraldDecomposition, FockVector), HeraldError> {
    let s12 = inverse_covariance(p).s12;
    if n > 0 && s12.abs() < ENTANGLEMENT_THRESHOLD {
        return Err(HeraldError::NotEntangled { n, s12 });
    }
    let (v, prob) = project_mode1(resource, n);
    if prob < MIN_PROBABILITY {
        return Err(HeraldError::NotEntangled { n, s12 });
    }
    let psi = v.normalized()?;
    let r = r_out(p);
    let (c2, residual) = decompose(&psi, n, r)?;
    Ok((
        HeraldDecomposition {
            n,
            prob,
            c2,
            r_out: r,
            residual,
        },
        psi,
    ))
}

/// Normalized `Σ_n C′_n ⟨n|₁Φ⟩`, i.e. `Σ_n C′_n √P(n) |ψ⁽ⁿ⁾⟩`.
pub fn herald_superposition(
    p: &GaussianResourceParams,
    cprime: &[C64],
    cutoff: usize,
) -> Result<FockVector, HeraldError> {
    let resource = build_resource(p, cutoff)?;
    superpose(&resource.value, cprime).map(|(v, _)| v)
}

/// Combination of the mode-1 projections and its squared norm before normalizing.
pub fn superpose(resource: &TwoModeState, cprime: &[C64]) -> Result<(FockVector, f64), HeraldError> {
    let c = resource.cutoff();
    let mut acc = vec![C64::new(0.0, 0.0); c + 1];
    for (n, w) in cprime.iter().enumerate() {
        if *w == C64::new(0.0, 0.0) {
            continue;
        }
        let (v, _) = project_mode1(resource, n);
        for (a, b) in acc.iter_mut().zip(v.amps()) {
            *a += w * b;
        }
    }
    let v = FockVector::from_amps(acc);
    let weight = v.norm_sqr();
    Ok((v.normalized()?, weight))
}
