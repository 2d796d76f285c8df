use nalgebra::SVD;
use num_complex::Complex64 as C64;

use super::{CMatrix, FockError, FockVector};

/// Pure state of two modes, `amps[(n0, n1)]`, each truncated at `cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    amps: CMatrix,
}

impl TwoModeState {
    pub fn new(amps: CMatrix) -> Self {
        assert_eq!(amps.nrows(), amps.ncols(), "both modes share one cutoff");
        Self { amps }
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::product(&FockVector::vacuum(cutoff), &FockVector::vacuum(cutoff))
            .expect("equal cutoffs")
    }

    /// `|a⟩₀ ⊗ |b⟩₁`.
    pub fn product(a: &FockVector, b: &FockVector) -> Result<Self, FockError> {
        if a.cutoff() != b.cutoff() {
            return Err(FockError::CutoffMismatch(a.cutoff(), b.cutoff()));
        }
        let amps = a.to_dvector() * b.to_dvector().transpose();
        Ok(Self { amps })
    }

    pub fn cutoff(&self) -> usize {
        self.amps.nrows() - 1
    }

    pub fn amps(&self) -> &CMatrix {
        &self.amps
    }

    pub fn amp(&self, n0: usize, n1: usize) -> C64 {
        self.amps[(n0, n1)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<(), FockError> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 {
            return Err(FockError::ZeroNorm);
        }
        self.amps /= C64::new(n, 0.0);
        Ok(())
    }

    /// `⟨n|₁` applied to the state: the unnormalized mode-0 vector and its
    /// squared norm.
    pub fn project_mode1(&self, n: usize) -> (FockVector, f64) {
        assert!(n <= self.cutoff(), "projection index {n} above cutoff");
        let v = FockVector::from_amps(self.amps.column(n).iter().copied().collect());
        let p = v.norm_sqr();
        (v, p)
    }

    /// Photon-number distribution of mode 1.
    pub fn mode1_distribution(&self) -> Vec<f64> {
        (0..=self.cutoff())
            .map(|n| self.amps.column(n).iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// `⟨A ⊗ B⟩` for single-mode operators on modes 0 and 1.
    pub fn expect_product(&self, op0: &CMatrix, op1: &CMatrix) -> C64 {
        // (A ⊗ B) Ψ  ↦  A Ψ Bᵀ
        let transformed = op0 * &self.amps * op1.transpose();
        let num: C64 = self
            .amps
            .iter()
            .zip(transformed.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        num / self.norm_sqr()
    }

    /// Von Neumann entropy (nats) of either reduced state.
    pub fn entanglement_entropy(&self) -> f64 {
        let svd = SVD::new(self.amps.clone(), false, false);
        let norm = self.norm_sqr();
        svd.singular_values
            .iter()
            .map(|s| s * s / norm)
            .filter(|p| *p > 1e-300)
            .map(|p| -p * p.ln())
            .sum()
    }
}

/// Output amplitudes of a lossless two-port mixer for the input `|n0, n1⟩`.
///
/// Creation operators map as `a0† → t a0† − s a1†`, `a1† → s a0† + t a1†`
/// with `t = √T`, `s = √(1−T)`. Entry `m0` of the result is the amplitude of
/// `|m0, n0 + n1 − m0⟩`.
pub(crate) fn mix_pair(n0: usize, n1: usize, transmissivity: f64) -> Vec<f64> {
    let t = transmissivity.sqrt();
    let s = (1.0 - transmissivity).max(0.0).sqrt();
    let total = n0 + n1;
    // coefficients indexed by the mode-0 photon count, for the photons placed so far
    let mut cur = vec![0.0f64; total + 1];
    cur[0] = 1.0;
    let mut placed = 0usize;
    let push = |cur: &mut Vec<f64>, placed: usize, u: f64, v: f64, k: usize| {
        let mut next = vec![0.0f64; total + 1];
        for m0 in 0..=placed {
            let c = cur[m0];
            if c == 0.0 {
                continue;
            }
            let m1 = placed - m0;
            next[m0 + 1] += c * u * ((m0 + 1) as f64).sqrt();
            next[m0] += c * v * ((m1 + 1) as f64).sqrt();
        }
        let norm = (k as f64).sqrt();
        next.iter_mut().for_each(|x| *x /= norm);
        *cur = next;
    };
    for k in 1..=n0 {
        push(&mut cur, placed, t, -s, k);
        placed += 1;
    }
    for k in 1..=n1 {
        push(&mut cur, placed, s, t, k);
        placed += 1;
    }
    cur
}

/// Photon-number-conserving beam splitter with transmissivity `T`
/// (`T = 1` is the identity). Amplitude that would land above the cutoff
/// is dropped; compare norms to measure it.
pub fn beam_splitter(state: &TwoModeState, transmissivity: f64) -> Result<TwoModeState, FockError> {
    if !(0.0..=1.0).contains(&transmissivity) {
        return Err(FockError::DomainError {
            name: "T",
            value: transmissivity,
            domain: "[0, 1]",
        });
    }
    let c = state.cutoff();
    let mut out = CMatrix::zeros(c + 1, c + 1);
    for n0 in 0..=c {
        for n1 in 0..=c {
            let amp = state.amps[(n0, n1)];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let total = n0 + n1;
            let mixed = mix_pair(n0, n1, transmissivity);
            for (m0, w) in mixed.iter().enumerate() {
                let m1 = total - m0;
                if m0 <= c && m1 <= c && *w != 0.0 {
                    out[(m0, m1)] += amp * *w;
                }
            }
        }
    }
    Ok(TwoModeState { amps: out })
}
