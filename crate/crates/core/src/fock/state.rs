use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, FockError};

/// Complex amplitudes over photon numbers `0..=cutoff` of one mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockVector {
    amps: Vec<C64>,
}

impl FockVector {
    pub fn vacuum(cutoff: usize) -> Self {
        Self::fock(0, cutoff)
    }

    /// Number state `|n⟩`. Panics if `n > cutoff`.
    pub fn fock(n: usize, cutoff: usize) -> Self {
        assert!(n <= cutoff, "Fock index {n} above cutoff {cutoff}");
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        amps[n] = C64::new(1.0, 0.0);
        Self { amps }
    }

    /// Wraps raw amplitudes; the vector is not normalized.
    pub fn from_amps(amps: Vec<C64>) -> Self {
        assert!(!amps.is_empty(), "a Fock vector needs at least one amplitude");
        Self { amps }
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<(), FockError> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(FockError::ZeroNorm);
        }
        self.amps.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self, FockError> {
        self.normalize()?;
        Ok(self)
    }

    /// Copy with a different cutoff: zero padded or cropped.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        for (dst, src) in amps.iter_mut().zip(&self.amps) {
            *dst = *src;
        }
        Self { amps }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64, FockError> {
        if self.cutoff() != other.cutoff() {
            return Err(FockError::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨a|b⟩|²` for normalized vectors; inputs are normalized internally.
    pub fn fidelity(&self, other: &Self) -> Result<f64, FockError> {
        let ov = self.inner(other)?;
        let f = ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr());
        Ok(f.clamp(0.0, 1.0))
    }

    pub fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps)
    }

    pub fn from_dvector(v: &DVector<C64>) -> Self {
        Self {
            amps: v.iter().copied().collect(),
        }
    }

    /// `M·self` for a square matrix of matching dimension.
    pub fn apply(&self, m: &CMatrix) -> Result<Self, FockError> {
        if m.ncols() != self.amps.len() || m.nrows() != self.amps.len() {
            return Err(FockError::CutoffMismatch(m.ncols() - 1, self.cutoff()));
        }
        Ok(Self::from_dvector(&(m * self.to_dvector())))
    }

    /// `⟨self|O|self⟩ / ⟨self|self⟩`.
    pub fn expect(&self, op: &CMatrix) -> Result<C64, FockError> {
        let v = self.to_dvector();
        if op.ncols() != v.len() {
            return Err(FockError::CutoffMismatch(op.ncols() - 1, self.cutoff()));
        }
        Ok((v.adjoint() * op * &v)[(0, 0)] / self.norm_sqr())
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        let n = self.norm_sqr();
        self.amps.iter().map(|a| a.norm_sqr() / n).collect()
    }

    pub fn to_density(&self) -> DensityMatrix {
        let v = self.to_dvector();
        let rho = &v * v.adjoint() / C64::new(self.norm_sqr(), 0.0);
        DensityMatrix { elems: rho }
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_phase(mut self, phi: f64) -> Self {
        let ph = C64::from_polar(1.0, phi);
        self.amps.iter_mut().for_each(|a| *a *= ph);
        self
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on `0..=cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elems: CMatrix,
}

const HERMITIAN_TOL: f64 = 1e-10;
const MIN_EIG_TOL: f64 = -1e-9;

impl DensityMatrix {
    /// Validates hermiticity and positivity, then normalizes the trace.
    pub fn new(elems: CMatrix) -> Result<Self, FockError> {
        if elems.nrows() != elems.ncols() || elems.nrows() == 0 {
            return Err(FockError::InvalidDensity("matrix must be square".into()));
        }
        let herm = (&elems - elems.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(FockError::InvalidDensity(format!(
                "hermiticity violation {herm:.3e}"
            )));
        }
        let tr = elems.trace().re;
        if !(tr > 0.0) {
            return Err(FockError::InvalidDensity(format!("trace {tr}")));
        }
        let rho = Self {
            elems: hermitize(&elems) / C64::new(tr, 0.0),
        };
        let min = rho.min_eigenvalue();
        if min < MIN_EIG_TOL {
            return Err(FockError::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(rho)
    }

    /// Like [`DensityMatrix::new`] but keeps the elements bit-for-bit; the
    /// trace must already be 1 to within 1e-9.
    pub fn from_normalized(elems: CMatrix) -> Result<Self, FockError> {
        Self::new(elems.clone())?;
        let tr = elems.trace().re;
        if (tr - 1.0).abs() > 1e-9 {
            return Err(FockError::InvalidDensity(format!("trace {tr}")));
        }
        Ok(Self { elems })
    }

    /// Skips validation; for internal maps that preserve the density properties
    /// by construction.
    pub(crate) fn from_raw(elems: CMatrix) -> Self {
        Self { elems }
    }

    pub fn vacuum(cutoff: usize) -> Self {
        FockVector::vacuum(cutoff).to_density()
    }

    pub fn fock(n: usize, cutoff: usize) -> Self {
        FockVector::fock(n, cutoff).to_density()
    }

    /// Diagonal state with the given photon-number probabilities.
    pub fn diagonal(probs: &[f64]) -> Result<Self, FockError> {
        let d = probs.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, p) in probs.iter().enumerate() {
            m[(i, i)] = C64::new(*p, 0.0);
        }
        Self::new(m)
    }

    pub fn cutoff(&self) -> usize {
        self.elems.nrows() - 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.elems
    }

    pub fn get(&self, m: usize, n: usize) -> C64 {
        self.elems[(m, n)]
    }

    pub fn trace(&self) -> f64 {
        self.elems.trace().re
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..=self.cutoff()).map(|n| self.elems[(n, n)].re).collect()
    }

    pub fn expect(&self, op: &CMatrix) -> C64 {
        (&self.elems * op).trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.elems * &self.elems).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(hermitize(&self.elems));
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.total_cmp(b));
        vals
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Copy on a different cutoff; cropping renormalizes the trace.
    pub fn resized(&self, cutoff: usize) -> Self {
        let d = cutoff + 1;
        let keep = d.min(self.elems.nrows());
        let mut m = CMatrix::zeros(d, d);
        m.view_mut((0, 0), (keep, keep))
            .copy_from(&self.elems.view((0, 0), (keep, keep)));
        let tr = m.trace().re;
        if tr > 0.0 {
            m /= C64::new(tr, 0.0);
        }
        Self { elems: m }
    }

    /// Uhlmann fidelity `(tr √(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64, FockError> {
        if self.cutoff() != other.cutoff() {
            return Err(FockError::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        let sqrt_rho = psd_sqrt(&self.elems);
        let inner = hermitize(&(&sqrt_rho * &other.elems * &sqrt_rho));
        let eig = SymmetricEigen::new(inner);
        let s: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
        Ok((s * s).clamp(0.0, 1.0))
    }

    /// `⟨ψ|ρ|ψ⟩` for a (normalized internally) pure state.
    pub fn fidelity_pure(&self, psi: &FockVector) -> Result<f64, FockError> {
        if self.cutoff() != psi.cutoff() {
            return Err(FockError::CutoffMismatch(self.cutoff(), psi.cutoff()));
        }
        let v = psi.to_dvector();
        let f = (v.adjoint() * &self.elems * &v)[(0, 0)].re / psi.norm_sqr();
        Ok(f.clamp(0.0, 1.0))
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Square root of a positive semidefinite Hermitian matrix; negative
/// eigenvalues from rounding are clipped.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let eig = SymmetricEigen::new(hermitize(m));
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(l.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_amplitudes() {
        assert_eq!(
            FockVector::vacuum(2).amps(),
            &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]
        );
        assert_eq!(FockVector::vacuum(0).amps(), &[C64::new(1.0, 0.0)]);
        assert!((FockVector::vacuum(40).norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_hits_unit_norm() {
        let mut v = FockVector::from_amps(vec![C64::new(3.0, 1.0), C64::new(-2.0, 0.5)]);
        v.normalize().unwrap();
        assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
        let mut z = FockVector::from_amps(vec![C64::new(0.0, 0.0); 3]);
        assert_eq!(z.normalize(), Err(FockError::ZeroNorm));
    }

    #[test]
    fn fidelity_of_fock_states() {
        let a = FockVector::fock(1, 5);
        assert!((a.fidelity(&a).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(a.fidelity(&FockVector::fock(2, 5)).unwrap(), 0.0);
        assert!(a.fidelity(&FockVector::fock(2, 6)).is_err());
    }

    #[test]
    fn uhlmann_matches_pure_overlap() {
        let a = FockVector::from_amps(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]);
        let b = FockVector::from_amps(vec![C64::new(0.8, 0.0), C64::new(0.6, 0.0), C64::new(0.0, 0.0)]);
        let pure = a.fidelity(&b).unwrap();
        let mixed = a.to_density().fidelity(&b.to_density()).unwrap();
        assert!((pure - mixed).abs() < 1e-7, "{pure} vs {mixed}");
        assert!((a.to_density().fidelity_pure(&b).unwrap() - pure).abs() < 1e-12);
    }

    #[test]
    fn uhlmann_for_commuting_states() {
        // diag(p) vs diag(q): (Σ √(p q))²
        let p = [0.5f64, 0.3, 0.2];
        let q = [0.2, 0.2, 0.6];
        let expected: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().powi(2);
        let f = DensityMatrix::diagonal(&p)
            .unwrap()
            .fidelity(&DensityMatrix::diagonal(&q).unwrap())
            .unwrap();
        assert!((f - expected).abs() < 1e-10);
    }

    #[test]
    fn density_validation() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(0.1, 0.0);
        m[(0, 0)] = C64::new(1.0, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m.clone()).is_err(), "indefinite");
        m[(1, 1)] = C64::new(0.2, 0.0);
        assert!(DensityMatrix::new(m).is_ok());
        let neg = DensityMatrix::diagonal(&[1.2, -0.2]);
        assert!(neg.is_err());
    }

    #[test]
    fn resize_pads_and_crops() {
        let v = FockVector::fock(1, 3).resized(6);
        assert_eq!(v.cutoff(), 6);
        assert_eq!(v.amps()[1], C64::new(1.0, 0.0));
        let rho = DensityMatrix::diagonal(&[0.5, 0.25, 0.25]).unwrap().resized(1);
        assert!((rho.get(0, 0).re - 2.0 / 3.0).abs() < 1e-15);
    }
}
