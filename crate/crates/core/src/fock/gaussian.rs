use num_complex::Complex64 as C64;

use super::{annihilation, CMatrix, FockError, FockVector};

/// Largest probability allowed to leave the truncated space when a Gaussian
/// operator is applied.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;

const MIN_CUTOFF: usize = 4;
const MAX_SQUEEZE: f64 = 2.0;
const MAX_DISPLACEMENT: f64 = 4.0;

/// Value paired with the probability mass lost to truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncated<T> {
    pub value: T,
    pub leakage: f64,
}

/// A Gaussian unitary built on a padded space (`2·cutoff + 8`) and cropped to
/// `0..=cutoff`.
#[derive(Clone, Debug)]
pub struct GaussianOp {
    cutoff: usize,
    padded: CMatrix,
    cropped: CMatrix,
}

fn padded_dim(cutoff: usize) -> usize {
    2 * cutoff + 8 + 1
}

impl GaussianOp {
    fn from_generator(generator: CMatrix, cutoff: usize) -> Self {
        let padded = generator.exp();
        let d = cutoff + 1;
        let cropped = padded.view((0, 0), (d, d)).into_owned();
        Self {
            cutoff,
            padded,
            cropped,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// The operator cropped to `0..=cutoff`.
    pub fn matrix(&self) -> &CMatrix {
        &self.cropped
    }

    /// Probability that `|j⟩` is mapped outside `0..=cutoff`.
    pub fn column_leakage(&self, j: usize) -> f64 {
        let kept: f64 = self.cropped.column(j).iter().map(|z| z.norm_sqr()).sum();
        (1.0 - kept).max(0.0)
    }

    /// Applies the operator, measuring the mass pushed above the cutoff.
    /// Fails with `CutoffTooSmall` beyond [`LEAKAGE_TOLERANCE`]; the returned
    /// vector is the cropped (not renormalized) image.
    pub fn apply(&self, v: &FockVector) -> Result<Truncated<FockVector>, FockError> {
        self.apply_with_tolerance(v, LEAKAGE_TOLERANCE)
    }

    pub fn apply_with_tolerance(
        &self,
        v: &FockVector,
        tolerance: f64,
    ) -> Result<Truncated<FockVector>, FockError> {
        if v.cutoff() != self.cutoff {
            return Err(FockError::CutoffMismatch(self.cutoff, v.cutoff()));
        }
        let d = self.cutoff + 1;
        let input = v.to_dvector();
        let full = self.padded.columns(0, d) * input;
        let total = v.norm_sqr();
        let lost: f64 = full.rows(d, full.len() - d).iter().map(|z| z.norm_sqr()).sum();
        let leakage = if total > 0.0 { lost / total } else { 0.0 };
        if leakage > tolerance {
            return Err(FockError::CutoffTooSmall {
                cutoff: self.cutoff,
                leakage,
                tolerance,
            });
        }
        let value = FockVector::from_amps(full.rows(0, d).iter().copied().collect());
        Ok(Truncated { value, leakage })
    }

    /// `self · other` evaluated on the padded space, cropped to `0..=cutoff`.
    pub fn compose(&self, other: &GaussianOp) -> Result<CMatrix, FockError> {
        if self.cutoff != other.cutoff {
            return Err(FockError::CutoffMismatch(self.cutoff, other.cutoff));
        }
        let d = self.cutoff + 1;
        Ok((&self.padded * &other.padded).view((0, 0), (d, d)).into_owned())
    }

    /// Interior-block unitarity error `max |(U†U − I)_{ij}|` over `i, j ≤ upto`.
    pub fn unitarity_error(&self, upto: usize) -> f64 {
        let u = self.padded.columns(0, upto + 1);
        let g = u.adjoint() * u;
        let mut err = 0.0f64;
        for i in 0..=upto {
            for j in 0..=upto {
                let target = if i == j { 1.0 } else { 0.0 };
                err = err.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        err
    }
}

fn check_cutoff(cutoff: usize) -> Result<(), FockError> {
    if cutoff < MIN_CUTOFF {
        return Err(FockError::DegenerateCutoff(cutoff));
    }
    Ok(())
}

/// Single-mode squeezer `S(r) = exp[r(a² − a†²)/2]` with real `r`.
pub fn squeeze_op(r: f64, cutoff: usize) -> Result<GaussianOp, FockError> {
    check_cutoff(cutoff)?;
    if !(r.abs() <= MAX_SQUEEZE) {
        return Err(FockError::DomainError {
            name: "r",
            value: r,
            domain: "[-2, 2]",
        });
    }
    let a = annihilation(padded_dim(cutoff) - 1);
    let a2 = &a * &a;
    let gen = (&a2 - a2.adjoint()).map(|z| z * (0.5 * r));
    Ok(GaussianOp::from_generator(gen, cutoff))
}

/// Displacement `D(α) = exp(α a† − α* a)`.
pub fn displace_op(alpha: C64, cutoff: usize) -> Result<GaussianOp, FockError> {
    check_cutoff(cutoff)?;
    if !(alpha.norm() <= MAX_DISPLACEMENT) {
        return Err(FockError::DomainError {
            name: "|alpha|",
            value: alpha.norm(),
            domain: "[0, 4]",
        });
    }
    let a = annihilation(padded_dim(cutoff) - 1);
    let gen = a.adjoint().map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    Ok(GaussianOp::from_generator(gen, cutoff))
}
