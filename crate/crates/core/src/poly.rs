//! Complex polynomials in ascending coefficient order, `p(z) = Σ c_k z^k`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("leading coefficient vanishes")]
    ZeroLeading,
    #[error("eigenvalue iteration failed for degree {0}")]
    EigenFailure(usize),
}

pub fn eval(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
}

pub fn derivative(coeffs: &[C64]) -> Vec<C64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect()
}

/// `leading · Π_j (z − r_j)`.
pub fn from_roots(roots: &[C64], leading: C64) -> Vec<C64> {
    let mut out = vec![leading];
    for r in roots {
        let mut next = vec![C64::new(0.0, 0.0); out.len() + 1];
        for (k, c) in out.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        out = next;
    }
    out
}

/// Roots from the eigenvalues of the companion matrix, refined by a few
/// Newton steps on the original polynomial.
pub fn roots(coeffs: &[C64]) -> Result<Vec<C64>, PolyError> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if lead.norm() == 0.0 {
        return Err(PolyError::ZeroLeading);
    }
    if n == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut companion = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    let eig = companion.eigenvalues().ok_or(PolyError::EigenFailure(n))?;
    let d = derivative(coeffs);
    Ok(eig.iter().map(|z| polish(coeffs, &d, *z)).collect())
}

fn polish(p: &[C64], d: &[C64], mut z: C64) -> C64 {
    let mut best = eval(p, z).norm();
    for _ in 0..8 {
        let dz = eval(d, z);
        if dz.norm() == 0.0 {
            break;
        }
        let cand = z - eval(p, z) / dz;
        let val = eval(p, cand).norm();
        if !(val < best) {
            break;
        }
        z = cand;
        best = val;
    }
    z
}

/// Largest relative root condition number,
/// `Σ|c_k||z|^k / (|z|·|p′(z)|)`; absolute for roots at the origin.
pub fn condition(coeffs: &[C64], roots: &[C64]) -> f64 {
    let d = derivative(coeffs);
    roots
        .iter()
        .map(|z| {
            let r = z.norm();
            let scale: f64 = coeffs.iter().enumerate().map(|(k, c)| c.norm() * r.powi(k as i32)).sum();
            let dp = eval(&d, *z).norm();
            let denom = if r > 1e-12 { r * dp } else { dp };
            if denom == 0.0 {
                f64::INFINITY
            } else {
                scale / denom
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn linear_root() {
        let r = roots(&[c(2.0, 1.0), c(0.5, 0.0)]).unwrap();
        assert!((r[0] - c(-4.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn expansion_round_trip() {
        let given = [c(0.3, -0.2), c(-1.1, 0.4), c(0.0, 2.0), c(0.7, 0.7)];
        let p = from_roots(&given, c(0.5, -1.0));
        let found = roots(&p).unwrap();
        for g in &given {
            assert!(found.iter().any(|f| (f - g).norm() < 1e-10), "{g}");
        }
        let back = from_roots(&found, p[4]);
        for (a, b) in back.iter().zip(&p) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn roots_at_origin() {
        let r = roots(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(r.iter().all(|z| z.norm() < 1e-7));
        assert!(roots(&[c(1.0, 0.0), c(0.0, 0.0)]).is_err());
        assert!(roots(&[c(3.0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn clustered_roots_are_ill_conditioned() {
        let p = from_roots(&[c(1.0, 0.0), c(1.0 + 1e-6, 0.0), c(1.0 - 1e-6, 0.0)], c(1.0, 0.0));
        let r = roots(&p).unwrap();
        assert!(condition(&p, &r) > 1e8);
        let q = from_roots(&[c(1.0, 0.0), c(-1.0, 0.0)], c(1.0, 0.0));
        assert!(condition(&q, &roots(&q).unwrap()) < 10.0);
    }
}
