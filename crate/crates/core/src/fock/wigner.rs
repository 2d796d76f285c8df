use std::f64::consts::{FRAC_1_PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::DensityMatrix;

/// `L_n^{(k)}(y)` for `n = 0..len`.
fn laguerre_column(k: usize, y: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let kf = k as f64;
    out.push(1.0);
    if len > 1 {
        out.push(1.0 + kf - y);
    }
    for j in 1..len.saturating_sub(1) {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - y) * out[j] - (jf + kf) * out[j - 1]) / (jf + 1.0);
        out.push(next);
    }
    out
}

/// Wigner function at phase-space point `(x, p)`, normalized so that
/// `∫∫ W dx dp = 1`.
pub fn wigner(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let beta = C64::new(x, p) / SQRT_2;
    let gamma = beta * 2.0;
    let y = gamma.norm_sqr();
    let gauss = (-0.5 * y).exp();
    let d = rho.cutoff() + 1;
    let mut acc = 0.0;
    for k in 0..d {
        let lag = laguerre_column(k, y, d - k);
        for n in 0..d - k {
            let m = n + k;
            // √(n!/m!) γ^k
            let mut coef = C64::new(1.0, 0.0);
            for j in 1..=k {
                coef *= gamma / ((n + j) as f64).sqrt();
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let elem = coef * (sign * gauss * lag[n]);
            let term = rho.get(n, m) * elem;
            acc += if k == 0 { term.re } else { 2.0 * term.re };
        }
    }
    acc * FRAC_1_PI
}

/// `W(0, 0) = (1/π) Σ (−1)ⁿ ρ_nn`.
pub fn wigner_origin(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho
        .photon_distribution()
        .iter()
        .enumerate()
        .map(|(n, p)| if n % 2 == 0 { *p } else { -*p })
        .sum();
    s * FRAC_1_PI
}

/// `W` on the grid `xs × ps`; entry `(i, j)` is `W(xs[i], ps[j])`.
pub fn wigner_grid(rho: &DensityMatrix, xs: &[f64], ps: &[f64]) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = ps
        .par_iter()
        .map(|&p| xs.iter().map(|&x| wigner(rho, x, p)).collect())
        .collect();
    DMatrix::from_fn(xs.len(), ps.len(), |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displace_op, FockVector};

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn fock_states_at_origin() {
        let vac = DensityMatrix::vacuum(10);
        assert!((wigner(&vac, 0.0, 0.0) - FRAC_1_PI).abs() < 1e-14);
        let one = DensityMatrix::fock(1, 10);
        assert!((wigner(&one, 0.0, 0.0) + FRAC_1_PI).abs() < 1e-14);
        assert!((wigner_origin(&one) + FRAC_1_PI).abs() < 1e-15);
        let two = DensityMatrix::fock(2, 10);
        assert!((wigner(&two, 0.0, 0.0) - wigner_origin(&two)).abs() < 1e-14);
    }

    #[test]
    fn vacuum_is_gaussian() {
        let vac = DensityMatrix::vacuum(6);
        let (x, p) = (0.7, -0.4);
        let expected = FRAC_1_PI * (-(x * x + p * p) as f64).exp();
        assert!((wigner(&vac, x, p) - expected).abs() < 1e-14);
    }

    #[test]
    fn coherent_state_is_centred() {
        let alpha = C64::new(0.8, -0.5);
        let coh = displace_op(alpha, 30).unwrap().apply(&FockVector::vacuum(30)).unwrap().value;
        let rho = coh.to_density();
        let (x0, p0) = (SQRT_2 * alpha.re, SQRT_2 * alpha.im);
        assert!((wigner(&rho, x0, p0) - FRAC_1_PI).abs() < 1e-9);
        let off = wigner(&rho, x0 + 0.3, p0 - 0.2);
        assert!((off - FRAC_1_PI * (-0.13f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn grid_integrates_to_one() {
        let psi = FockVector::from_amps(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.48),
            C64::new(0.64, 0.0),
            C64::new(0.0, 0.0),
        ])
        .normalized()
        .unwrap();
        let rho = psi.to_density();
        let xs = linspace(-6.0, 6.0, 161);
        let h = xs[1] - xs[0];
        let w = wigner_grid(&rho, &xs, &xs);
        let total: f64 = w.iter().sum::<f64>() * h * h;
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
