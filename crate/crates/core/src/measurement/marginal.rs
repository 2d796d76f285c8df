use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::fock::DensityMatrix;

/// Hermite–Gauss wavefunctions `ψ_0..ψ_cutoff` at `x`.
pub fn hermite_functions(x: f64, cutoff: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cutoff + 1);
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if cutoff >= 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for n in 1..cutoff {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Real kernel `Re(ρ_nm e^{i(m−n)θ})`, so that `pr(x|θ) = ψᵀ K ψ`.
pub fn phase_kernel(rho: &DensityMatrix, theta: f64) -> DMatrix<f64> {
    let d = rho.cutoff() + 1;
    DMatrix::from_fn(d, d, |n, m| {
        let ph = num_complex::Complex64::from_polar(1.0, (m as f64 - n as f64) * theta);
        (rho.get(n, m) * ph).re
    })
}

/// Homodyne probability density of `x_θ = x cos θ + p sin θ`.
pub fn marginal_pdf(rho: &DensityMatrix, theta: f64, x: f64) -> f64 {
    kernel_pdf(&phase_kernel(rho, theta), x)
}

pub fn kernel_pdf(k: &DMatrix<f64>, x: f64) -> f64 {
    let psi = DVector::from_vec(hermite_functions(x, k.nrows() - 1));
    psi.dot(&(k * &psi)).max(0.0)
}

/// Inverse-CDF sampler on a fixed grid.
#[derive(Clone, Debug)]
pub struct MarginalSampler {
    xs: Vec<f64>,
    cdf: Vec<f64>,
}

pub const SAMPLER_RANGE: f64 = 8.0;
pub const SAMPLER_POINTS: usize = 4096;

impl MarginalSampler {
    pub fn new(rho: &DensityMatrix, theta: f64) -> Self {
        let k = phase_kernel(rho, theta);
        let xs: Vec<f64> = (0..SAMPLER_POINTS)
            .map(|i| -SAMPLER_RANGE + 2.0 * SAMPLER_RANGE * i as f64 / (SAMPLER_POINTS - 1) as f64)
            .collect();
        let pdf: Vec<f64> = xs.iter().map(|x| kernel_pdf(&k, *x)).collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = *cdf.last().unwrap();
        cdf.iter_mut().for_each(|c| *c /= total);
        Self { xs, cdf }
    }

    /// Maps `u ∈ [0, 1)` to a quadrature value.
    pub fn sample(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|c| *c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let w = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.xs[i - 1] + w * (self.xs[i] - self.xs[i - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displace_op, squeeze_op, FockVector};
    use num_complex::Complex64 as C64;

    fn integrate(f: impl Fn(f64) -> f64) -> (f64, f64, f64) {
        let h = 0.005;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..=3200 {
            let x = -8.0 + i as f64 * h;
            let p = f(x) * h;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        (m0, m1, m2)
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let h = 0.01;
        let mut gram = DMatrix::<f64>::zeros(8, 8);
        for i in 0..=2000 {
            let x = -10.0 + i as f64 * h;
            let p = DVector::from_vec(hermite_functions(x, 7));
            gram += &p * p.transpose() * h;
        }
        assert!((gram - DMatrix::identity(8, 8)).amax() < 1e-10);
    }

    #[test]
    fn vacuum_and_single_photon() {
        let vac = DensityMatrix::vacuum(10);
        let (n, mean, var) = integrate(|x| marginal_pdf(&vac, 0.7, x));
        assert!((n - 1.0).abs() < 1e-6 && mean.abs() < 1e-12 && (var - 0.5).abs() < 1e-9);
        let one = DensityMatrix::fock(1, 10);
        assert_eq!(marginal_pdf(&one, 0.3, 0.0), 0.0);
        let x: f64 = 0.8;
        let expect = 2.0 * x * x * (-x * x).exp() / PI.sqrt();
        assert!((marginal_pdf(&one, 1.1, x) - expect).abs() < 1e-14);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let r = 0.4;
        let sv = squeeze_op(r, 30).unwrap().apply(&FockVector::vacuum(30)).unwrap().value;
        let rho = sv.to_density();
        let (_, _, v0) = integrate(|x| marginal_pdf(&rho, 0.0, x));
        assert!((v0 - (-2.0 * r).exp() / 2.0).abs() < 1e-6);
        let (_, _, v90) = integrate(|x| marginal_pdf(&rho, PI / 2.0, x));
        assert!((v90 - (2.0 * r).exp() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_mean_follows_local_oscillator_phase() {
        let alpha = C64::new(0.6, 0.9);
        let coh = displace_op(alpha, 30).unwrap().apply(&FockVector::vacuum(30)).unwrap().value;
        let rho = coh.to_density();
        for theta in [0.0, 0.4, PI / 2.0, 2.5] {
            let (_, mean, _) = integrate(|x| marginal_pdf(&rho, theta, x));
            let expect = 2f64.sqrt() * (alpha * C64::from_polar(1.0, -theta)).re;
            assert!((mean - expect).abs() < 1e-8, "θ = {theta}");
        }
    }

    #[test]
    fn sampler_reproduces_moments() {
        let one = DensityMatrix::fock(1, 10);
        let s = MarginalSampler::new(&one, 0.0);
        let n = 20000;
        let second: f64 = (0..n).map(|i| s.sample((i as f64 + 0.5) / n as f64).powi(2)).sum::<f64>() / n as f64;
        assert!((second - 1.5).abs() < 1e-3, "{second}");
    }
}
