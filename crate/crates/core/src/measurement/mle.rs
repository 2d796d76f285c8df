use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::marginal::hermite_functions;
use super::report::wigner_report;
use super::MeasurementError;
use crate::fock::{CMatrix, DensityMatrix};
use crate::Warning;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub cutoff: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Histogram bins per phase; `None` uses every sample as its own event.
    pub bins: Option<usize>,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { cutoff: 10, max_iter: 5000, tol: 1e-7, bins: Some(200) }
    }
}

#[derive(Clone, Debug)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// Mean log-likelihood per event, starting with the initial guess.
    pub likelihood_trace: Vec<f64>,
    pub wigner_min: f64,
    pub photon_dist: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<Warning>,
}

#[derive(Serialize)]
struct TomographyJson<'a> {
    rho_real: Vec<Vec<f64>>,
    rho_imag: Vec<Vec<f64>>,
    wigner_min: f64,
    photon_dist: &'a [f64],
    iterations: usize,
    converged: bool,
}

impl TomographyResult {
    pub fn to_json(&self) -> serde_json::Value {
        let m = self.rho.matrix();
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|i| m.row(i).iter().map(f).collect()).collect();
        serde_json::to_value(TomographyJson {
            rho_real: rows(|z| z.re),
            rho_imag: rows(|z| z.im),
            wigner_min: self.wigner_min,
            photon_dist: &self.photon_dist,
            iterations: self.iterations,
            converged: self.converged,
        })
        .expect("plain data")
    }
}

// 5-point Gauss–Legendre on [-1, 1]
const GL: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// One likelihood event: frequency weight and transposed projector.
struct Event {
    weight: f64,
    kt: CMatrix,
}

fn phase_factors(theta: f64, d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |n, m| C64::from_polar(1.0, theta * (n as f64 - m as f64)))
}

fn projector(theta: f64, real: DMatrix<f64>) -> CMatrix {
    let d = real.nrows();
    let ph = phase_factors(theta, d);
    // stored transposed so that tr(ρΠ) is an elementwise product
    DMatrix::from_fn(d, d, |m, n| ph[(n, m)] * real[(n, m)])
}

fn bin_events(theta: f64, xs: &[f64], bins: usize, d: usize, total: f64) -> Vec<Event> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    let (lo, hi) = (lo - pad, hi + pad);
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for x in xs {
        counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(b, c)| {
            let (a, mid) = (0.5 * w, lo + (b as f64 + 0.5) * w);
            let mut acc = DMatrix::<f64>::zeros(d, d);
            for (node, wt) in GL {
                let psi = nalgebra::DVector::from_vec(hermite_functions(mid + a * node, d - 1));
                acc += &psi * psi.transpose() * (wt * a);
            }
            Event { weight: *c as f64 / total, kt: projector(theta, acc) }
        })
        .collect()
}

fn sample_events(theta: f64, xs: &[f64], d: usize, total: f64) -> Vec<Event> {
    xs.iter()
        .map(|x| {
            let psi = nalgebra::DVector::from_vec(hermite_functions(*x, d - 1));
            Event { weight: 1.0 / total, kt: projector(theta, &psi * psi.transpose()) }
        })
        .collect()
}

fn events_for(quads: &[(f64, f64)], opts: &MleOptions) -> Vec<Vec<Event>> {
    let mut sorted = quads.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (theta, x) in sorted {
        match groups.last_mut() {
            Some((t, xs)) if *t == theta => xs.push(x),
            _ => groups.push((theta, vec![x])),
        }
    }
    let d = opts.cutoff + 1;
    let total = quads.len() as f64;
    groups
        .par_iter()
        .map(|(theta, xs)| match opts.bins {
            Some(b) => bin_events(*theta, xs, b, d, total),
            None => sample_events(*theta, xs, d, total),
        })
        .collect()
}

fn prob(rho: &CMatrix, kt: &CMatrix) -> f64 {
    rho.iter().zip(kt.iter()).map(|(a, b)| (a * b).re).sum::<f64>().max(1e-300)
}

/// Mean log-likelihood and the operator `R(ρ)`.
fn likelihood(rho: &CMatrix, groups: &[Vec<Event>]) -> (f64, CMatrix) {
    let d = rho.nrows();
    let parts: Vec<(f64, CMatrix)> = groups
        .par_iter()
        .map(|events| {
            let mut r = CMatrix::zeros(d, d);
            let mut l = 0.0;
            for e in events {
                let p = prob(rho, &e.kt);
                l += e.weight * p.ln();
                r += e.kt.transpose() * C64::new(e.weight / p, 0.0);
            }
            (l, r)
        })
        .collect();
    parts.into_iter().fold((0.0, CMatrix::zeros(d, d)), |(l, r), (pl, pr)| (l + pl, r + pr))
}

fn sandwich(a: &CMatrix, rho: &CMatrix) -> CMatrix {
    let m = a * rho * a;
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr: C64 = m.trace();
    m / tr
}

/// Iterative maximum-likelihood reconstruction from `(phase, x)` pairs.
///
/// Steps that would lower the likelihood are replaced by diluted updates
/// `(I + εR) ρ (I + εR)` with decreasing `ε`.
pub fn mle_tomography(quads: &[(f64, f64)], opts: &MleOptions) -> Result<TomographyResult, MeasurementError> {
    if quads.is_empty() {
        return Err(MeasurementError::InvalidInput("no quadrature samples".into()));
    }
    if opts.cutoff == 0 || opts.bins == Some(0) || quads.iter().any(|(t, x)| !t.is_finite() || !x.is_finite()) {
        return Err(MeasurementError::InvalidInput("bad tomography input".into()));
    }
    let groups = events_for(quads, opts);
    let d = opts.cutoff + 1;
    let id = CMatrix::identity(d, d);
    let mut rho = id.clone() / C64::new(d as f64, 0.0);
    let (mut l, mut r) = likelihood(&rho, &groups);
    let mut trace = vec![l];
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut step = None;
        let mut candidate = sandwich(&r, &rho);
        let mut eps = 1.0;
        loop {
            let (lc, rc) = likelihood(&candidate, &groups);
            if lc >= l {
                step = Some((candidate, lc, rc));
                break;
            }
            if eps < 1e-8 {
                break;
            }
            let a = &id + &r * C64::new(eps, 0.0);
            candidate = sandwich(&a, &rho);
            eps *= 0.5;
        }
        let Some((next, lc, rc)) = step else {
            converged = true;
            break;
        };
        last_change = (&next - &rho).iter().map(|z| z.norm()).fold(0.0, f64::max);
        rho = next;
        l = lc;
        r = rc;
        trace.push(l);
        if last_change < opts.tol {
            converged = true;
            break;
        }
    }
    let rho = DensityMatrix::new(rho)?;
    let report = wigner_report(&rho);
    let warnings = if converged {
        Vec::new()
    } else {
        vec![Warning::NonConvergence { iterations, last_change }]
    };
    Ok(TomographyResult {
        photon_dist: rho.photon_distribution(),
        wigner_min: report.w_min,
        rho,
        iterations,
        likelihood_trace: trace,
        converged,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{loss_channel, quadrature_x, squeeze_op, db_to_r, FockVector};
    use crate::measurement::marginal::{marginal_pdf, MarginalSampler};
    use crate::measurement::PhaseSet;
    use crate::rng::{frame_stream, stream_rng};
    use rand::Rng;

    fn sample(rho: &DensityMatrix, per_phase: usize, seed: u64) -> Vec<(f64, f64)> {
        let phases = PhaseSet::default();
        phases
            .phases
            .iter()
            .enumerate()
            .flat_map(|(p, th)| {
                let s = MarginalSampler::new(rho, *th);
                (0..per_phase)
                    .map(|j| (*th, s.sample(stream_rng(seed, frame_stream(p, j)).random::<f64>())))
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn monotone(t: &[f64]) -> bool {
        t.windows(2).all(|w| w[1] >= w[0] - 1e-12)
    }

    #[test]
    fn projector_reproduces_marginal() {
        let psi = FockVector::from_amps(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.5), C64::new(0.3, -0.2)]).normalized().unwrap();
        let rho = psi.to_density();
        let (th, x) = (0.7, -0.4);
        let h = nalgebra::DVector::from_vec(hermite_functions(x, 2));
        let kt = projector(th, &h * h.transpose());
        assert!((prob(rho.matrix(), &kt) - marginal_pdf(&rho, th, x)).abs() < 1e-12);
    }

    #[test]
    fn vacuum_reconstruction() {
        let data = sample(&DensityMatrix::vacuum(10), 5000, 1);
        let r = mle_tomography(&data, &MleOptions::default()).unwrap();
        assert!(r.rho.fidelity(&DensityMatrix::vacuum(10)).unwrap() >= 0.995);
        assert!(monotone(&r.likelihood_trace));
        assert_eq!(r.photon_dist.len(), 11);
    }

    #[test]
    fn lossy_single_photon() {
        let rho = loss_channel(&DensityMatrix::fock(1, 10), 0.67).unwrap();
        let r = mle_tomography(&sample(&rho, 5000, 2), &MleOptions::default()).unwrap();
        assert!((r.photon_dist[1] - 0.67).abs() < 0.02, "{:?}", r.photon_dist);
        assert!(r.rho.fidelity(&rho).unwrap() >= 0.99);
        assert!(monotone(&r.likelihood_trace));
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let r = db_to_r(3.0);
        let psi = squeeze_op(r, 10).unwrap().apply_with_tolerance(&FockVector::vacuum(10), 1e-3).unwrap().value;
        let rho = psi.normalized().unwrap().to_density();
        let t = mle_tomography(&sample(&rho, 5000, 3), &MleOptions::default()).unwrap();
        let x = quadrature_x(11);
        let var = t.rho.expect(&(&x * &x).view((0, 0), (11, 11)).into_owned()).re;
        assert!((var / 0.5 / (-2.0 * r).exp() - 1.0).abs() < 0.05, "{var}");
        assert!(t.rho.fidelity(&rho).unwrap() >= 0.99);
    }

    #[test]
    fn per_sample_mode_agrees() {
        let rho = loss_channel(&DensityMatrix::fock(1, 6), 0.8).unwrap();
        let data = sample(&rho, 300, 4);
        let opts = MleOptions { cutoff: 6, max_iter: 400, tol: 1e-6, bins: None };
        let r = mle_tomography(&data, &opts).unwrap();
        assert!(monotone(&r.likelihood_trace));
        assert!((r.photon_dist[1] - 0.8).abs() < 0.1);
    }

    #[test]
    fn non_convergence_flagged() {
        let data = sample(&DensityMatrix::fock(1, 10), 200, 5);
        let r = mle_tomography(&data, &MleOptions { max_iter: 3, tol: 0.0, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.warnings[0], Warning::NonConvergence { iterations: 3, .. }));
    }
}
