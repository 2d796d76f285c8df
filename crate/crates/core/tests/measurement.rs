use heraldlab_core::fock::{squeeze_op, DensityMatrix, FockVector};
use heraldlab_core::measurement::{
    extract_quadrature, marginal_pdf, mle_tomography, FrameSource, MleOptions, PhaseSet, SyntheticFrames,
};
use heraldlab_core::waveform::{builtin_waveform, Builtin, TemporalWaveform, TimeGrid};

fn grid() -> TimeGrid {
    TimeGrid::new(0.0, 0.32e-9, 400).unwrap()
}

fn f1() -> TemporalWaveform {
    builtin_waveform(&Builtin::SquarePulseModulated { width_s: 60e-9 }, &grid(), 1.8e7, 100e-9).unwrap()
}

fn marginal_moments(rho: &DensityMatrix, theta: f64) -> (f64, f64) {
    let h = 0.005;
    let xs = (-2400..=2400).map(|k| k as f64 * h);
    xs.fold((0.0, 0.0), |(m1, m2), x| {
        let p = marginal_pdf(rho, theta, x) * h;
        (m1 + x * p, m2 + x * x * p)
    })
}

#[test]
fn extracted_moments_follow_the_marginal() {
    let squeezed = squeeze_op(0.35, 30).unwrap().apply(&FockVector::fock(1, 30)).unwrap().value.to_density();
    let phases = PhaseSet::uniform(6).unwrap();
    let per_phase = 4000;
    let src = SyntheticFrames::new(&squeezed, &f1(), 1.0, &phases, per_phase, 17).unwrap();
    let tol = 4.0 / (per_phase as f64).sqrt();
    for (p, &theta) in phases.phases.iter().enumerate() {
        let q: Vec<f64> = (0..per_phase).map(|j| extract_quadrature(&src.frame(p * per_phase + j), &f1()).unwrap()).collect();
        let n = q.len() as f64;
        let m1 = q.iter().sum::<f64>() / n;
        let m2 = q.iter().map(|x| x * x).sum::<f64>() / n;
        let (e1, e2) = marginal_moments(&squeezed, theta);
        assert!((m1 - e1).abs() < tol, "θ = {theta}: mean {m1} vs {e1}");
        assert!((m2 - e2).abs() < tol * e2.max(1.0), "θ = {theta}: second moment {m2} vs {e2}");
    }
}

#[test]
fn mode_mismatch_acts_as_loss() {
    let (eta, eta_m) = (0.9f64, 0.8f64);
    let f = f1();
    let other = builtin_waveform(&Builtin::Square { width_s: 20e-9 }, &grid(), 1.8e7, 30e-9).unwrap();
    assert!(other.inner(&f).unwrap().abs() < 1e-12);
    let samples = f.samples.iter().zip(&other.samples).map(|(a, b)| eta_m.sqrt() * a + (1.0 - eta_m).sqrt() * b).collect();
    let probe = TemporalWaveform::new(grid(), samples).unwrap().normalized().unwrap();

    let phases = PhaseSet::default();
    let per_phase = 5000;
    let src = SyntheticFrames::new(&DensityMatrix::fock(1, 10), &f, eta, &phases, per_phase, 23).unwrap();
    let data: Vec<(f64, f64)> =
        (0..src.len()).map(|i| (src.lo_phase(i), extract_quadrature(&src.frame(i), &probe).unwrap())).collect();
    let t = mle_tomography(&data, &MleOptions::default()).unwrap();
    let p1 = t.photon_dist[1];
    assert!((p1 - eta * eta_m).abs() < 0.02, "P(1) = {p1}");
}
