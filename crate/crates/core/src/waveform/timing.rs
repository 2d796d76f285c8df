use serde::{Deserialize, Serialize};

use super::{ModulationProgram, TimeGrid, WaveformError};

/// Normalized detection-rate profile: the modulated trigger intensity
/// filtered by the cavity power response `e^{−2γt}`. An unmodulated
/// (`sin_m ≡ 1`) steady state reads 1.
pub fn detection_rate(m: &ModulationProgram) -> Vec<f64> {
    let q = (-2.0 * m.gamma * m.grid.dt).exp();
    let mut acc = 0.0;
    m.sin_m
        .iter()
        .map(|s| {
            acc = q * acc + (1.0 - q) * s * s;
            acc
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessWindow {
    pub t_start: f64,
    pub tau_suc: f64,
}

/// Longest window from `t_m2` in which `scale · rate ≥ snr_min · dark_rate`.
///
/// `scale` converts the normalized rate to counts per second.
pub fn success_window(
    rate: &[f64],
    grid: &TimeGrid,
    t_m2: f64,
    scale: f64,
    dark_rate: f64,
    snr_min: f64,
) -> Result<SuccessWindow, WaveformError> {
    if rate.len() != grid.n {
        return Err(WaveformError::GridMismatch(format!("{} rates on {} points", rate.len(), grid.n)));
    }
    if !(dark_rate >= 0.0) || !(snr_min >= 0.0) || !(scale >= 0.0) {
        return Err(WaveformError::InvalidParam("negative rate or threshold".into()));
    }
    let k2 = grid.index_of(t_m2);
    let threshold = snr_min * dark_rate;
    let len = rate[k2..]
        .iter()
        .take_while(|r| threshold.is_finite() && scale * **r >= threshold)
        .count();
    Ok(SuccessWindow { t_start: grid.t(k2), tau_suc: len as f64 * grid.dt })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepetitionReport {
    pub tau_rep: f64,
    pub residual: f64,
    pub pass: bool,
}

pub const REPETITION_LIMIT: f64 = 0.01;

/// Emission of the previous repetition that lands after the current `t_m2`,
/// relative to the current emission after `t_m2`.
pub fn repetition_check(m: &ModulationProgram, tau_rep: f64) -> Result<RepetitionReport, WaveformError> {
    if !(tau_rep > 0.0) {
        return Err(WaveformError::InvalidParam(format!("tau_rep = {tau_rep}")));
    }
    let rate = detection_rate(m);
    let tail = |from: f64| tail_energy(&rate, &m.grid, m.gamma, from);
    let own = tail(m.t_m2);
    if own == 0.0 {
        return Err(WaveformError::EmptyModulation);
    }
    let residual = tail(m.t_m2 + tau_rep) / own;
    Ok(RepetitionReport { tau_rep, residual, pass: residual < REPETITION_LIMIT })
}

/// `∫_{from}^{∞} rate dt`, linear interpolation on the grid and the free
/// `e^{−2γt}` decay past its end.
fn tail_energy(rate: &[f64], grid: &TimeGrid, gamma: f64, from: f64) -> f64 {
    let end = grid.end();
    let last = rate[grid.n - 1];
    if from >= end {
        return last * (-2.0 * gamma * (from - end)).exp() / (2.0 * gamma);
    }
    let pos = ((from - grid.t0) / grid.dt).max(0.0);
    let k = pos.floor() as usize;
    let frac = pos - k as f64;
    let at = rate[k] + frac * (rate[k + 1] - rate[k]);
    let mut sum = 0.5 * (at + rate[k + 1]) * (1.0 - frac) * grid.dt;
    for j in k + 1..grid.n - 1 {
        sum += 0.5 * (rate[j] + rate[j + 1]) * grid.dt;
    }
    sum + last / (2.0 * gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const GAMMA: f64 = 2.0 * PI * 2.9e6;

    fn program(grid: TimeGrid, f: impl Fn(usize) -> f64, t_m1: f64, t_m2: f64) -> ModulationProgram {
        ModulationProgram::new(grid, (0..grid.n).map(f).collect(), t_m1, t_m2, GAMMA).unwrap()
    }

    #[test]
    fn unmodulated_rate_is_flat() {
        let grid = TimeGrid::default();
        let m = program(grid, |_| 1.0, 0.0, grid.end());
        let r = detection_rate(&m);
        assert!(r[grid.index_of(800e-9)..].iter().all(|x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn square_pulse_rises_then_decays() {
        let grid = TimeGrid::default();
        let (t1, t2) = (0.9e-6, 1e-6);
        let (k1, k2) = (grid.index_of(t1), grid.index_of(t2));
        let m = program(grid, |k| if k >= k1 && k <= k2 { 1.0 } else { 0.0 }, t1, t2);
        let r = detection_rate(&m);
        assert!(r[..k1].iter().all(|x| *x == 0.0));
        assert!(r[k1..=k2].windows(2).all(|w| w[1] > w[0]));
        for j in [10, 100, 500] {
            let expect = r[k2] * (-2.0 * GAMMA * j as f64 * grid.dt).exp();
            assert!((r[k2 + j] - expect).abs() < 1e-12 * r[k2]);
        }
        assert!(r.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn impulse_response() {
        let grid = TimeGrid::default();
        let k = 1000;
        let m = program(grid, |j| if j == k { 1.0 } else { 0.0 }, grid.t(k), grid.t(k));
        let r = detection_rate(&m);
        for j in [1, 50, 400] {
            let g2 = (-2.0 * GAMMA * j as f64 * grid.dt).exp();
            assert!((r[k + j] / r[k] - g2).abs() < 1e-12);
        }
    }

    #[test]
    fn success_window_limits() {
        let grid = TimeGrid::default();
        let (t1, t2) = (0.9e-6, 1e-6);
        let (k1, k2) = (grid.index_of(t1), grid.index_of(t2));
        let m = program(grid, |k| if k >= k1 && k <= k2 { 1.0 } else { 0.0 }, t1, t2);
        let r = detection_rate(&m);
        let open = success_window(&r, &grid, t2, 1e4, 0.0, 5.0).unwrap();
        assert!((open.tau_suc - (grid.n - k2) as f64 * grid.dt).abs() < 1e-15);
        let shut = success_window(&r, &grid, t2, 1e4, 10.0, f64::INFINITY).unwrap();
        assert_eq!(shut.tau_suc, 0.0);
        let w = success_window(&r, &grid, t2, 5e3, 50.0, 10.0).unwrap();
        assert!(w.tau_suc > 10e-9 && w.tau_suc < 100e-9, "{}", w.tau_suc);
        // rate·scale = snr·dark at the window edge: r[k2] e^{−2γτ} · scale = 500
        let tau = (r[k2] * 5e3 / 500.0).ln() / (2.0 * GAMMA);
        assert!((w.tau_suc - tau).abs() <= grid.dt);
    }

    #[test]
    fn repetition_residuals() {
        let grid = TimeGrid::default();
        let (t1, t2) = (0.9e-6, 1e-6);
        let (k1, k2) = (grid.index_of(t1), grid.index_of(t2));
        let m = program(grid, |k| if k >= k1 && k <= k2 { 1.0 } else { 0.0 }, t1, t2);
        let at = |tau: f64| repetition_check(&m, tau).unwrap();
        let r200 = at(200e-9);
        assert!(r200.pass);
        assert!((r200.residual - (-2.0 * GAMMA * 200e-9).exp()).abs() < 1e-6);
        assert!(at(150e-9).pass);
        let slow = at(1.0 / GAMMA);
        assert!(!slow.pass);
        assert!((slow.residual - (-2.0f64).exp()).abs() < 1e-6);
        assert!(at(10e-6).residual < 1e-100);
    }
}
