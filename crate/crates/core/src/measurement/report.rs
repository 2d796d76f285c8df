use nalgebra::DMatrix;
use serde::Serialize;

use crate::fock::{wigner_grid, wigner_origin, DensityMatrix};

pub const WIGNER_LIMIT: f64 = 5.0;
pub const WIGNER_STEP: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct WignerReport {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// `w[(ix, ip)]`.
    #[serde(skip)]
    pub w: DMatrix<f64>,
    pub w_min: f64,
    pub w_min_at: (f64, f64),
    pub w_origin: f64,
    pub photon_dist: Vec<f64>,
}

fn axis(limit: f64, step: f64) -> Vec<f64> {
    let m = (limit / step).round() as i64;
    (-m..=m).map(|i| i as f64 * step).collect()
}

pub fn wigner_report(rho: &DensityMatrix) -> WignerReport {
    wigner_report_on(rho, WIGNER_LIMIT, WIGNER_STEP)
}

pub fn wigner_report_on(rho: &DensityMatrix, limit: f64, step: f64) -> WignerReport {
    let xs = axis(limit, step);
    let ps = xs.clone();
    let w = wigner_grid(rho, &xs, &ps);
    let (mut w_min, mut at) = (f64::INFINITY, (0.0, 0.0));
    for ip in 0..ps.len() {
        for ix in 0..xs.len() {
            if w[(ix, ip)] < w_min {
                w_min = w[(ix, ip)];
                at = (xs[ix], ps[ip]);
            }
        }
    }
    WignerReport { w_min, w_min_at: at, w_origin: wigner_origin(rho), photon_dist: rho.photon_distribution(), xs, ps, w }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::loss_channel;
    use std::f64::consts::PI;

    #[test]
    fn single_photon_minimum_at_origin() {
        let r = wigner_report(&DensityMatrix::fock(1, 10));
        assert!((r.w_min + 1.0 / PI).abs() < 1e-12);
        assert_eq!(r.w_min_at, (0.0, 0.0));
        assert_eq!(r.xs.len(), 201);
    }

    #[test]
    fn vacuum_nonnegative() {
        let r = wigner_report(&DensityMatrix::vacuum(10));
        assert!(r.w_min >= -1e-15);
        assert!((r.w_origin - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn lossy_single_photon() {
        let rho = loss_channel(&DensityMatrix::fock(1, 10), 0.67).unwrap();
        let r = wigner_report(&rho);
        assert!((r.w_origin - (1.0 - 2.0 * 0.67) / PI).abs() < 1e-12);
        assert!((r.w_min + 0.1082).abs() < 1e-4);
        assert!((r.photon_dist[1] - 0.67).abs() < 1e-12);
    }
}
