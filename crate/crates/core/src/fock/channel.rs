use num_complex::Complex64 as C64;

use super::{CMatrix, DensityMatrix, FockError};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Pure-loss channel with transmission `eta`, in Kraus form.
pub fn loss_channel(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix, FockError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(FockError::DomainError {
            name: "eta",
            value: eta,
            domain: "[0, 1]",
        });
    }
    let c = rho.cutoff();
    let d = c + 1;
    let loss = 1.0 - eta;
    let mut out = CMatrix::zeros(d, d);
    for m in 0..d {
        for mp in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            let base = eta.powf((m + mp) as f64 / 2.0);
            for k in 0..d - m.max(mp) {
                let w = (binomial(m + k, k) * binomial(mp + k, k)).sqrt() * base * loss.powi(k as i32);
                if w != 0.0 {
                    acc += rho.get(m + k, mp + k) * w;
                }
            }
            out[(m, mp)] = acc;
        }
    }
    Ok(DensityMatrix::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockVector;

    #[test]
    fn single_photon_loses_population() {
        let out = loss_channel(&DensityMatrix::fock(1, 6), 0.67).unwrap();
        let p = out.photon_distribution();
        assert!((p[0] - 0.33).abs() < 1e-14);
        assert!((p[1] - 0.67).abs() < 1e-14);
        assert!((out.trace() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn endpoints() {
        let psi = FockVector::from_amps(vec![
            C64::new(0.5, 0.0),
            C64::new(0.0, 0.5),
            C64::new(0.5, 0.0),
            C64::new(0.5, 0.0),
        ]);
        let rho = psi.to_density();
        let same = loss_channel(&rho, 1.0).unwrap();
        assert!((same.matrix() - rho.matrix()).camax() < 1e-15);
        let gone = loss_channel(&rho, 0.0).unwrap();
        assert!((gone.matrix() - DensityMatrix::vacuum(3).matrix()).camax() < 1e-15);
    }

    #[test]
    fn coherences_shrink_by_root_eta() {
        let psi = FockVector::from_amps(vec![C64::new(0.6, 0.0), C64::new(0.8, 0.0), C64::new(0.0, 0.0)]);
        let out = loss_channel(&psi.to_density(), 0.5).unwrap();
        assert!((out.get(0, 1).re - 0.48 * 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn domain_checked() {
        let rho = DensityMatrix::vacuum(4);
        assert!(loss_channel(&rho, 1.5).is_err());
        assert!(loss_channel(&rho, -0.01).is_err());
    }
}
