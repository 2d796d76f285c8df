use num_complex::Complex64 as C64;

use super::{build_resource, GaussianResourceParams, HeraldError};
use crate::fock::{two_mode::mix_pair, FockError, FockVector, TwoModeState};
use crate::Warning;

/// Displacements above this break the small-amplitude expansion.
pub const SMALL_ALPHA: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct OracleOutput {
    pub state: FockVector,
    /// Squared norm before normalization.
    pub weight: f64,
    pub warnings: Vec<Warning>,
}

/// Brute-force heralding through an explicit trigger network.
///
/// Mode 1 is truncated at `N = alphas.len()` photons, split over `N` channels
/// by a chain of beam splitters (each channel ends with amplitude `+1/√N`),
/// and channel `j` is projected with `⟨0|(a_j/c′ + α_j)`, the first-order
/// form of a displaced single-photon click.
pub fn trigger_forward_oracle(
    p: &GaussianResourceParams,
    alphas: &[C64],
    cnorm: f64,
    cutoff: usize,
) -> Result<OracleOutput, HeraldError> {
    let resource = build_resource(p, cutoff)?.value;
    oracle_from_resource(&resource, alphas, cnorm)
}

pub fn oracle_from_resource(
    resource: &TwoModeState,
    alphas: &[C64],
    cnorm: f64,
) -> Result<OracleOutput, HeraldError> {
    if !(cnorm > 0.0) {
        return Err(FockError::DomainError {
            name: "cnorm",
            value: cnorm,
            domain: "(0, inf)",
        }
        .into());
    }
    let n = alphas.len();
    let warnings = alphas
        .iter()
        .filter(|a| a.norm() > SMALL_ALPHA)
        .map(|a| Warning::AssumptionViolated {
            what: "|alpha|".into(),
            value: a.norm(),
            limit: SMALL_ALPHA,
        })
        .collect();

    let cutoff = resource.cutoff();
    let d0 = cutoff + 1;
    let base = n + 1;
    let block = base.pow(n as u32);
    let digit_stride = |j: usize| base.pow((n - 1 - j) as u32);

    // channel 0 initially carries all of mode 1
    let mut psi = vec![C64::new(0.0, 0.0); d0 * block];
    let first = if n > 0 { digit_stride(0) } else { 0 };
    for k0 in 0..d0 {
        for k1 in 0..=n.min(cutoff) {
            psi[k0 * block + k1 * first] = resource.amp(k0, k1);
        }
    }

    for j in 0..n.saturating_sub(1) {
        let keep = 1.0 / (n - j) as f64;
        let (sj, sn) = (digit_stride(j), digit_stride(j + 1));
        let mut next = vec![C64::new(0.0, 0.0); psi.len()];
        for (idx, amp) in psi.iter().enumerate() {
            if *amp == C64::new(0.0, 0.0) {
                continue;
            }
            let inner = idx % block;
            let kj = (inner / sj) % base;
            let kn = (inner / sn) % base;
            debug_assert_eq!(kn, 0);
            let stripped = idx - kj * sj;
            // slot 0 is the fresh channel, slot 1 the one being split
            for (m_new, w) in mix_pair(0, kj, keep).iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let m_old = kj - m_new;
                next[stripped + m_old * sj + m_new * sn] += amp * *w;
            }
        }
        psi = next;
    }

    let mut out = vec![C64::new(0.0, 0.0); d0];
    for mask in 0..(1usize << n) {
        let mut w = C64::new(1.0, 0.0);
        let mut offset = 0;
        for (j, a) in alphas.iter().enumerate() {
            if mask >> j & 1 == 1 {
                w /= cnorm;
                offset += digit_stride(j);
            } else {
                w *= a;
            }
        }
        if w == C64::new(0.0, 0.0) {
            continue;
        }
        for (k0, o) in out.iter_mut().enumerate() {
            *o += w * psi[k0 * block + offset];
        }
    }
    let v = FockVector::from_amps(out);
    let weight = v.norm_sqr();
    Ok(OracleOutput {
        state: v.normalized()?,
        weight,
        warnings,
    })
}
