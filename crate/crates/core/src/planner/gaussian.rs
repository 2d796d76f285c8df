use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PlanError, MAX_TRIGGER_PHOTONS};
use crate::fock::db_to_r;
use crate::herald::{build_resource, r_out, GaussianResourceParams};

const MAX_R: f64 = 2.0;
const SEARCH_CUTOFF: usize = 24;

/// How the remaining freedom in `(r0, r1, T)` is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Strategy {
    /// `T = 1/2`, `r1 = −r0 + δ`, starting from a 3 dB squeezer.
    Symmetric,
    /// Grid search maximizing `P(n)` with the trigger mean held below 0.2.
    MaxProb { n: usize, p_min: f64 },
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Symmetric
    }
}

/// Bisection on an increasing function over `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo > 0.0 || fhi < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// `r1` giving `r_out = target` for fixed `r0`, `T`.
fn solve_r1(r0: f64, t: f64, target: f64) -> Option<f64> {
    let f = |r1: f64| r_out(&GaussianResourceParams { r0, r1, t }) - target;
    bisect(f, -MAX_R, MAX_R)
}

pub fn solve_gaussian_params(target: f64, strategy: &Strategy) -> Result<GaussianResourceParams, PlanError> {
    if !(target.abs() <= 1.5) {
        return Err(PlanError::NoSolution(format!("|r_out| = {} exceeds 1.5", target.abs())));
    }
    match strategy {
        Strategy::Symmetric => symmetric(target),
        Strategy::MaxProb { n, p_min } => max_prob(target, *n, *p_min),
    }
}

fn symmetric(target: f64) -> Result<GaussianResourceParams, PlanError> {
    let sign = if target < 0.0 { -1.0 } else { 1.0 };
    let mut db = 3.0;
    loop {
        let r0 = sign * db_to_r(db);
        if r0.abs() > MAX_R {
            return Err(PlanError::NoSolution(format!("r_out = {target} not bracketed")));
        }
        if target == 0.0 {
            return Ok(GaussianResourceParams { r0, r1: -r0, t: 0.5 });
        }
        if let Some(r1) = solve_r1(r0, 0.5, target) {
            return Ok(GaussianResourceParams { r0, r1, t: 0.5 });
        }
        db += 1.0;
    }
}

fn max_prob(target: f64, n: usize, p_min: f64) -> Result<GaussianResourceParams, PlanError> {
    let mut grid = Vec::new();
    for i in 1..=24 {
        let db = 0.5 * i as f64;
        for t_i in 1..50 {
            let t = 0.02 * t_i as f64;
            grid.push((db_to_r(db), t));
            grid.push((-db_to_r(db), t));
        }
    }
    let scored: Vec<Option<(f64, GaussianResourceParams)>> = grid
        .par_iter()
        .map(|&(r0, t)| {
            let r1 = solve_r1(r0, t, target)?;
            let p = GaussianResourceParams { r0, r1, t };
            if !p.is_entangled() || p.mean_trigger_photons() > MAX_TRIGGER_PHOTONS {
                return None;
            }
            let resource = build_resource(&p, SEARCH_CUTOFF).ok()?.value;
            let prob = resource.mode1_distribution()[n.min(SEARCH_CUTOFF)];
            Some((prob, p))
        })
        .collect();
    let best = scored
        .into_iter()
        .flatten()
        .fold(None::<(f64, GaussianResourceParams)>, |acc, cand| match acc {
            Some(a) if a.0 >= cand.0 => Some(a),
            _ => Some(cand),
        });
    match best {
        Some((prob, p)) if prob >= p_min => Ok(p),
        Some((prob, _)) => Err(PlanError::NoSolution(format!("best P({n}) = {prob:.3e} < {p_min}"))),
        None => Err(PlanError::NoSolution("no admissible grid point".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_zero_target() {
        let p = solve_gaussian_params(0.0, &Strategy::Symmetric).unwrap();
        assert_eq!(p.r1, -p.r0);
        assert_eq!(p.t, 0.5);
    }

    #[test]
    fn symmetric_hits_targets() {
        for target in [-1.4, -0.6, -0.05, 0.2, 0.345, 0.9, 1.5] {
            let p = solve_gaussian_params(target, &Strategy::Symmetric).unwrap();
            assert!((r_out(&p) - target).abs() < 1e-9, "{target}");
            assert_eq!(p.t, 0.5);
        }
        assert!(solve_gaussian_params(1.6, &Strategy::Symmetric).is_err());
    }

    #[test]
    fn degenerate_equal_squeezing() {
        // r0 = r1 = r gives r_out = r; the solver lands on that point for target = base
        let r = db_to_r(3.0);
        let p = solve_gaussian_params(r, &Strategy::Symmetric).unwrap();
        assert!((p.r1 - r).abs() < 1e-9);
    }

    #[test]
    fn fixed_cat_row_recovers_r_out() {
        let cat = GaussianResourceParams::from_db(5.0, -1.0, 0.14).unwrap();
        let target = r_out(&cat);
        let r1 = solve_r1(cat.r0, cat.t, target).unwrap();
        assert!((r1 - cat.r1).abs() < 1e-9);
    }

    #[test]
    fn symmetric_is_monotone_in_offset() {
        let r0 = db_to_r(3.0);
        let mut last = f64::NEG_INFINITY;
        for i in 0..=400 {
            let delta = i as f64 * 0.01;
            let v = r_out(&GaussianResourceParams { r0, r1: -r0 + delta, t: 0.5 });
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn max_prob_respects_constraints() {
        let p = solve_gaussian_params(0.3, &Strategy::MaxProb { n: 1, p_min: 0.01 }).unwrap();
        assert!((r_out(&p) - 0.3).abs() < 1e-9);
        assert!(p.mean_trigger_photons() <= MAX_TRIGGER_PHOTONS);
        assert!(solve_gaussian_params(0.3, &Strategy::MaxProb { n: 1, p_min: 0.9 }).is_err());
    }
}
