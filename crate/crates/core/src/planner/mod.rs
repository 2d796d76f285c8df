//! Inverse design: from a target `S(r_out) Σ C_n |n⟩` to resource parameters,
//! trigger coefficients and displacement amplitudes.

mod gaussian;

pub use gaussian::{solve_gaussian_params, Strategy};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{squeeze_op, FockError, FockVector, LEAKAGE_TOLERANCE};
use crate::herald::{
    build_resource, herald_from_resource, oracle_from_resource, r_out, superpose,
    GaussianResourceParams, HeraldDecomposition, HeraldError, SMALL_ALPHA,
};
use crate::poly::{self, PolyError};
use crate::Warning;

/// Mean trigger photon number above which multiphoton clicks matter.
pub const MAX_TRIGGER_PHOTONS: f64 = 0.2;
pub const ILL_CONDITIONED: f64 = 1e8;
const ROOT_CHECK: f64 = 1e-9;
const R_OUT_MATCH: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Herald(#[from] HeraldError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("no resource parameters reach the target: {0}")]
    NoSolution(String),
    #[error("diagonal entry {value:.2e} for n = {n} is too small to invert")]
    SingularTable { n: usize, value: f64 },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("resource gives r_out = {got}, target needs {want}")]
    ROutMismatch { got: f64, want: f64 },
    #[error("re-expanded roots miss the coefficients by {0:.2e}")]
    RootMismatch(f64),
}

impl From<FockError> for PlanError {
    fn from(e: FockError) -> Self {
        PlanError::Herald(e.into())
    }
}

/// `S(r_out) Σ_n c_n |n⟩` with `c_N ≠ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub r_out: f64,
    pub c: Vec<C64>,
}

impl TargetState {
    pub fn new(r_out: f64, c: Vec<C64>) -> Result<Self, PlanError> {
        if c.is_empty() {
            return Err(PlanError::InvalidTarget("empty coefficient vector".into()));
        }
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(PlanError::InvalidTarget(format!("norm² = {norm}")));
        }
        if c.last().unwrap().norm() <= 1e-12 {
            return Err(PlanError::InvalidTarget("leading coefficient vanishes".into()));
        }
        if !(r_out.abs() <= 1.5) {
            return Err(PlanError::InvalidTarget(format!("|r_out| = {} > 1.5", r_out.abs())));
        }
        Ok(Self { r_out, c })
    }

    /// Normalizes `c` first.
    pub fn normalized(r_out: f64, c: Vec<C64>) -> Result<Self, PlanError> {
        let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(PlanError::InvalidTarget("zero vector".into()));
        }
        Self::new(r_out, c.into_iter().map(|z| z / norm).collect())
    }

    pub fn fock(n: usize, r_out: f64) -> Result<Self, PlanError> {
        let mut c = vec![C64::new(0.0, 0.0); n + 1];
        c[n] = C64::new(1.0, 0.0);
        Self::new(r_out, c)
    }

    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    pub fn state(&self, cutoff: usize) -> Result<FockVector, PlanError> {
        if self.n() > cutoff {
            return Err(PlanError::InvalidTarget(format!("N = {} above cutoff {cutoff}", self.n())));
        }
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        amps[..self.c.len()].copy_from_slice(&self.c);
        let v = FockVector::from_amps(amps);
        let s = squeeze_op(self.r_out, cutoff)?.apply_with_tolerance(&v, LEAKAGE_TOLERANCE)?;
        Ok(s.value.normalized()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeraldingPlan {
    pub target: TargetState,
    pub params: GaussianResourceParams,
    pub n_detect: usize,
    /// Trigger coefficients scaled as in `Π_j (a/(√N c′) + α_j)`.
    pub cprime: Vec<C64>,
    pub alphas: Vec<C64>,
    pub cnorm: f64,
    pub r_out: f64,
    pub predicted_prob: f64,
    pub condition: f64,
    pub warnings: Vec<Warning>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub fidelity: f64,
    pub prob: f64,
    pub max_alpha: f64,
    pub mean_trigger_photons: f64,
    pub warnings: Vec<Warning>,
}

/// Back-substitutes `C_j = Σ_{n≥j} C′_n √P(n) C″_j⁽ⁿ⁾` from `C′_N` down.
pub fn solve_cprime(target: &TargetState, table: &[HeraldDecomposition]) -> Result<Vec<C64>, PlanError> {
    let n = target.n();
    if table.len() < n + 1 {
        return Err(PlanError::InvalidTarget(format!(
            "need decompositions for n = 0..={n}, got {}",
            table.len()
        )));
    }
    let mut cp = vec![C64::new(0.0, 0.0); n + 1];
    for j in (0..=n).rev() {
        let diag = table[j].c2[j] * table[j].prob.sqrt();
        if diag.norm() < 1e-12 {
            return Err(PlanError::SingularTable { n: j, value: diag.norm() });
        }
        let mut rhs = target.c[j];
        for k in j + 1..=n {
            rhs -= cp[k] * table[k].prob.sqrt() * table[k].c2[j];
        }
        cp[j] = rhs / diag;
    }
    Ok(cp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSolution {
    pub alphas: Vec<C64>,
    /// `C′` rescaled to the product form fixed by the roots and `c′`.
    pub cprime: Vec<C64>,
    pub condition: f64,
    pub warnings: Vec<Warning>,
}

fn factorial_sqrt(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).sqrt()).product()
}

/// Roots `z_j` of `Σ (C′_n/√n!) zⁿ`, mapped to `α_j = −z_j/(√N c′)`.
pub fn alphas_from_cprime(cprime: &[C64], cnorm: f64) -> Result<AlphaSolution, PlanError> {
    if !(cnorm > 0.0) {
        return Err(FockError::DomainError { name: "cnorm", value: cnorm, domain: "(0, inf)" }.into());
    }
    let n = cprime.len().saturating_sub(1);
    if cprime.is_empty() || cprime[n].norm() == 0.0 {
        return Err(PolyError::ZeroLeading.into());
    }
    if n == 0 {
        return Ok(AlphaSolution {
            alphas: Vec::new(),
            cprime: vec![C64::new(1.0, 0.0)],
            condition: 1.0,
            warnings: Vec::new(),
        });
    }
    let b: Vec<C64> = cprime.iter().enumerate().map(|(k, c)| c / factorial_sqrt(k)).collect();
    let z = poly::roots(&b)?;
    let condition = poly::condition(&b, &z);
    let scale = 1.0 / ((n as f64).sqrt() * cnorm);
    let alphas: Vec<C64> = z.iter().map(|zj| -zj * scale).collect();

    let e = poly::from_roots(&z, C64::new(scale.powi(n as i32), 0.0));
    let kappa = b[n] / e[n];
    let bmax = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let err = e
        .iter()
        .zip(&b)
        .map(|(ek, bk)| (ek * kappa - bk).norm())
        .fold(0.0, f64::max)
        / bmax;
    let mut warnings = Vec::new();
    if condition > ILL_CONDITIONED {
        warnings.push(Warning::IllConditioned { condition });
    } else if err > ROOT_CHECK {
        return Err(PlanError::RootMismatch(err));
    }
    let scaled = e.iter().enumerate().map(|(k, c)| c * factorial_sqrt(k)).collect();
    Ok(AlphaSolution { alphas, cprime: scaled, condition, warnings })
}

pub fn plan(target: &TargetState, cnorm: f64, strategy: &Strategy, cutoff: usize) -> Result<HeraldingPlan, PlanError> {
    let params = solve_gaussian_params(target.r_out, strategy)?;
    plan_with_params(target, params, cnorm, cutoff)
}

/// Plans with the resource fixed; its `r_out` must match the target.
pub fn plan_with_params(
    target: &TargetState,
    params: GaussianResourceParams,
    cnorm: f64,
    cutoff: usize,
) -> Result<HeraldingPlan, PlanError> {
    let got = r_out(&params);
    if (got - target.r_out).abs() > R_OUT_MATCH {
        return Err(PlanError::ROutMismatch { got, want: target.r_out });
    }
    let n = target.n();
    let resource = build_resource(&params, cutoff)?.value;
    let table = (0..=n)
        .map(|k| herald_from_resource(&params, &resource, k).map(|(d, _)| d))
        .collect::<Result<Vec<_>, _>>()?;
    let raw = solve_cprime(target, &table)?;
    let sol = alphas_from_cprime(&raw, cnorm)?;
    let (_, predicted_prob) = superpose(&resource, &sol.cprime)?;

    let mut warnings = sol.warnings;
    warnings.extend(plan_warnings(&params, &sol.alphas));
    Ok(HeraldingPlan {
        target: target.clone(),
        params,
        n_detect: n,
        cprime: sol.cprime,
        alphas: sol.alphas,
        cnorm,
        r_out: got,
        predicted_prob,
        condition: sol.condition,
        warnings,
    })
}

fn plan_warnings(params: &GaussianResourceParams, alphas: &[C64]) -> Vec<Warning> {
    let mut w = Vec::new();
    let max_alpha = alphas.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if max_alpha > SMALL_ALPHA {
        w.push(Warning::AssumptionViolated { what: "max |alpha|".into(), value: max_alpha, limit: SMALL_ALPHA });
    }
    let mean = params.mean_trigger_photons();
    if mean > MAX_TRIGGER_PHOTONS {
        w.push(Warning::TriggerPhotons { mean, limit: MAX_TRIGGER_PHOTONS });
    }
    w
}

/// Runs the plan through the explicit trigger network and compares with the target.
pub fn verify_plan(plan: &HeraldingPlan, cutoff: usize) -> Result<VerifyReport, PlanError> {
    let resource = build_resource(&plan.params, cutoff)?.value;
    if plan.n_detect > 0 && !plan.params.is_entangled() {
        return Err(HeraldError::NotEntangled { n: plan.n_detect, s12: 0.0 }.into());
    }
    let out = oracle_from_resource(&resource, &plan.alphas, plan.cnorm)?;
    let target = plan.target.state(cutoff)?;
    let fidelity = out.state.fidelity(&target)?;
    Ok(VerifyReport {
        fidelity,
        prob: out.weight,
        max_alpha: plan.alphas.iter().map(|a| a.norm()).fold(0.0, f64::max),
        mean_trigger_photons: plan.params.mean_trigger_photons(),
        warnings: plan_warnings(&plan.params, &plan.alphas),
    })
}
