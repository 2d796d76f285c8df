use serde::{Deserialize, Serialize};
use std::fmt;

/// Non-fatal diagnostics collected alongside results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A small-parameter assumption of the model is stretched.
    AssumptionViolated { what: String, value: f64, limit: f64 },
    IllConditioned { condition: f64 },
    NonConvergence { iterations: usize, last_change: f64 },
    /// More than this many photons expected per trigger window.
    TriggerPhotons { mean: f64, limit: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AssumptionViolated { what, value, limit } => {
                write!(f, "{what} = {value:.4} exceeds {limit}")
            }
            Warning::IllConditioned { condition } => {
                write!(f, "ill-conditioned polynomial (condition {condition:.2e})")
            }
            Warning::NonConvergence { iterations, last_change } => write!(
                f,
                "no convergence after {iterations} iterations (last change {last_change:.2e})"
            ),
            Warning::TriggerPhotons { mean, limit } => {
                write!(f, "mean trigger photon number {mean:.4} exceeds {limit}")
            }
        }
    }
}
