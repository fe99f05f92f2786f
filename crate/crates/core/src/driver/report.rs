use serde::{Deserialize, Serialize};

use super::residual::KktResidual;
use super::restart::{RestartTrigger, SigmaGuard};
use crate::hpr::Variant;
use crate::problem::PrimalDualPoint;
use crate::sparse::PowerMethodResult;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    IterationLimit,
    TimeLimit,
    NumericalError,
}

impl SolveStatus {
    pub fn is_limit(self) -> bool {
        matches!(self, SolveStatus::IterationLimit | SolveStatus::TimeLimit)
    }
}

/// One completed outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    /// Index `r` of the loop that ended.
    pub outer_loop: usize,
    pub trigger: RestartTrigger,
    /// Length `τ_r` of the loop.
    pub inner_iterations: usize,
    /// Total iteration count `k` at the restart.
    pub iteration: usize,
    pub merit: f64,
    pub sigma_next: f64,
    pub sigma_guard: SigmaGuard,
}

/// Wall-clock seconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub scaling: f64,
    pub power_method: f64,
    /// Inner iterations (including the normal-equation factorization on the exact path).
    pub iterations: f64,
    /// Checkpoint work: residuals, merits, restarts.
    pub checks: f64,
    /// Power method + iterations + checks; excludes parsing and scaling.
    pub solve: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub status: SolveStatus,
    pub variant: Variant,
    pub tolerance: f64,
    /// In the user's objective sense.
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Residual of the returned solution in the termination space.
    pub residual: KktResidual,
    /// Residual of the returned solution for the original problem.
    pub original_residual: KktResidual,
    pub iterations: usize,
    pub restarts: usize,
    pub restart_log: Vec<RestartRecord>,
    pub timings: Timings,
    pub lambda: Option<f64>,
    pub power_method: Option<PowerMethodResult>,
    pub sigma_final: f64,
    /// Components of `z` whose relevant bound was infinite in the final dual objective.
    pub clamped_bound_terms: usize,
    pub message: Option<String>,
    pub solution: PrimalDualPoint,
}

impl SolveReport {
    /// The report as JSON with all timing fields removed, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timings");
        }
        v
    }
}
