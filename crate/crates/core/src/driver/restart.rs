use serde::{Deserialize, Serialize};

use super::config::SolverConfig;
use crate::hpr::{sigma_delta_y, Iterate, SemiProximal};
use crate::scaling::ScaledProblem;
use crate::sparse::norm2;

/// Which restart condition fired at a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestartTrigger {
    None,
    /// `merit ≤ α₁·merit_first`.
    Sufficient,
    /// `merit ≤ α₂·merit_first` and `merit > merit_prev`.
    Stalled,
    /// `t ≥ α₃·k`.
    LongLoop,
}

/// Evaluates the restart conditions in priority order Sufficient, Stalled, LongLoop.
pub fn check_restart(
    merit_now: f64,
    merit_first: f64,
    merit_prev: f64,
    t: usize,
    k: usize,
    cfg: &SolverConfig,
) -> RestartTrigger {
    if merit_now <= cfg.alpha1 * merit_first {
        RestartTrigger::Sufficient
    } else if merit_now <= cfg.alpha2 * merit_first && merit_now > merit_prev {
        RestartTrigger::Stalled
    } else if t as f64 >= cfg.alpha3 * k as f64 {
        RestartTrigger::LongLoop
    } else {
        RestartTrigger::None
    }
}

/// Which branch of the σ update was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaGuard {
    /// Both guards held and `σ = Δx/Δy`.
    Passed,
    /// `Δx` or `Δy` outside `(1e-16, 1e12)`.
    DeltaRange,
    /// `error_d / error_p` outside `(1e-8, 1e8)`.
    InfeasibilityRatio,
    /// The variant keeps σ fixed.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaUpdate {
    pub sigma: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub guard: SigmaGuard,
}

fn in_open(v: f64, lo: f64, hi: f64) -> bool {
    v > lo && v < hi
}

/// The guarded rule `σ = Δx/Δy`, falling back to 1.
///
/// When both relative infeasibilities vanish the ratio guard is treated as satisfied; when only
/// `error_p` is zero the ratio is infinite and the guard fails.
pub fn sigma_from_deltas(delta_x: f64, delta_y: f64, error_p: f64, error_d: f64) -> SigmaUpdate {
    let result = |sigma, guard| SigmaUpdate {
        sigma,
        delta_x,
        delta_y,
        guard,
    };
    if !in_open(delta_x, 1e-16, 1e12) || !in_open(delta_y, 1e-16, 1e12) {
        return result(1.0, SigmaGuard::DeltaRange);
    }
    let ratio_ok = if error_p == 0.0 && error_d == 0.0 {
        true
    } else {
        in_open(error_d / error_p, 1e-8, 1e8)
    };
    if !ratio_ok {
        return result(1.0, SigmaGuard::InfeasibilityRatio);
    }
    result(delta_x / delta_y, SigmaGuard::Passed)
}

/// σ for the next outer loop from `w̄^{r,τ_r}` and the anchor `w^{r,0}`.
///
/// `Δx = ‖x̄ − x⁰‖`; `Δy = √λ‖ȳ − y⁰‖` on the linearized path and `‖Aᵀ(ȳ − y⁰)‖` on the exact
/// path. `error_p` and `error_d` are the relative infeasibilities of `w̄^{r,τ_r}`.
pub fn sigma_update(
    bar: &Iterate,
    anchor: &Iterate,
    prox: &SemiProximal,
    problem: &ScaledProblem,
    error_p: f64,
    error_d: f64,
) -> SigmaUpdate {
    let dx: Vec<f64> = bar.x.iter().zip(&anchor.x).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = bar.y.iter().zip(&anchor.y).map(|(a, b)| a - b).collect();
    sigma_from_deltas(norm2(&dx), sigma_delta_y(&dy, prox, problem), error_p, error_d)
}
