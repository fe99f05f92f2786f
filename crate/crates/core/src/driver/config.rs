use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hpr::Variant;
use crate::scaling::ScalingConfig;
use crate::sparse::PowerMethodConfig;

/// Space in which the termination criteria are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationSpace {
    /// Candidates are unscaled first, so the tolerance refers to the user's problem.
    #[default]
    Original,
    Scaled,
}

impl std::str::FromStr for TerminationSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(TerminationSpace::Original),
            "scaled" => Ok(TerminationSpace::Scaled),
            other => Err(Error::InvalidConfig(format!("unknown termination space '{other}'"))),
        }
    }
}

/// How the `y` subproblem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProximalMode {
    /// `T₁ = λI − AAᵀ` with `λ` from the power method.
    #[default]
    Linearized,
    /// `T₁ = 0` with a dense factorization of `AAᵀ`; equality-only problems.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub time_limit_seconds: f64,
    pub max_iterations: usize,
    pub check_interval: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub sigma0: f64,
    pub variant: Variant,
    pub scaling: ScalingConfig,
    pub power_method: PowerMethodConfig,
    pub termination_space: TerminationSpace,
    pub proximal: ProximalMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            time_limit_seconds: 3600.0,
            max_iterations: 1_000_000,
            check_interval: 150,
            alpha1: 0.2,
            alpha2: 0.6,
            alpha3: 0.2,
            sigma0: 1.0,
            variant: Variant::Hpr,
            scaling: ScalingConfig::default(),
            power_method: PowerMethodConfig::default(),
            termination_space: TerminationSpace::Original,
            proximal: ProximalMode::Linearized,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.time_limit_seconds > 0.0) {
            return bad("time limit must be positive");
        }
        if self.max_iterations == 0 {
            return bad("iteration limit must be at least 1");
        }
        if self.check_interval == 0 {
            return bad("check interval must be at least 1");
        }
        if !(0.0 < self.alpha1 && self.alpha1 < self.alpha2 && self.alpha2 < 1.0) {
            return bad("restart parameters need 0 < alpha1 < alpha2 < 1");
        }
        if !(0.0 < self.alpha3 && self.alpha3 < 1.0) {
            return bad("restart parameter alpha3 must lie in (0, 1)");
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be positive and finite");
        }
        if !(self.power_method.tol > 0.0) || self.power_method.max_iters == 0 {
            return bad("power method needs a positive tolerance and iteration budget");
        }
        if !(self.power_method.inflation >= 1.0) {
            return bad("power method inflation must be at least 1");
        }
        Ok(())
    }
}
