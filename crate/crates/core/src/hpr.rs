//! The inner iteration: closed-form `x̄`/`ȳ` updates, the Halpern and reflection steps, and the
//! `M`-seminorm merit.
//!
//! Only `(y, x)` is carried between iterations. `z̄` is reconstructed from the pre-projection
//! point of the most recent `x̄` update whenever a checkpoint needs it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::DenseCholesky;
use crate::scaling::ScaledProblem;
use crate::sparse::{dot, norm2};

/// Algorithm variants compared in the ablation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain Douglas–Rachford: `w ← w̄`, no restarts, fixed σ.
    Dr,
    /// Halpern-anchored DR with restarts but σ frozen at σ₀.
    HdrFixed,
    /// Halpern-anchored DR with restarts and adaptive σ.
    Hdr,
    /// Halpern-anchored Peaceman–Rachford (reflection `2w̄ − w`) with restarts and adaptive σ.
    Hpr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Dr, Variant::HdrFixed, Variant::Hdr, Variant::Hpr];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Dr => "dr",
            Variant::HdrFixed => "hdr-fixed",
            Variant::Hdr => "hdr",
            Variant::Hpr => "hpr",
        }
    }

    pub fn uses_halpern(self) -> bool {
        self != Variant::Dr
    }

    pub fn restarts(self) -> bool {
        self != Variant::Dr
    }

    pub fn adapts_sigma(self) -> bool {
        matches!(self, Variant::Hdr | Variant::Hpr)
    }

    /// Ratio between `‖w − ŵ‖_M` and `‖w − w̄‖_M` for this variant.
    pub fn merit_factor(self) -> f64 {
        if self == Variant::Hpr {
            2.0
        } else {
            1.0
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dr" => Ok(Variant::Dr),
            "hdr-fixed" | "hdr_fixed_sigma" | "hdr-fixed-sigma" => Ok(Variant::HdrFixed),
            "hdr" => Ok(Variant::Hdr),
            "hpr" => Ok(Variant::Hpr),
            other => Err(Error::InvalidConfig(format!("unknown variant '{other}'"))),
        }
    }
}

/// The semi-proximal operator `T₁` applied in the `y` subproblem.
#[derive(Debug, Clone)]
pub enum SemiProximal {
    /// `T₁ = λI − AAᵀ` with `λ ≥ λ₁(AAᵀ)`.
    Linearized { lambda: f64 },
    /// `T₁ = 0`: `ȳ` solves the normal equations directly (equality-only problems).
    Exact(DenseCholesky),
}

impl SemiProximal {
    pub fn lambda(&self) -> Option<f64> {
        match self {
            SemiProximal::Linearized { lambda } => Some(*lambda),
            SemiProximal::Exact(_) => None,
        }
    }
}

/// The carried iterate `w = (y, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl Iterate {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            y: vec![0.0; m],
            x: vec![0.0; n],
        }
    }

    fn copy_from(&mut self, other: &Iterate) {
        self.y.copy_from_slice(&other.y);
        self.x.copy_from_slice(&other.x);
    }

    pub fn is_finite(&self) -> bool {
        self.y.iter().chain(&self.x).all(|v| v.is_finite())
    }
}

/// Mutable state of one solve.
#[derive(Debug, Clone)]
pub struct SolverState {
    /// `w^{r,t}`.
    pub current: Iterate,
    /// `w^{r,t−1}`: the point the latest `w̄` was computed from.
    pub last: Iterate,
    /// `w^{r,0}`.
    pub anchor: Iterate,
    /// `w̄^{r,t}`.
    pub bar: Iterate,
    pub sigma: f64,
    pub prox: SemiProximal,
    pub variant: Variant,
    /// Outer loop counter.
    pub r: usize,
    /// Inner loop counter.
    pub t: usize,
    /// Total iterations.
    pub k: usize,
    /// Merit at the first checkpoint of the current outer loop.
    pub merit_first: Option<f64>,
    /// Merit at the previous checkpoint of the current outer loop.
    pub merit_prev: Option<f64>,
    // Pre-projection point `x + σ(Aᵀy − c)` from the latest x̄ update.
    pre_projection: Vec<f64>,
    aty: Vec<f64>,
    reflected_x: Vec<f64>,
    a_reflected_x: Vec<f64>,
    rhs: Vec<f64>,
}

impl SolverState {
    /// State at the origin.
    pub fn new(m: usize, n: usize, sigma: f64, prox: SemiProximal, variant: Variant) -> Self {
        Self::from_iterate(Iterate::zeros(m, n), sigma, prox, variant)
    }

    pub fn from_iterate(start: Iterate, sigma: f64, prox: SemiProximal, variant: Variant) -> Self {
        let (m, n) = (start.y.len(), start.x.len());
        Self {
            last: start.clone(),
            anchor: start.clone(),
            bar: start.clone(),
            current: start,
            sigma,
            prox,
            variant,
            r: 0,
            t: 0,
            k: 0,
            merit_first: None,
            merit_prev: None,
            pre_projection: vec![0.0; n],
            aty: vec![0.0; n],
            reflected_x: vec![0.0; n],
            a_reflected_x: vec![0.0; m],
            rhs: vec![0.0; m],
        }
    }

    /// `z̄` belonging to the current `w̄`, i.e. `(x̄ − v)/σ` with `v` the pre-projection point.
    ///
    /// Only meaningful after at least one iteration.
    pub fn bar_z(&self) -> Vec<f64> {
        self.bar
            .x
            .iter()
            .zip(&self.pre_projection)
            .map(|(xb, v)| (xb - v) / self.sigma)
            .collect()
    }

    /// Starts a new outer loop anchored at the current `w̄`.
    pub fn restart_at_bar(&mut self, new_sigma: f64) {
        self.anchor.copy_from(&self.bar);
        self.current.copy_from(&self.bar);
        self.sigma = new_sigma;
        self.r += 1;
        self.t = 0;
        self.merit_first = None;
        self.merit_prev = None;
    }
}

/// `z̄ = (Π_C(v) − v)/σ` with `v = x + σ(Aᵀy − c)`.
pub fn compute_z_bar(problem: &ScaledProblem, w: &Iterate, sigma: f64) -> Vec<f64> {
    let mut aty = vec![0.0; problem.n()];
    problem.at.spmv_into(&w.y, &mut aty);
    (0..problem.n())
        .map(|j| {
            let v = w.x[j] + sigma * (aty[j] - problem.c[j]);
            (v.max(problem.lower[j]).min(problem.upper[j]) - v) / sigma
        })
        .collect()
}

/// One pass of the inner loop: computes `w̄^{r,t+1}` from `w^{r,t}` and advances the iterate
/// according to the variant.
pub fn iterate_once(state: &mut SolverState, problem: &ScaledProblem) -> Result<()> {
    let sigma = state.sigma;
    let n = problem.n();
    let m = problem.m();

    // x̄ = Π_C(x + σ(Aᵀy − c))
    problem.at.spmv_into(&state.current.y, &mut state.aty);
    let mut finite_check = 0.0;
    for j in 0..n {
        let v = state.current.x[j] + sigma * (state.aty[j] - problem.c[j]);
        state.pre_projection[j] = v;
        let xb = v.max(problem.lower[j]).min(problem.upper[j]);
        state.bar.x[j] = xb;
        state.reflected_x[j] = 2.0 * xb - state.current.x[j];
        // f64::max drops NaN, so the unprojected value is checked too.
        finite_check += v + xb;
    }
    problem.a.spmv_into(&state.reflected_x, &mut state.a_reflected_x);

    match &state.prox {
        SemiProximal::Linearized { lambda } => {
            let step = 1.0 / (lambda * sigma);
            for i in 0..m {
                let yi = state.current.y[i] + step * (problem.b[i] - state.a_reflected_x[i]);
                let yi = if i < problem.m1 { yi } else { yi.max(0.0) };
                state.bar.y[i] = yi;
                finite_check += yi;
            }
        }
        SemiProximal::Exact(chol) => {
            for i in 0..m {
                state.rhs[i] = (problem.b[i] - state.a_reflected_x[i]) / sigma;
            }
            let delta = chol.solve(&state.rhs)?;
            for i in 0..m {
                let yi = state.current.y[i] + delta[i];
                state.bar.y[i] = yi;
                finite_check += yi;
            }
        }
    }
    if !finite_check.is_finite() {
        return Err(Error::NumericalBreakdown {
            iteration: state.k + 1,
            message: "non-finite value in w̄".into(),
        });
    }

    // New iterate goes into the `last` buffer, then the two are swapped.
    let t = state.t as f64;
    let (wa, wb) = (1.0 / (t + 2.0), (t + 1.0) / (t + 2.0));
    {
        let SolverState {
            current,
            last,
            anchor,
            bar,
            variant,
            ..
        } = state;
        let blocks = [
            (&mut last.y, &current.y, &anchor.y, &bar.y),
            (&mut last.x, &current.x, &anchor.x, &bar.x),
        ];
        for (out, cur, anc, bar) in blocks {
            match variant {
                Variant::Dr => out.copy_from_slice(bar),
                Variant::HdrFixed | Variant::Hdr => {
                    for i in 0..out.len() {
                        out[i] = wa * anc[i] + wb * bar[i];
                    }
                }
                Variant::Hpr => {
                    for i in 0..out.len() {
                        out[i] = wa * anc[i] + wb * (2.0 * bar[i] - cur[i]);
                    }
                }
            }
        }
    }
    std::mem::swap(&mut state.current, &mut state.last);
    state.t += 1;
    state.k += 1;
    Ok(())
}

/// `‖w_a − w_b‖_M` for the operator with `y`-block `σ(AAᵀ + T₁)`, off-diagonal `A` and
/// `x`-block `I/σ`; the `z` block is zero.
///
/// Evaluated as `σ‖Δy‖²_{T₁} + ‖Δx + σAᵀΔy‖²/σ`, with negative round-off clamped at zero.
pub fn compute_merit(
    wa: &Iterate,
    wb: &Iterate,
    sigma: f64,
    prox: &SemiProximal,
    problem: &ScaledProblem,
) -> f64 {
    let dy: Vec<f64> = wa.y.iter().zip(&wb.y).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = wa.x.iter().zip(&wb.x).map(|(a, b)| a - b).collect();
    let mut atdy = vec![0.0; problem.n()];
    problem.at.spmv_into(&dy, &mut atdy);
    let coupled: f64 = dx
        .iter()
        .zip(&atdy)
        .map(|(x, a)| (x + sigma * a).powi(2))
        .sum::<f64>()
        / sigma;
    let (t1_part, scale) = match prox {
        SemiProximal::Linearized { lambda } => {
            let dy2 = dot(&dy, &dy);
            (
                sigma * (lambda * dy2 - dot(&atdy, &atdy)),
                sigma * lambda * dy2 + dot(&dx, &dx) / sigma,
            )
        }
        SemiProximal::Exact(_) => (0.0, coupled),
    };
    let q = t1_part + coupled;
    if q < -1e-9 * scale.max(f64::MIN_POSITIVE) {
        log::warn!("M-seminorm quadratic form is negative ({q:e}); λ may underestimate λ₁(AAᵀ)");
    }
    q.max(0.0).sqrt()
}

/// `Δ_y` of the σ update: `sqrt(‖Δy‖²_{T₁} + ‖AᵀΔy‖²)`.
pub(crate) fn sigma_delta_y(dy: &[f64], prox: &SemiProximal, problem: &ScaledProblem) -> f64 {
    match prox {
        SemiProximal::Linearized { lambda } => lambda.sqrt() * norm2(dy),
        SemiProximal::Exact(_) => {
            let mut atdy = vec![0.0; problem.n()];
            problem.at.spmv_into(dy, &mut atdy);
            norm2(&atdy)
        }
    }
}
