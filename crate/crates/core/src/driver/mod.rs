//! The outer machinery around the inner iteration: KKT residuals, termination, restarts, σ
//! updates and the checkpointed solve loop.

mod config;
mod report;
mod residual;
mod restart;

use std::time::Instant;

pub use config::{ProximalMode, SolverConfig, TerminationSpace};
pub use report::{RestartRecord, SolveReport, SolveStatus, Timings, REPORT_SCHEMA_VERSION};
pub use residual::{check_termination, kkt_residual, KktResidual};
pub use restart::{check_restart, sigma_from_deltas, sigma_update, RestartTrigger, SigmaGuard, SigmaUpdate};

use residual::{evaluate, Evaluation};

use crate::error::{Error, Result};
use crate::exact::DenseCholesky;
use crate::hpr::{compute_merit, iterate_once, SemiProximal, SolverState};
use crate::problem::{LpProblem, PrimalDualPoint};
use crate::scaling::{scale_problem, ScaledProblem};
use crate::sparse::power_method_lambda_max;

struct Checkpoint {
    point: PrimalDualPoint,
    original: Evaluation,
    termination: Evaluation,
}

/// Solves `p` from the origin.
pub fn solve(p: &LpProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    p.validate()?;
    if cfg.proximal == ProximalMode::Exact && p.m2() > 0 {
        return Err(Error::InvalidConfig(
            "the exact normal-equation path needs an equality-only problem".into(),
        ));
    }
    let (m, n) = (p.m(), p.n());
    let mut timings = Timings::default();

    let clock = Instant::now();
    let sp = scale_problem(p, &cfg.scaling);
    timings.scaling = clock.elapsed().as_secs_f64();
    let original = ScaledProblem::unscaled(p);
    let scaled_constant = p.objective_constant / sp.info.objective_factor();

    let solve_clock = Instant::now();
    let (prox, power) = match cfg.proximal {
        ProximalMode::Linearized => {
            let pm = power_method_lambda_max(&sp.a, &cfg.power_method)?;
            (SemiProximal::Linearized { lambda: pm.lambda }, Some(pm))
        }
        ProximalMode::Exact => (SemiProximal::Exact(DenseCholesky::factor_aat(&sp.a)?), None),
    };
    timings.power_method = solve_clock.elapsed().as_secs_f64();
    let lambda = prox.lambda();

    let mut state = SolverState::new(m, n, cfg.sigma0, prox, cfg.variant);
    let mut restart_log = Vec::new();
    let mut latest: Option<Checkpoint> = None;
    let mut message = None;

    let status = 'outer: loop {
        let clock = Instant::now();
        let steps = cfg.check_interval.min(cfg.max_iterations - state.k);
        for _ in 0..steps {
            if let Err(e) = iterate_once(&mut state, &sp) {
                timings.iterations += clock.elapsed().as_secs_f64();
                message = Some(e.to_string());
                break 'outer SolveStatus::NumericalError;
            }
        }
        timings.iterations += clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let scaled_point = PrimalDualPoint {
            y: state.bar.y.clone(),
            z: state.bar_z(),
            x: state.bar.x.clone(),
        };
        let point = sp.info.unscale_point(&scaled_point);
        let original_eval = evaluate(&original, p.objective_constant, &point);
        let termination_eval = match cfg.termination_space {
            TerminationSpace::Original => original_eval,
            TerminationSpace::Scaled => evaluate(&sp, scaled_constant, &scaled_point),
        };
        let res = termination_eval.residual;
        latest = Some(Checkpoint {
            point,
            original: original_eval,
            termination: termination_eval,
        });
        log::debug!(
            "k={} r={} sigma={:.3e} primal={:.3e} dual={:.3e} gap={:.3e}",
            state.k,
            state.r,
            state.sigma,
            res.primal_infeas_rel,
            res.dual_infeas_rel,
            res.gap_rel
        );

        let verdict = if !res.max_relative().is_finite() {
            message = Some(format!("non-finite residual at iteration {}", state.k));
            Some(SolveStatus::NumericalError)
        } else if check_termination(&res, cfg.tolerance) {
            Some(SolveStatus::Optimal)
        } else if solve_clock.elapsed().as_secs_f64() >= cfg.time_limit_seconds {
            Some(SolveStatus::TimeLimit)
        } else if state.k >= cfg.max_iterations {
            Some(SolveStatus::IterationLimit)
        } else {
            None
        };
        if let Some(status) = verdict {
            timings.checks += clock.elapsed().as_secs_f64();
            break status;
        }

        if cfg.variant.restarts() {
            let merit = cfg.variant.merit_factor()
                * compute_merit(&state.last, &state.bar, state.sigma, &state.prox, &sp);
            let first = state.merit_first.unwrap_or(merit);
            let prev = state.merit_prev.unwrap_or(merit);
            let trigger = check_restart(merit, first, prev, state.t, state.k, cfg);
            if trigger == RestartTrigger::None {
                state.merit_first = Some(first);
                state.merit_prev = Some(merit);
            } else {
                let update = if cfg.variant.adapts_sigma() {
                    sigma_update(
                        &state.bar,
                        &state.anchor,
                        &state.prox,
                        &sp,
                        res.primal_infeas_rel,
                        res.dual_infeas_rel,
                    )
                } else {
                    SigmaUpdate {
                        sigma: state.sigma,
                        delta_x: f64::NAN,
                        delta_y: f64::NAN,
                        guard: SigmaGuard::Frozen,
                    }
                };
                restart_log.push(RestartRecord {
                    outer_loop: state.r,
                    trigger,
                    inner_iterations: state.t,
                    iteration: state.k,
                    merit,
                    sigma_next: update.sigma,
                    sigma_guard: update.guard,
                });
                state.restart_at_bar(update.sigma);
            }
        }
        timings.checks += clock.elapsed().as_secs_f64();
    };
    timings.solve = solve_clock.elapsed().as_secs_f64();

    let checkpoint = latest.unwrap_or_else(|| {
        let point = PrimalDualPoint::zeros(m, n);
        let eval = evaluate(&original, p.objective_constant, &point);
        Checkpoint {
            point,
            original: eval,
            termination: eval,
        }
    });
    Ok(SolveReport {
        schema_version: REPORT_SCHEMA_VERSION,
        status,
        variant: cfg.variant,
        tolerance: cfg.tolerance,
        primal_objective: p.reported_objective(checkpoint.original.primal_objective),
        dual_objective: p.reported_objective(checkpoint.original.dual_objective),
        residual: checkpoint.termination.residual,
        original_residual: checkpoint.original.residual,
        iterations: state.k,
        restarts: state.r,
        restart_log,
        timings,
        lambda,
        power_method: power,
        sigma_final: state.sigma,
        clamped_bound_terms: checkpoint.original.clamped,
        message,
        solution: checkpoint.point,
    })
}
