use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::problem::{bound_support_term, LpProblem, PrimalDualPoint};
use crate::scaling::ScaledProblem;
use crate::sparse::{dot, norm2};

/// Primal and dual infeasibility, duality gap, and the norm of the KKT residual mapping
/// `R(w) = (y − Π_D(y − Ax + b), x − Π_C(x − z), c − Aᵀy − z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `‖Π_D(b − Ax)‖`.
    pub primal_infeas_abs: f64,
    /// `‖Π_D(b − Ax)‖ / (1 + ‖b‖)`.
    pub primal_infeas_rel: f64,
    /// `‖c − Aᵀy − z‖`.
    pub dual_infeas_abs: f64,
    /// `‖c − Aᵀy − z‖ / (1 + ‖c‖)`.
    pub dual_infeas_rel: f64,
    /// `|⟨b, y⟩ − δ_C*(−z) − ⟨c, x⟩|`.
    pub gap_abs: f64,
    /// `gap_abs / (1 + |dual objective| + |primal objective|)`.
    pub gap_rel: f64,
    /// `‖R(w)‖`.
    pub residual_vector_norm: f64,
}

impl KktResidual {
    /// Largest of the three relative criteria.
    pub fn max_relative(&self) -> f64 {
        self.primal_infeas_rel.max(self.dual_infeas_rel).max(self.gap_rel)
    }
}

/// A residual together with the objective values it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Evaluation {
    pub residual: KktResidual,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub clamped: usize,
}

/// Residual of `point` for `p`.
pub fn kkt_residual(p: &LpProblem, point: &PrimalDualPoint) -> Result<KktResidual> {
    point.check_dims(p)?;
    let stacked = ScaledProblem::unscaled(p);
    Ok(evaluate(&stacked, p.objective_constant, point).residual)
}

/// Residual of `point` for the stacked data in `sp`; `objective_constant` is added to both
/// objectives.
pub(crate) fn evaluate(sp: &ScaledProblem, objective_constant: f64, point: &PrimalDualPoint) -> Evaluation {
    let (m, n, m1) = (sp.m(), sp.n(), sp.m1);
    let (y, z, x) = (&point.y, &point.z, &point.x);

    let mut ax = vec![0.0; m];
    sp.a.spmv_into(x, &mut ax);
    let mut aty = vec![0.0; n];
    sp.at.spmv_into(y, &mut aty);

    let mut primal2 = 0.0;
    let mut block_y2 = 0.0;
    for i in 0..m {
        let r = sp.b[i] - ax[i];
        let (viol, yi) = if i < m1 {
            (r, y[i] + r)
        } else {
            (r.max(0.0), (y[i] + r).max(0.0))
        };
        primal2 += viol * viol;
        block_y2 += (y[i] - yi).powi(2);
    }

    let mut dual2 = 0.0;
    let mut block_x2 = 0.0;
    for j in 0..n {
        let d = sp.c[j] - aty[j] - z[j];
        dual2 += d * d;
        let proj = (x[j] - z[j]).max(sp.lower[j]).min(sp.upper[j]);
        block_x2 += (x[j] - proj).powi(2);
    }

    let primal_objective = dot(&sp.c, x) + objective_constant;
    let (support, clamped) = bound_support_term(z, &sp.lower, &sp.upper);
    let dual_objective = dot(&sp.b, y) + support + objective_constant;
    let gap_abs = (dual_objective - primal_objective).abs();

    let primal_infeas_abs = primal2.sqrt();
    let dual_infeas_abs = dual2.sqrt();
    Evaluation {
        residual: KktResidual {
            primal_infeas_abs,
            primal_infeas_rel: primal_infeas_abs / (1.0 + norm2(&sp.b)),
            dual_infeas_abs,
            dual_infeas_rel: dual_infeas_abs / (1.0 + norm2(&sp.c)),
            gap_abs,
            gap_rel: gap_abs / (1.0 + dual_objective.abs() + primal_objective.abs()),
            residual_vector_norm: (block_y2 + block_x2 + dual2).sqrt(),
        },
        primal_objective,
        dual_objective,
        clamped,
    }
}

/// True iff all three relative criteria are at most `eps`.
pub fn check_termination(res: &KktResidual, eps: f64) -> bool {
    res.gap_rel <= eps && res.primal_infeas_rel <= eps && res.dual_infeas_rel <= eps
}
