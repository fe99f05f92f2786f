//! Preconditioning: Ruiz equilibration, Pock–Chambolle diagonal scaling, and normalization of
//! the right-hand side and cost. The composite transform is
//!
//! ```text
//! Â = D_r A D_c,   b̃ = D_r b / β_b,   c̃ = D_c c / β_c,   [l̃, ũ] = [l, u] / (β_b D_c)
//! ```
//!
//! so that `x = β_b D_c x̃`, `y = β_c D_r ỹ` and `z = β_c z̃ / D_c`.

use serde::{Deserialize, Serialize};

use crate::problem::{LpProblem, PrimalDualPoint};
use crate::sparse::{norm2, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub ruiz_iters: usize,
    pub pock_chambolle: bool,
    pub pock_chambolle_alpha: f64,
    pub bc_normalize: bool,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            ruiz_iters: 10,
            pock_chambolle: true,
            pock_chambolle_alpha: 1.0,
            bc_normalize: true,
        }
    }
}

impl ScalingConfig {
    pub fn none() -> Self {
        Self {
            ruiz_iters: 0,
            pock_chambolle: false,
            pock_chambolle_alpha: 1.0,
            bc_normalize: false,
        }
    }
}

/// Accumulated scaling factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingInfo {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    /// `‖b̂‖ + 1` of the equilibrated problem, or 1 when normalization is off.
    pub b_norm_factor: f64,
    /// `‖ĉ‖ + 1` of the equilibrated problem, or 1 when normalization is off.
    pub c_norm_factor: f64,
}

impl ScalingInfo {
    pub fn identity(m: usize, n: usize) -> Self {
        Self {
            row_scale: vec![1.0; m],
            col_scale: vec![1.0; n],
            b_norm_factor: 1.0,
            c_norm_factor: 1.0,
        }
    }

    /// Maps a point of the scaled problem back to the original space.
    pub fn unscale_point(&self, scaled: &PrimalDualPoint) -> PrimalDualPoint {
        let mut out = scaled.clone();
        self.unscale_into(&scaled.y, &scaled.z, &scaled.x, &mut out);
        out
    }

    pub(crate) fn unscale_into(&self, y: &[f64], z: &[f64], x: &[f64], out: &mut PrimalDualPoint) {
        let (bf, cf) = (self.b_norm_factor, self.c_norm_factor);
        for (o, (&v, &d)) in out.y.iter_mut().zip(y.iter().zip(&self.row_scale)) {
            *o = cf * d * v;
        }
        for (o, (&v, &d)) in out.z.iter_mut().zip(z.iter().zip(&self.col_scale)) {
            *o = cf * v / d;
        }
        for (o, (&v, &d)) in out.x.iter_mut().zip(x.iter().zip(&self.col_scale)) {
            *o = bf * d * v;
        }
    }

    /// Maps a point of the original problem into the scaled space.
    pub fn scale_point(&self, original: &PrimalDualPoint) -> PrimalDualPoint {
        let (bf, cf) = (self.b_norm_factor, self.c_norm_factor);
        PrimalDualPoint {
            y: original
                .y
                .iter()
                .zip(&self.row_scale)
                .map(|(&v, &d)| v / (cf * d))
                .collect(),
            z: original
                .z
                .iter()
                .zip(&self.col_scale)
                .map(|(&v, &d)| v * d / cf)
                .collect(),
            x: original
                .x
                .iter()
                .zip(&self.col_scale)
                .map(|(&v, &d)| v / (bf * d))
                .collect(),
        }
    }

    /// Ratio between original and scaled objective values (excluding the constant).
    pub fn objective_factor(&self) -> f64 {
        self.b_norm_factor * self.c_norm_factor
    }
}

/// Stacked problem data in the form consumed by the iteration kernels.
#[derive(Debug, Clone)]
pub struct ScaledProblem {
    pub a: SparseMatrix,
    /// `Aᵀ` stored row-compressed so both products are gathers.
    pub at: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub m1: usize,
    pub info: ScalingInfo,
}

impl ScaledProblem {
    /// The original problem without any scaling.
    pub fn unscaled(p: &LpProblem) -> Self {
        let a = p.stacked_matrix();
        Self {
            at: a.transpose(),
            a,
            b: p.stacked_rhs(),
            c: p.c.clone(),
            lower: p.lower.clone(),
            upper: p.upper.clone(),
            m1: p.m1(),
            info: ScalingInfo::identity(p.m(), p.n()),
        }
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }
}

fn inv_sqrt_or_one(v: f64) -> f64 {
    if v > 0.0 {
        1.0 / v.sqrt()
    } else {
        1.0
    }
}

/// Ruiz equilibration: each pass divides every row and column by the square root of its
/// maximum absolute entry. Returns the scaled matrix and the accumulated row/column factors.
pub fn ruiz_scale(a: &SparseMatrix, iters: usize) -> (SparseMatrix, Vec<f64>, Vec<f64>) {
    let mut scaled = a.clone();
    let mut row = vec![1.0; a.nrows()];
    let mut col = vec![1.0; a.ncols()];
    for _ in 0..iters {
        let dr: Vec<f64> = scaled.row_max_abs().into_iter().map(inv_sqrt_or_one).collect();
        let dc: Vec<f64> = scaled.col_max_abs().into_iter().map(inv_sqrt_or_one).collect();
        scaled.scale_rows_cols(&dr, &dc);
        row.iter_mut().zip(&dr).for_each(|(r, d)| *r *= d);
        col.iter_mut().zip(&dc).for_each(|(c, d)| *c *= d);
    }
    (scaled, row, col)
}

/// Pock–Chambolle diagonal preconditioning: rows divided by `sqrt(Σ_j |a_ij|^{2−α})`, columns
/// by `sqrt(Σ_i |a_ij|^α)`.
pub fn pock_chambolle_scale(a: &SparseMatrix, alpha: f64) -> (SparseMatrix, Vec<f64>, Vec<f64>) {
    let dr: Vec<f64> = a
        .row_abs_pow_sums(2.0 - alpha)
        .into_iter()
        .map(inv_sqrt_or_one)
        .collect();
    let dc: Vec<f64> = a.col_abs_pow_sums(alpha).into_iter().map(inv_sqrt_or_one).collect();
    let mut scaled = a.clone();
    scaled.scale_rows_cols(&dr, &dc);
    (scaled, dr, dc)
}

/// Divides `b` by `‖b‖ + 1` and `c` by `‖c‖ + 1`; returns the two factors.
pub fn normalize_rhs_cost(b: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>, f64, f64) {
    let bf = norm2(b) + 1.0;
    let cf = norm2(c) + 1.0;
    (
        b.iter().map(|v| v / bf).collect(),
        c.iter().map(|v| v / cf).collect(),
        bf,
        cf,
    )
}

/// Runs the full pipeline (Ruiz → Pock–Chambolle → b/c normalization) per `cfg`.
pub fn scale_problem(p: &LpProblem, cfg: &ScalingConfig) -> ScaledProblem {
    let mut a = p.stacked_matrix();
    let mut row = vec![1.0; p.m()];
    let mut col = vec![1.0; p.n()];
    if cfg.ruiz_iters > 0 {
        let (scaled, dr, dc) = ruiz_scale(&a, cfg.ruiz_iters);
        a = scaled;
        row = dr;
        col = dc;
    }
    if cfg.pock_chambolle {
        let (scaled, dr, dc) = pock_chambolle_scale(&a, cfg.pock_chambolle_alpha);
        a = scaled;
        row.iter_mut().zip(&dr).for_each(|(r, d)| *r *= d);
        col.iter_mut().zip(&dc).for_each(|(c, d)| *c *= d);
    }
    let b_hat: Vec<f64> = p
        .stacked_rhs()
        .iter()
        .zip(&row)
        .map(|(v, d)| v * d)
        .collect();
    let c_hat: Vec<f64> = p.c.iter().zip(&col).map(|(v, d)| v * d).collect();
    let (b, c, bf, cf) = if cfg.bc_normalize {
        normalize_rhs_cost(&b_hat, &c_hat)
    } else {
        (b_hat, c_hat, 1.0, 1.0)
    };
    let lower = p
        .lower
        .iter()
        .zip(&col)
        .map(|(l, d)| l / (bf * d))
        .collect();
    let upper = p
        .upper
        .iter()
        .zip(&col)
        .map(|(u, d)| u / (bf * d))
        .collect();
    ScaledProblem {
        at: a.transpose(),
        a,
        b,
        c,
        lower,
        upper,
        m1: p.m1(),
        info: ScalingInfo {
            row_scale: row,
            col_scale: col,
            b_norm_factor: bf,
            c_norm_factor: cf,
        },
    }
}
