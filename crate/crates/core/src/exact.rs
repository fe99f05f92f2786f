//! The `T₁ = 0` path for equality-only problems, where `ȳ` comes from the normal equations
//! `AAᵀȳ = rhs`, and the two proximal-free algorithms whose traces coincide: the HPR method without
//! proximal terms and the Halpern-accelerated pADMM without proximal terms, both specialized to
//! LP (`f₁(y) = −⟨b,y⟩`, `f₂(z) = δ_C*(−z)`, `B₁ = Aᵀ`, `B₂ = I`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpr::{iterate_once, SemiProximal, SolverState};
use crate::scaling::ScaledProblem;
use crate::sparse::SparseMatrix;

/// Dense `LLᵀ` factor of `AAᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCholesky {
    m: usize,
    /// Row-major lower triangle (full storage).
    l: Vec<f64>,
}

impl DenseCholesky {
    pub const MAX_ROWS: usize = 2000;

    /// Forms `AAᵀ` densely and factors it.
    pub fn factor_aat(a: &SparseMatrix) -> Result<Self> {
        let m = a.nrows();
        if m > Self::MAX_ROWS {
            return Err(Error::TooLarge(format!(
                "dense normal equations are capped at {} rows, got {m}",
                Self::MAX_ROWS
            )));
        }
        Self::factor(&dense_aat(a), m)
    }

    /// Factors a dense symmetric positive definite row-major `m × m` matrix.
    pub fn factor(mat: &[f64], m: usize) -> Result<Self> {
        if mat.len() != m * m {
            return Err(Error::Dimension(format!(
                "expected {m}x{m} matrix, got {} entries",
                mat.len()
            )));
        }
        let max_diag = (0..m).map(|i| mat[i * m + i].abs()).fold(0.0, f64::max);
        let floor = 1e-12 * max_diag.max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; m * m];
        for j in 0..m {
            let mut d = mat[j * m + j];
            for k in 0..j {
                d -= l[j * m + k] * l[j * m + k];
            }
            if !(d > floor) {
                return Err(Error::RankDeficient { pivot: j, value: d });
            }
            let d = d.sqrt();
            l[j * m + j] = d;
            for i in j + 1..m {
                let mut s = mat[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                l[i * m + j] = s / d;
            }
        }
        Ok(Self { m, l })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let m = self.m;
        if rhs.len() != m {
            return Err(Error::Dimension(format!(
                "normal equations of size {m}, right-hand side of length {}",
                rhs.len()
            )));
        }
        let mut y = rhs.to_vec();
        for i in 0..m {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * m + k] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in i + 1..m {
                s -= self.l[k * m + i] * y[k];
            }
            y[i] = s / self.l[i * m + i];
        }
        Ok(y)
    }

    /// Max-abs entry of `LLᵀ − mat`.
    pub fn reconstruction_error(&self, mat: &[f64]) -> f64 {
        let m = self.m;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let s: f64 = (0..=i.min(j)).map(|k| self.l[i * m + k] * self.l[j * m + k]).sum();
                worst = worst.max((s - mat[i * m + j]).abs());
            }
        }
        worst
    }
}

/// Row-major dense `AAᵀ`.
pub fn dense_aat(a: &SparseMatrix) -> Vec<f64> {
    let m = a.nrows();
    let at = a.transpose();
    let mut out = vec![0.0; m * m];
    for j in 0..at.nrows() {
        let entries: Vec<(usize, f64)> = at.row(j).collect();
        for &(i1, v1) in &entries {
            for &(i2, v2) in &entries {
                out[i1 * m + i2] += v1 * v2;
            }
        }
    }
    out
}

pub fn solve_normal_equations(chol: &DenseCholesky, rhs: &[f64]) -> Result<Vec<f64>> {
    chol.solve(rhs)
}

/// One inner iteration of the `T₁ = 0` path.
pub fn hpr_exact_iterate(state: &mut SolverState, problem: &ScaledProblem) -> Result<()> {
    if problem.m1 != problem.m() {
        return Err(Error::InvalidProblem(
            "the exact normal-equation path needs an equality-only problem".into(),
        ));
    }
    if !matches!(state.prox, SemiProximal::Exact(_)) {
        return Err(Error::InvalidConfig(
            "state is not configured with an exact normal-equation solve".into(),
        ));
    }
    iterate_once(state, problem)
}

/// Per-iteration record of the HPR method without proximal terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HprNoProxStep {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub x_half: Vec<f64>,
    pub x: Vec<f64>,
    pub x_tilde: Vec<f64>,
}

/// Per-iteration record of the Halpern-accelerated pADMM without proximal terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PadmmStep {
    pub y_bar: Vec<f64>,
    pub z_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
}

fn check_equality_instance(problem: &ScaledProblem, y0: &[f64], x0: &[f64]) -> Result<()> {
    if problem.m1 != problem.m() {
        return Err(Error::InvalidProblem(
            "the equivalence traces are specialized to equality-only problems".into(),
        ));
    }
    if y0.len() != problem.m() || x0.len() != problem.n() {
        return Err(Error::Dimension("initial point does not match the instance".into()));
    }
    Ok(())
}

// argmin_z L_σ(y, z; x) = (Π_C(v) − v)/σ with v = x + σ(Aᵀy − c).
fn z_subproblem(problem: &ScaledProblem, aty: &[f64], x: &[f64], sigma: f64) -> Vec<f64> {
    (0..problem.n())
        .map(|j| {
            let v = x[j] + sigma * (aty[j] - problem.c[j]);
            (v.max(problem.lower[j]).min(problem.upper[j]) - v) / sigma
        })
        .collect()
}

// argmin_y L_σ(y, z; x): AAᵀy = (b − A(x + σ(z − c)))/σ.
fn y_subproblem(
    problem: &ScaledProblem,
    chol: &DenseCholesky,
    z: &[f64],
    x: &[f64],
    sigma: f64,
) -> Result<Vec<f64>> {
    let shifted: Vec<f64> = (0..problem.n())
        .map(|j| x[j] + sigma * (z[j] - problem.c[j]))
        .collect();
    let mut ax = vec![0.0; problem.m()];
    problem.a.spmv_into(&shifted, &mut ax);
    let rhs: Vec<f64> = problem.b.iter().zip(&ax).map(|(b, v)| (b - v) / sigma).collect();
    chol.solve(&rhs)
}

fn aty(problem: &ScaledProblem, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; problem.n()];
    problem.at.spmv_into(y, &mut out);
    out
}

/// Runs the HPR method without proximal terms from `(y⁰, x⁰)` for `iters` iterations.
pub fn hpr_no_prox_trace(
    problem: &ScaledProblem,
    chol: &DenseCholesky,
    sigma: f64,
    y0: &[f64],
    x0: &[f64],
    iters: usize,
) -> Result<Vec<HprNoProxStep>> {
    check_equality_instance(problem, y0, x0)?;
    let aty0 = aty(problem, y0);
    let x_tilde0 = x0.to_vec();
    let mut y = y0.to_vec();
    let mut x_tilde = x_tilde0.clone();
    let mut trace = Vec::with_capacity(iters);
    for k in 0..iters {
        let aty_k = aty(problem, &y);
        let z = z_subproblem(problem, &aty_k, &x_tilde, sigma);
        let x_half: Vec<f64> = (0..problem.n())
            .map(|j| x_tilde[j] + sigma * (aty_k[j] + z[j] - problem.c[j]))
            .collect();
        let y_next = y_subproblem(problem, chol, &z, &x_half, sigma)?;
        let aty_next = aty(problem, &y_next);
        let x_full: Vec<f64> = (0..problem.n())
            .map(|j| x_half[j] + sigma * (aty_next[j] + z[j] - problem.c[j]))
            .collect();
        let kf = k as f64;
        let next_tilde: Vec<f64> = (0..problem.n())
            .map(|j| {
                x_tilde0[j] / (kf + 2.0)
                    + (kf + 1.0) / (kf + 2.0) * x_full[j]
                    + sigma / (kf + 2.0) * (aty0[j] - aty_next[j])
            })
            .collect();
        x_tilde = next_tilde;
        y = y_next;
        trace.push(HprNoProxStep {
            y: y.clone(),
            z,
            x_half,
            x: x_full,
            x_tilde: x_tilde.clone(),
        });
    }
    Ok(trace)
}

/// Runs the Halpern-accelerated pADMM without proximal terms from `(y⁰, 0, x⁰)`.
///
/// `z⁰` never enters a subproblem, so it is fixed at zero.
pub fn halpern_padmm_trace(
    problem: &ScaledProblem,
    chol: &DenseCholesky,
    sigma: f64,
    y0: &[f64],
    x0: &[f64],
    iters: usize,
) -> Result<Vec<PadmmStep>> {
    check_equality_instance(problem, y0, x0)?;
    let (n, m) = (problem.n(), problem.m());
    let (w0y, w0z, w0x) = (y0.to_vec(), vec![0.0; n], x0.to_vec());
    let (mut y, mut z, mut x) = (w0y.clone(), w0z.clone(), w0x.clone());
    let mut trace = Vec::with_capacity(iters);
    for k in 0..iters {
        let aty_k = aty(problem, &y);
        let z_bar = z_subproblem(problem, &aty_k, &x, sigma);
        let x_bar: Vec<f64> = (0..n)
            .map(|j| x[j] + sigma * (aty_k[j] + z_bar[j] - problem.c[j]))
            .collect();
        let y_bar = y_subproblem(problem, chol, &z_bar, &x_bar, sigma)?;
        let kf = k as f64;
        let (wa, wb) = (1.0 / (kf + 2.0), (kf + 1.0) / (kf + 2.0));
        for i in 0..m {
            y[i] = wa * w0y[i] + wb * (2.0 * y_bar[i] - y[i]);
        }
        for j in 0..n {
            z[j] = wa * w0z[j] + wb * (2.0 * z_bar[j] - z[j]);
            x[j] = wa * w0x[j] + wb * (2.0 * x_bar[j] - x[j]);
        }
        trace.push(PadmmStep { y_bar, z_bar, x_bar });
    }
    Ok(trace)
}

/// Largest componentwise gap `|a − b| / max(1, |a|, |b|)` between matching steps of the two
/// traces, comparing `(y^{k+1}, z^{k+1}, x^{k+½})` with `(ȳ^{k+1}, z̄^{k+1}, x̄^{k+1})`.
pub fn max_trace_gap(hpr: &[HprNoProxStep], padmm: &[PadmmStep]) -> f64 {
    let gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(p, q)| (p - q).abs() / 1.0f64.max(p.abs()).max(q.abs()))
            .fold(0.0, f64::max)
    };
    hpr.iter()
        .zip(padmm)
        .map(|(h, p)| gap(&h.y, &p.y_bar).max(gap(&h.z, &p.z_bar)).max(gap(&h.x_half, &p.x_bar)))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::generate_known_solution_lp;
    use crate::hpr::{Iterate, Variant};
    use crate::problem::LpProblem;
    use nalgebra::{DMatrix, DVector};

    const INF: f64 = f64::INFINITY;

    fn one_dim() -> ScaledProblem {
        let p = LpProblem::new(
            SparseMatrix::from_dense(&[vec![1.0]]).unwrap(),
            SparseMatrix::zeros(0, 1),
            vec![1.0],
            vec![],
            vec![1.0],
            vec![0.0],
            vec![INF],
        )
        .unwrap();
        ScaledProblem::unscaled(&p)
    }

    fn equality_instance(seed: u64, m: usize, n: usize) -> ScaledProblem {
        let (p, _) = generate_known_solution_lp(seed, m, 0, n, 0.6).unwrap();
        ScaledProblem::unscaled(&p)
    }

    #[test]
    fn identity_normal_equations() {
        let chol = DenseCholesky::factor_aat(&SparseMatrix::identity(3)).unwrap();
        assert_eq!(solve_normal_equations(&chol, &[1.0, -2.0, 3.0]).unwrap(), vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn single_row_normal_equations() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap();
        let chol = DenseCholesky::factor_aat(&a).unwrap();
        assert!((chol.solve(&[4.0]).unwrap()[0] - 2.0).abs() <= 1e-15);
    }

    #[test]
    fn random_normal_equations_match_dense_solve() {
        for seed in 0..5 {
            let p = equality_instance(seed, 5, 9);
            let aat = dense_aat(&p.a);
            let chol = DenseCholesky::factor_aat(&p.a).unwrap();
            let norm = aat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(chol.reconstruction_error(&aat) <= 1e-10 * norm);
            let rhs: Vec<f64> = (0..5).map(|i| i as f64 - 1.5).collect();
            let y = chol.solve(&rhs).unwrap();
            let oracle = DMatrix::from_row_slice(5, 5, &aat)
                .lu()
                .solve(&DVector::from_vec(rhs.clone()))
                .unwrap();
            for (a, b) in y.iter().zip(oracle.iter()) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
            let m = DMatrix::from_row_slice(5, 5, &aat);
            let res = &m * DVector::from_vec(y) - DVector::from_vec(rhs.clone());
            assert!(res.norm() <= 1e-10 * DVector::from_vec(rhs).norm());
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(matches!(DenseCholesky::factor_aat(&a), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn exact_path_reproduces_linearized_path_when_aat_is_lambda_identity() {
        let p = one_dim();
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let mut exact = SolverState::new(1, 1, 1.0, SemiProximal::Exact(chol), Variant::Hpr);
        let mut lin = SolverState::new(1, 1, 1.0, SemiProximal::Linearized { lambda: 1.0 }, Variant::Hpr);
        for _ in 0..50 {
            hpr_exact_iterate(&mut exact, &p).unwrap();
            iterate_once(&mut lin, &p).unwrap();
            for (a, b) in exact.current.y.iter().chain(&exact.current.x).zip(lin.current.y.iter().chain(&lin.current.x)) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn exact_path_on_diagonal_matrix_matches_linearized() {
        // AAᵀ = 4I, so λ = 4 gives T₁ = 0 on the linearized path.
        let lp = LpProblem::new(
            SparseMatrix::from_dense(&[vec![2.0, 0.0, 0.0], vec![0.0, -2.0, 0.0]]).unwrap(),
            SparseMatrix::zeros(0, 3),
            vec![1.0, 3.0],
            vec![],
            vec![1.0, -1.0, 0.5],
            vec![0.0, -INF, 0.0],
            vec![INF, INF, 2.0],
        )
        .unwrap();
        let p = ScaledProblem::unscaled(&lp);
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let mut exact = SolverState::new(2, 3, 0.8, SemiProximal::Exact(chol), Variant::Hpr);
        let mut lin = SolverState::new(2, 3, 0.8, SemiProximal::Linearized { lambda: 4.0 }, Variant::Hpr);
        for _ in 0..40 {
            hpr_exact_iterate(&mut exact, &p).unwrap();
            iterate_once(&mut lin, &p).unwrap();
        }
        for (a, b) in exact.current.y.iter().chain(&exact.current.x).zip(lin.current.y.iter().chain(&lin.current.x)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_iterate_rejects_inequalities() {
        let (lp, _) = generate_known_solution_lp(0, 1, 1, 2, 1.0).unwrap();
        let p = ScaledProblem::unscaled(&lp);
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let mut s = SolverState::new(2, 2, 1.0, SemiProximal::Exact(chol), Variant::Hpr);
        assert!(hpr_exact_iterate(&mut s, &p).is_err());
    }

    #[test]
    fn equivalence_traces_agree_on_one_dim() {
        let p = one_dim();
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let a = hpr_no_prox_trace(&p, &chol, 1.0, &[0.0], &[0.0], 20).unwrap();
        let b = halpern_padmm_trace(&p, &chol, 1.0, &[0.0], &[0.0], 20).unwrap();
        assert!(max_trace_gap(&a, &b) <= 1e-10);
    }

    #[test]
    fn equivalence_first_step_is_identical_and_tilde_matches_half_step() {
        let p = equality_instance(11, 3, 6);
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let y0 = vec![0.5, -0.25, 1.0];
        let x0 = vec![0.1, 0.2, -0.3, 0.4, 0.0, 1.0];
        let a = hpr_no_prox_trace(&p, &chol, 0.37, &y0, &x0, 1).unwrap();
        let b = halpern_padmm_trace(&p, &chol, 0.37, &y0, &x0, 1).unwrap();
        assert_eq!(a[0].y, b[0].y_bar);
        assert_eq!(a[0].z, b[0].z_bar);
        assert_eq!(a[0].x_half, b[0].x_bar);
        for (t, h) in a[0].x_tilde.iter().zip(&a[0].x_half) {
            assert!((t - h).abs() <= 1e-12 * (1.0 + h.abs()));
        }
    }

    #[test]
    fn equivalence_traces_agree_on_random_instance() {
        let p = equality_instance(5, 3, 6);
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let a = hpr_no_prox_trace(&p, &chol, 0.37, &[0.0; 3], &[0.0; 6], 50).unwrap();
        let b = halpern_padmm_trace(&p, &chol, 0.37, &[0.0; 3], &[0.0; 6], 50).unwrap();
        assert!(max_trace_gap(&a, &b) <= 1e-10, "{}", max_trace_gap(&a, &b));
    }

    #[test]
    fn padmm_trace_matches_exact_solver_iterates() {
        let p = equality_instance(8, 3, 7);
        let chol = DenseCholesky::factor_aat(&p.a).unwrap();
        let trace = halpern_padmm_trace(&p, &chol, 1.3, &[0.0; 3], &[0.0; 7], 30).unwrap();
        let mut s = SolverState::from_iterate(Iterate::zeros(3, 7), 1.3, SemiProximal::Exact(chol), Variant::Hpr);
        for step in &trace {
            hpr_exact_iterate(&mut s, &p).unwrap();
            for (a, b) in s.bar.y.iter().zip(&step.y_bar).chain(s.bar.x.iter().zip(&step.x_bar)) {
                assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }
}
