//! Synthetic instances: the Adams–Johnson linearization of the quadratic assignment problem and
//! random LPs with a known primal-dual solution.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{LpProblem, NameTable, PrimalDualPoint};
use crate::sparse::{spmv, spmv_t, SparseMatrix};

const INF: f64 = f64::INFINITY;

/// Upper limit on the coefficient count of a generated QAP model.
pub const QAP_NNZ_BUDGET: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QapInstance {
    pub n: usize,
    /// Flow matrix `a_ik`.
    pub flow: Vec<Vec<f64>>,
    /// Distance matrix `b_jl`.
    pub distance: Vec<Vec<f64>>,
}

impl QapInstance {
    pub fn new(flow: Vec<Vec<f64>>, distance: Vec<Vec<f64>>) -> Result<Self> {
        let n = flow.len();
        let square = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&flow) || !square(&distance) {
            return Err(Error::InvalidProblem(
                "flow and distance must be square matrices of the same size".into(),
            ));
        }
        if flow.iter().chain(&distance).flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite QAP data".into()));
        }
        Ok(Self { n, flow, distance })
    }

    /// Symmetric instance with zero diagonal and integer entries in `0..=max_entry`.
    pub fn random(n: usize, seed: u64, max_entry: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sym = |rng: &mut ChaCha8Rng| {
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for k in i + 1..n {
                    let v = rng.gen_range(0..=max_entry) as f64;
                    m[i][k] = v;
                    m[k][i] = v;
                }
            }
            m
        };
        let flow = sym(&mut rng);
        let distance = sym(&mut rng);
        Self { n, flow, distance }
    }

    /// `Σ_{i,k} a_ik b_{π(i)π(k)}` for the assignment `i ↦ π(i)`.
    pub fn permutation_cost(&self, perm: &[usize]) -> f64 {
        let mut cost = 0.0;
        for i in 0..self.n {
            for k in 0..self.n {
                cost += self.flow[i][k] * self.distance[perm[i]][perm[k]];
            }
        }
        cost
    }
}

/// Row and column counts of the linearized model, without building it.
pub fn qap_lp_dimensions(n: usize, dedup_symmetry: bool) -> (usize, usize) {
    let n2 = n * n;
    let sym_rows = if dedup_symmetry { n2 * (n2 - 1) / 2 } else { n2 * n2 };
    (2 * n * n2 + sym_rows + 2 * n, n2 + n2 * n2)
}

/// Builds the Adams–Johnson LP relaxation. Variables are `x_ij` (indices `0..N²`) followed by
/// `s_ijkl` at `N² + ((iN + j)N + k)N + l`.
///
/// With `dedup_symmetry` the constraint `s_ijkl = s_klij` is emitted once per unordered pair
/// `(i,j) < (k,l)`; otherwise all `N⁴` rows are written, including the vacuous diagonal ones.
pub fn generate_qap_lp(q: &QapInstance, dedup_symmetry: bool) -> Result<LpProblem> {
    let n = q.n;
    if n < 2 {
        return Err(Error::InvalidProblem("QAP needs at least two facilities".into()));
    }
    let n2 = n * n;
    let (rows, cols) = qap_lp_dimensions(n, dedup_symmetry);
    let nnz_estimate = 2 * n2 * n * (n + 1) + 2 * n2 * n2 + 2 * n * n;
    if nnz_estimate > QAP_NNZ_BUDGET {
        return Err(Error::TooLarge(format!(
            "QAP with N={n} needs ~{nnz_estimate} nonzeros ({rows} rows, {cols} columns)"
        )));
    }
    let xi = |i: usize, j: usize| i * n + j;
    let si = |i: usize, j: usize, k: usize, l: usize| n2 + ((i * n + j) * n + k) * n + l;

    let mut trip = Vec::with_capacity(nnz_estimate);
    let mut rhs = Vec::with_capacity(rows);
    let mut row_names = Vec::with_capacity(rows);
    let mut r = 0;
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    trip.push((r, si(i, j, k, l), 1.0));
                }
                trip.push((r, xi(k, l), -1.0));
                rhs.push(0.0);
                row_names.push(format!("ri_{j}_{k}_{l}"));
                r += 1;
            }
        }
    }
    for i in 0..n {
        for k in 0..n {
            for l in 0..n {
                for j in 0..n {
                    trip.push((r, si(i, j, k, l), 1.0));
                }
                trip.push((r, xi(k, l), -1.0));
                rhs.push(0.0);
                row_names.push(format!("rj_{i}_{k}_{l}"));
                r += 1;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let (p, s) = (i * n + j, k * n + l);
                    if dedup_symmetry && p >= s {
                        continue;
                    }
                    if p != s {
                        trip.push((r, si(i, j, k, l), 1.0));
                        trip.push((r, si(k, l, i, j), -1.0));
                    }
                    rhs.push(0.0);
                    row_names.push(format!("sym_{i}_{j}_{k}_{l}"));
                    r += 1;
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            trip.push((r, xi(i, j), 1.0));
        }
        rhs.push(1.0);
        row_names.push(format!("row_{i}"));
        r += 1;
    }
    for j in 0..n {
        for i in 0..n {
            trip.push((r, xi(i, j), 1.0));
        }
        rhs.push(1.0);
        row_names.push(format!("col_{j}"));
        r += 1;
    }
    debug_assert_eq!(r, rows);

    let mut c = vec![0.0; cols];
    let lower = vec![0.0; cols];
    let mut upper = vec![INF; cols];
    let mut col_names = Vec::with_capacity(cols);
    for i in 0..n {
        for j in 0..n {
            upper[xi(i, j)] = 1.0;
            col_names.push(format!("x_{i}_{j}"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    c[si(i, j, k, l)] = q.flow[i][k] * q.distance[j][l];
                    col_names.push(format!("s_{i}_{j}_{k}_{l}"));
                }
            }
        }
    }
    let a_eq = SparseMatrix::from_triplets(rows, cols, &trip)?;
    let mut p = LpProblem::new(
        a_eq,
        SparseMatrix::zeros(0, cols),
        rhs,
        vec![],
        c,
        lower,
        upper,
    )?;
    p.names = Some(NameTable {
        problem: format!("QAP{n}"),
        rows: row_names,
        columns: col_names,
    });
    Ok(p)
}

// Dyadic draws keep every product and sum in the construction exact in binary floating point.
fn dyadic(rng: &mut ChaCha8Rng, lo: i32, hi: i32, denom: f64) -> f64 {
    rng.gen_range(lo..=hi) as f64 / denom
}

fn positive_dyadic(rng: &mut ChaCha8Rng) -> f64 {
    dyadic(rng, 2, 16, 8.0)
}

/// Random sparse LP together with a point satisfying its KKT system exactly.
///
/// Columns get a mix of bound types (lower-bounded, boxed, upper-bounded, free) with the
/// primal value either at a bound (nonzero reduced cost of the right sign) or strictly inside.
/// Inequality rows are either active (any `y ≥ 0`) or slack (`y = 0`). Then `b` is chosen
/// consistent with `x*` and `c := Aᵀy* + z*`.
pub fn generate_known_solution_lp(
    seed: u64,
    m1: usize,
    m2: usize,
    n: usize,
    density: f64,
) -> Result<(LpProblem, PrimalDualPoint)> {
    if n < m1 {
        return Err(Error::InvalidConfig(format!("need n >= m1, got n={n}, m1={m1}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!("density {density} outside (0, 1]")));
    }
    if m1 + m2 == 0 || n == 0 {
        return Err(Error::InvalidConfig("need at least one row and one column".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = m1 + m2;
    let columns: Vec<usize> = (0..n).collect();
    let mut trip = Vec::new();
    for i in 0..m {
        let mut row = Vec::new();
        for _ in 0..64 {
            row.clear();
            for &j in &columns {
                if rng.gen::<f64>() < density {
                    let mut k = rng.gen_range(1..=8) as f64 / 4.0;
                    if rng.gen_bool(0.5) {
                        k = -k;
                    }
                    row.push((i, j, k));
                }
            }
            if !row.is_empty() {
                break;
            }
        }
        if row.is_empty() {
            // Retries exhausted on a very sparse draw: fall back to a single entry.
            let j = *columns.choose(&mut rng).expect("n > 0");
            row.push((i, j, 1.0));
        }
        trip.extend_from_slice(&row);
    }
    let a = SparseMatrix::from_triplets(m, n, &trip)?;

    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut lower = vec![0.0; n];
    let mut upper = vec![INF; n];
    for j in 0..n {
        let base = dyadic(&mut rng, -16, 16, 8.0);
        let width = positive_dyadic(&mut rng) * 2.0;
        match rng.gen_range(0..7) {
            0 => {
                lower[j] = base;
                x[j] = base;
                z[j] = positive_dyadic(&mut rng);
            }
            1 => {
                lower[j] = base;
                x[j] = base + positive_dyadic(&mut rng);
            }
            2 => {
                lower[j] = base;
                upper[j] = base + width;
                x[j] = upper[j];
                z[j] = -positive_dyadic(&mut rng);
            }
            3 => {
                lower[j] = base;
                upper[j] = base + width;
                x[j] = base;
                z[j] = positive_dyadic(&mut rng);
            }
            4 => {
                lower[j] = base;
                upper[j] = base + width;
                x[j] = base + width / 2.0;
            }
            5 => {
                lower[j] = -INF;
                x[j] = base;
            }
            _ => {
                lower[j] = -INF;
                upper[j] = base;
                x[j] = base;
                z[j] = -positive_dyadic(&mut rng);
            }
        }
    }

    let ax = spmv(&a, &x)?;
    let mut y = vec![0.0; m];
    let mut b = ax.clone();
    for i in 0..m {
        if i < m1 {
            y[i] = dyadic(&mut rng, -16, 16, 8.0);
        } else if rng.gen_bool(0.6) {
            y[i] = if rng.gen_bool(0.9) { positive_dyadic(&mut rng) } else { 0.0 };
        } else {
            b[i] = ax[i] - positive_dyadic(&mut rng);
        }
    }
    let aty = spmv_t(&a, &y)?;
    let c: Vec<f64> = aty.iter().zip(&z).map(|(u, v)| u + v).collect();

    let p = LpProblem::new(
        a.row_block(0, m1),
        a.row_block(m1, m),
        b[..m1].to_vec(),
        b[m1..].to_vec(),
        c,
        lower,
        upper,
    )?;
    Ok((p, PrimalDualPoint { y, z, x }))
}

/// Moves the known solution of `p` by `shift` in every coordinate: `x ↦ x + shift·1`, with
/// `b`, the bounds and the objective constant adjusted so `(y, z)` stay optimal and the
/// optimal value is unchanged.
pub fn translate_lp(p: &LpProblem, point: &PrimalDualPoint, shift: f64) -> Result<(LpProblem, PrimalDualPoint)> {
    point.check_dims(p)?;
    let d = vec![shift; p.n()];
    let mut q = p.clone();
    for (b, s) in q.b_eq.iter_mut().zip(spmv(&p.a_eq, &d)?) {
        *b += s;
    }
    for (b, s) in q.b_ineq.iter_mut().zip(spmv(&p.a_ineq, &d)?) {
        *b += s;
    }
    q.lower.iter_mut().for_each(|v| *v += shift);
    q.upper.iter_mut().for_each(|v| *v += shift);
    q.objective_constant -= shift * p.c.iter().sum::<f64>();
    let x = point.x.iter().map(|v| v + shift).collect();
    Ok((q, PrimalDualPoint { y: point.y.clone(), z: point.z.clone(), x }))
}

/// Small random LP with every variable boxed, so the feasible region is a polytope. A random
/// interior point of the box fixes `b`: equality rows pass through it and inequality rows hold
/// with a small slack. Integer-valued data keeps the instances well conditioned.
pub fn generate_boxed_lp(seed: u64, m1: usize, m2: usize, n: usize) -> Result<LpProblem> {
    if n < m1 || n == 0 || m1 + m2 == 0 {
        return Err(Error::InvalidConfig(format!(
            "need n >= m1 >= 0, n >= 1 and at least one row (m1={m1}, m2={m2}, n={n})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower: Vec<f64> = (0..n).map(|_| -(rng.gen_range(0..=2) as f64)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(1..=3) as f64).collect();
    let x0: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| l + (u - l) * rng.gen_range(1..=7) as f64 / 8.0)
        .collect();
    let row = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        loop {
            let r: Vec<f64> = (0..n)
                .map(|_| if rng.gen_bool(0.6) { rng.gen_range(-3..=3) as f64 } else { 0.0 })
                .collect();
            if r.iter().any(|&v| v != 0.0) {
                return r;
            }
        }
    };
    let eq: Vec<Vec<f64>> = (0..m1).map(|_| row(&mut rng)).collect();
    let ineq: Vec<Vec<f64>> = (0..m2).map(|_| row(&mut rng)).collect();
    let dot = |r: &[f64]| r.iter().zip(&x0).map(|(a, b)| a * b).sum::<f64>();
    let b_eq = eq.iter().map(|r| dot(r)).collect();
    let b_ineq = ineq
        .iter()
        .map(|r| dot(r) - rng.gen_range(0..=2) as f64 * 0.5)
        .collect();
    let c = (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect();
    let dense = |rows: &[Vec<f64>]| {
        if rows.is_empty() {
            Ok(SparseMatrix::zeros(0, n))
        } else {
            SparseMatrix::from_dense(rows)
        }
    };
    LpProblem::new(dense(&eq)?, dense(&ineq)?, b_eq, b_ineq, c, lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn translation_keeps_the_known_point_optimal() {
        let (p, w) = generate_known_solution_lp(4, 3, 3, 12, 0.5).unwrap();
        let (q, v) = translate_lp(&p, &w, 100.0).unwrap();
        let r = crate::driver::kkt_residual(&q, &v).unwrap();
        assert!(r.residual_vector_norm <= 1e-9, "{r:?}");
        let value = |p: &LpProblem, x: &[f64]| crate::problem::primal_objective(p, x);
        assert!((value(&p, &w.x) - value(&q, &v.x)).abs() <= 1e-9);
    }
    use crate::driver::kkt_residual;

    /// Counts rows by enumerating index tuples directly.
    fn enumerate_counts(n: usize, dedup: bool) -> (usize, usize) {
        let mut rows = 2 * n * n * n;
        for p in 0..n * n {
            for s in 0..n * n {
                if !dedup || p < s {
                    rows += 1;
                }
            }
        }
        rows += 2 * n;
        (rows, n * n + n * n * n * n)
    }

    #[test]
    fn qap_counts_for_n2() {
        let q = QapInstance::random(2, 0, 5);
        let p = generate_qap_lp(&q, true).unwrap();
        assert_eq!(p.n(), 20);
        assert_eq!(p.m1(), 26);
        assert_eq!(p.m2(), 0);
    }

    #[test]
    fn qap_counts_match_enumeration() {
        for n in 2..=4 {
            for dedup in [true, false] {
                let p = generate_qap_lp(&QapInstance::random(n, 1, 3), dedup).unwrap();
                assert_eq!((p.m(), p.n()), enumerate_counts(n, dedup));
                assert_eq!(qap_lp_dimensions(n, dedup), enumerate_counts(n, dedup));
            }
        }
    }

    #[test]
    fn qap_rejects_tiny_and_huge() {
        assert!(generate_qap_lp(&QapInstance::random(1, 0, 1), true).is_err());
        assert!(matches!(
            generate_qap_lp(&QapInstance::random(60, 0, 1), true),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn qap_objective_coefficients() {
        let q = QapInstance::new(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![vec![0.0, 2.0], vec![2.0, 0.0]],
        )
        .unwrap();
        let p = generate_qap_lp(&q, true).unwrap();
        let si = |i: usize, j: usize, k: usize, l: usize| 4 + ((i * 2 + j) * 2 + k) * 2 + l;
        // s_{0,0,1,1} = flow[0][1] * dist[0][1]
        assert_eq!(p.c[si(0, 0, 1, 1)], 2.0);
        assert_eq!(q.permutation_cost(&[0, 1]), 4.0);
    }

    #[test]
    fn known_solution_one_dimensional() {
        let (p, pt) = generate_known_solution_lp(1, 1, 0, 1, 1.0).unwrap();
        assert_eq!((p.m1(), p.m2(), p.n()), (1, 0, 1));
        let a = p.a_eq.get(0, 0);
        assert_ne!(a, 0.0);
        assert_eq!(p.b_eq[0], a * pt.x[0]);
        assert_eq!(p.c[0], a * pt.y[0] + pt.z[0]);
    }

    #[test]
    fn known_solution_satisfies_kkt_exactly() {
        for seed in 0..30 {
            let (p, pt) = generate_known_solution_lp(seed, 4, 6, 20, 0.3).unwrap();
            let r = kkt_residual(&p, &pt).unwrap();
            assert!(r.primal_infeas_abs <= 1e-12, "{r:?}");
            assert!(r.dual_infeas_abs <= 1e-12, "{r:?}");
            assert!(r.gap_abs <= 1e-12, "{r:?}");
            assert!(r.residual_vector_norm <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn known_solution_is_deterministic_and_rejects_bad_args() {
        let a = generate_known_solution_lp(9, 2, 2, 5, 0.5).unwrap();
        let b = generate_known_solution_lp(9, 2, 2, 5, 0.5).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert!(generate_known_solution_lp(0, 5, 0, 4, 0.5).is_err());
        assert!(generate_known_solution_lp(0, 1, 0, 4, 0.0).is_err());
    }
}
