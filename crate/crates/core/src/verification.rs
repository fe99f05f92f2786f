//! Independent oracles: basis enumeration for tiny LPs, exhaustive QAP search, and an
//! empirical check of the `O(1/k)` bounds of the fixed-σ Halpern iteration.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::driver::kkt_residual;
use crate::error::{Error, Result};
use crate::generate::QapInstance;
use crate::hpr::{compute_merit, iterate_once, Iterate, SemiProximal, SolverState, Variant};
use crate::problem::{bound_support_term, primal_objective, LpProblem, PrimalDualPoint};
use crate::scaling::ScaledProblem;
use crate::sparse::{dot, norm2, power_method_lambda_max, PowerMethodConfig};

/// Upper limit on the number of candidate bases visited by [`vertex_enumeration_solve`].
pub const ENUMERATION_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleSource {
    VertexEnumeration,
    Construction,
    ReferenceSolve,
}

/// A primal-dual optimal triple with its objective value (minimization sense, including the
/// objective constant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub z_star: Vec<f64>,
    pub value: f64,
    pub source: OracleSource,
}

impl OracleSolution {
    pub fn from_point(p: &LpProblem, point: &PrimalDualPoint, source: OracleSource) -> Self {
        Self {
            value: primal_objective(p, &point.x),
            x_star: point.x.clone(),
            y_star: point.y.clone(),
            z_star: point.z.clone(),
            source,
        }
    }

    pub fn point(&self) -> PrimalDualPoint {
        PrimalDualPoint {
            y: self.y_star.clone(),
            z: self.z_star.clone(),
            x: self.x_star.clone(),
        }
    }
}

// One candidate active constraint `gᵀx ≥ h` (or `=` for equality rows).
enum Facet {
    Row(usize),
    Lower(usize),
    Upper(usize),
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Solves a tiny LP by visiting every basis: all equality rows plus `n − m₁` of the inequality
/// rows and finite bound facets. A basis that is both primal and dual feasible is optimal; its
/// multipliers give `y*` and `z*`.
///
/// Requires `n, m ≤ 12` and a feasible region with at least one vertex.
pub fn vertex_enumeration_solve(p: &LpProblem) -> Result<OracleSolution> {
    let (n, m1, m2) = (p.n(), p.m1(), p.m2());
    if n > 12 || p.m() > 12 {
        return Err(Error::TooLarge(format!(
            "basis enumeration is limited to n, m <= 12 (got n={n}, m={})",
            p.m()
        )));
    }
    if m1 > n {
        return Err(Error::Oracle("more equality rows than variables".into()));
    }
    let a = p.stacked_matrix().to_dense();
    let b = p.stacked_rhs();

    let mut facets: Vec<Facet> = (m1..m1 + m2).map(Facet::Row).collect();
    for j in 0..n {
        if p.lower[j].is_finite() {
            facets.push(Facet::Lower(j));
        }
        if p.upper[j].is_finite() {
            facets.push(Facet::Upper(j));
        }
    }
    let pick = n - m1;
    let total = binomial(facets.len() as u64, pick as u64);
    if total > ENUMERATION_BUDGET {
        return Err(Error::TooLarge(format!(
            "{total} candidate bases exceed the budget of {ENUMERATION_BUDGET}"
        )));
    }

    let facet_row = |f: &Facet| -> (Vec<f64>, f64) {
        match *f {
            Facet::Row(i) => (a[i].clone(), b[i]),
            Facet::Lower(j) => {
                let mut g = vec![0.0; n];
                g[j] = 1.0;
                (g, p.lower[j])
            }
            Facet::Upper(j) => {
                let mut g = vec![0.0; n];
                g[j] = -1.0;
                (g, -p.upper[j])
            }
        }
    };
    let scale = 1.0 + b.iter().chain(&p.c).fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-9 * scale;

    let mut any_primal = false;
    let mut combo: Vec<usize> = (0..pick).collect();
    loop {
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut h = DVector::<f64>::zeros(n);
        for i in 0..m1 {
            for j in 0..n {
                g[(i, j)] = a[i][j];
            }
            h[i] = b[i];
        }
        for (r, &fi) in combo.iter().enumerate() {
            let (row, rhs) = facet_row(&facets[fi]);
            for j in 0..n {
                g[(m1 + r, j)] = row[j];
            }
            h[m1 + r] = rhs;
        }
        let lu = g.clone().full_piv_lu();
        let pivots_ok = {
            let u = lu.u();
            let max = (0..n).map(|i| u[(i, i)].abs()).fold(0.0, f64::max);
            n == 0 || (0..n).all(|i| u[(i, i)].abs() > 1e-10 * max.max(1.0))
        };
        if pivots_ok {
            if let Some(x) = lu.solve(&h) {
                let x: Vec<f64> = x.iter().copied().collect();
                if primal_feasible(p, &a, &b, &x, tol) {
                    any_primal = true;
                    let gt_lu = g.transpose().full_piv_lu();
                    if let Some(mult) = gt_lu.solve(&DVector::from_vec(p.c.clone())) {
                        if mult.iter().skip(m1).all(|&v| v >= -tol) {
                            return Ok(assemble(p, &facets, &combo, &mult, x));
                        }
                    }
                }
            }
        }
        if !next_combination(&mut combo, facets.len()) {
            break;
        }
    }
    if any_primal {
        Err(Error::Oracle("no dual-feasible basis: the LP appears unbounded".into()))
    } else {
        Err(Error::Oracle("no feasible vertex: the LP appears infeasible".into()))
    }
}

fn primal_feasible(p: &LpProblem, a: &[Vec<f64>], b: &[f64], x: &[f64], tol: f64) -> bool {
    if x.iter().any(|v| !v.is_finite()) {
        return false;
    }
    for (j, &xj) in x.iter().enumerate() {
        if xj < p.lower[j] - tol || xj > p.upper[j] + tol {
            return false;
        }
    }
    for (i, row) in a.iter().enumerate() {
        let ax = dot(row, x);
        let r = ax - b[i];
        if (i < p.m1() && r.abs() > tol) || (i >= p.m1() && r < -tol) {
            return false;
        }
    }
    true
}

fn assemble(p: &LpProblem, facets: &[Facet], combo: &[usize], mult: &DVector<f64>, x: Vec<f64>) -> OracleSolution {
    let (n, m1) = (p.n(), p.m1());
    let mut y = vec![0.0; p.m()];
    let mut z = vec![0.0; n];
    y[..m1].copy_from_slice(&mult.as_slice()[..m1]);
    for (r, &fi) in combo.iter().enumerate() {
        let v = mult[m1 + r].max(0.0);
        match facets[fi] {
            Facet::Row(i) => y[i] = v,
            Facet::Lower(j) => z[j] += v,
            Facet::Upper(j) => z[j] -= v,
        }
    }
    // Snap x onto active bounds so that x ∈ C exactly.
    let x: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| v.max(p.lower[j]).min(p.upper[j]))
        .collect();
    OracleSolution {
        value: primal_objective(p, &x),
        x_star: x,
        y_star: y,
        z_star: z,
        source: OracleSource::VertexEnumeration,
    }
}

// Advances `combo` to the next k-subset of 0..n in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Best assignment by exhaustive search over all `N!` permutations.
pub fn qap_brute_force(q: &QapInstance) -> (f64, Vec<usize>) {
    let n = q.n;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = (q.permutation_cost(&perm), perm.clone());
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let cost = q.permutation_cost(&perm);
            if cost < best.0 {
                best = (cost, perm.clone());
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Maxima of the normalized bound ratios over a fixed-σ, restart-free HPR run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub iterations: usize,
    pub sigma: f64,
    pub lambda: f64,
    /// `R₀ = ‖w⁰ − w*‖_M`.
    pub r0: f64,
    /// `max_k ‖w^k − ŵ^{k+1}‖_M (k+1) / (2R₀)`.
    pub max_merit_ratio: f64,
    pub argmax_merit_ratio: usize,
    /// `max_k ‖R(w̄^{k+1})‖ (k+1) √σ / ((2σ√λ + 1) R₀)`, using `‖A‖, ‖√T₁‖ ≤ √λ`.
    pub max_kkt_ratio: f64,
    pub argmax_kkt_ratio: usize,
    /// `min_k h_k (k+1) / R₀ + ‖x*‖/√σ`; non-negative when the lower objective bound holds.
    pub objective_lower_slack: f64,
    /// `min_k (3R₀ + ‖x*‖/√σ) − h_k (k+1) / R₀`; non-negative when the upper bound holds.
    pub objective_upper_slack: f64,
    /// The bounds hold at `w*`, the oracle optimum, which need not be the limit of the run.
    pub oracle_substituted_for_limit: bool,
}

impl ComplexityReport {
    pub fn bounds_hold(&self, slack: f64) -> bool {
        self.max_merit_ratio <= 1.0 + slack && self.max_kkt_ratio <= 1.0 + slack
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Runs HPR on the unscaled problem from the origin with fixed σ and no restarts, evaluating
/// both bounds at every iteration against the oracle solution `w_star`.
pub fn check_complexity_bound(
    p: &LpProblem,
    w_star: &OracleSolution,
    iters: usize,
    sigma: f64,
) -> Result<ComplexityReport> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig("sigma must be positive".into()));
    }
    let star = w_star.point();
    star.check_dims(p)?;
    let sp = ScaledProblem::unscaled(p);
    let lambda = power_method_lambda_max(&sp.a, &PowerMethodConfig::default())?.lambda;
    let prox = SemiProximal::Linearized { lambda };
    let (m, n) = (p.m(), p.n());

    let w_star_iter = Iterate {
        y: star.y.clone(),
        x: star.x.clone(),
    };
    let r0 = compute_merit(&Iterate::zeros(m, n), &w_star_iter, sigma, &prox, &sp);
    let kkt_const = (2.0 * sigma * lambda.sqrt() + 1.0) / sigma.sqrt();
    let x_star_term = norm2(&star.x) / sigma.sqrt();
    let star_dual = dot(&sp.b, &star.y) + bound_support_term(&star.z, &sp.lower, &sp.upper).0;

    let mut state = SolverState::new(m, n, sigma, prox, Variant::Hpr);
    let mut report = ComplexityReport {
        iterations: iters,
        sigma,
        lambda,
        r0,
        max_merit_ratio: 0.0,
        argmax_merit_ratio: 0,
        max_kkt_ratio: 0.0,
        argmax_kkt_ratio: 0,
        objective_lower_slack: f64::INFINITY,
        objective_upper_slack: f64::INFINITY,
        oracle_substituted_for_limit: true,
    };
    for k in 0..iters {
        iterate_once(&mut state, &sp)?;
        let kp1 = (k + 1) as f64;
        // ‖w^k − ŵ^{k+1}‖_M = 2‖w^k − w̄^{k+1}‖_M
        let merit = 2.0 * compute_merit(&state.last, &state.bar, sigma, &state.prox, &sp);
        let r1 = ratio(merit * kp1, 2.0 * r0);
        if r1 > report.max_merit_ratio {
            report.max_merit_ratio = r1;
            report.argmax_merit_ratio = k;
        }
        let point = PrimalDualPoint {
            y: state.bar.y.clone(),
            z: state.bar_z(),
            x: state.bar.x.clone(),
        };
        let res = kkt_residual(p, &point)?;
        let r2 = ratio(res.residual_vector_norm * kp1, kkt_const * r0);
        if r2 > report.max_kkt_ratio {
            report.max_kkt_ratio = r2;
            report.argmax_kkt_ratio = k;
        }
        let bar_dual =
            dot(&sp.b, &point.y) + bound_support_term(&point.z, &sp.lower, &sp.upper).0;
        let h = star_dual - bar_dual;
        if r0 > 0.0 {
            let hk = h * kp1 / r0;
            report.objective_lower_slack = report.objective_lower_slack.min(hk + x_star_term);
            report.objective_upper_slack =
                report.objective_upper_slack.min(3.0 * r0 + x_star_term - hk);
        }
    }
    Ok(report)
}
