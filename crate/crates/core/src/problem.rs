//! Standard-form LP data model:
//!
//! ```text
//! min  ⟨c, x⟩ + const   s.t.  A₁x = b₁,  A₂x ≥ b₂,  l ≤ x ≤ u
//! ```
//!
//! with dual variables `y = (y₁, y₂) ∈ D = ℝ^{m₁} × ℝ^{m₂}₊` and reduced costs `z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{dot, SparseMatrix};

/// Optional name tables, used only for reporting and MPS output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NameTable {
    pub problem: String,
    /// One name per stacked row (equalities first).
    pub rows: Vec<String>,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub a_eq: SparseMatrix,
    pub a_ineq: SparseMatrix,
    pub b_eq: Vec<f64>,
    pub b_ineq: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective_constant: f64,
    /// The source model maximized; `c` and the constant are already negated and reported
    /// objectives are flipped back.
    pub maximize: bool,
    pub names: Option<NameTable>,
}

impl LpProblem {
    /// Validates and assembles a problem. Inequality rows must already be in `≥` form.
    pub fn new(
        a_eq: SparseMatrix,
        a_ineq: SparseMatrix,
        b_eq: Vec<f64>,
        b_ineq: Vec<f64>,
        c: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            a_eq,
            a_ineq,
            b_eq,
            b_ineq,
            c,
            lower,
            upper,
            objective_constant: 0.0,
            maximize: false,
            names: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_objective_constant(mut self, constant: f64) -> Self {
        self.objective_constant = constant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.a_eq.ncols() != n || self.a_ineq.ncols() != n {
            return Err(Error::Dimension(format!(
                "constraint blocks have {} and {} columns, c has length {n}",
                self.a_eq.ncols(),
                self.a_ineq.ncols()
            )));
        }
        if self.a_eq.nrows() != self.b_eq.len() || self.a_ineq.nrows() != self.b_ineq.len() {
            return Err(Error::Dimension("row counts and right-hand sides disagree".into()));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Dimension("bound vectors must have length n".into()));
        }
        if self.m() == 0 {
            return Err(Error::InvalidProblem("problem has no constraint rows".into()));
        }
        if self.a_eq.is_zero() && self.a_ineq.is_zero() {
            return Err(Error::InvalidProblem("constraint matrix is zero".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.c) || !finite(&self.b_eq) || !finite(&self.b_ineq) {
            return Err(Error::InvalidProblem("non-finite objective or right-hand side".into()));
        }
        if !self.objective_constant.is_finite() {
            return Err(Error::InvalidProblem("non-finite objective constant".into()));
        }
        for (j, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidProblem(format!(
                    "invalid bounds [{l}, {u}] on column {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m1(&self) -> usize {
        self.b_eq.len()
    }

    pub fn m2(&self) -> usize {
        self.b_ineq.len()
    }

    pub fn m(&self) -> usize {
        self.m1() + self.m2()
    }

    pub fn nnz(&self) -> usize {
        self.a_eq.nnz() + self.a_ineq.nnz()
    }

    /// `A = [A₁; A₂]`.
    pub fn stacked_matrix(&self) -> SparseMatrix {
        SparseMatrix::vstack(&self.a_eq, &self.a_ineq).expect("column counts validated")
    }

    /// `b = [b₁; b₂]`.
    pub fn stacked_rhs(&self) -> Vec<f64> {
        let mut b = self.b_eq.clone();
        b.extend_from_slice(&self.b_ineq);
        b
    }

    /// Maps an internal (minimization) objective value to the user's sense.
    pub fn reported_objective(&self, internal: f64) -> f64 {
        if self.maximize {
            -internal
        } else {
            internal
        }
    }
}

/// Dense point `(y, z, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimalDualPoint {
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            y: vec![0.0; m],
            z: vec![0.0; n],
            x: vec![0.0; n],
        }
    }

    pub fn check_dims(&self, p: &LpProblem) -> Result<()> {
        if self.y.len() != p.m() || self.z.len() != p.n() || self.x.len() != p.n() {
            return Err(Error::Dimension(format!(
                "point has (|y|,|z|,|x|) = ({}, {}, {}), problem needs ({}, {}, {})",
                self.y.len(),
                self.z.len(),
                self.x.len(),
                p.m(),
                p.n(),
                p.n()
            )));
        }
        Ok(())
    }
}

/// Componentwise clamp of `v` into `[lower, upper]`.
pub fn project_onto_box(v: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
    if v.len() != lower.len() || v.len() != upper.len() {
        return Err(Error::Dimension(format!(
            "box projection of length {} onto bounds of length {}/{}",
            v.len(),
            lower.len(),
            upper.len()
        )));
    }
    Ok(v.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&vi, (&l, &u))| vi.max(l).min(u))
        .collect())
}

/// Projection onto `D`: the first `m1` entries are free, the rest are clipped at zero.
pub fn project_onto_dual_cone(v: &[f64], m1: usize) -> Result<Vec<f64>> {
    if m1 > v.len() {
        return Err(Error::Dimension(format!(
            "equality count {m1} exceeds vector length {}",
            v.len()
        )));
    }
    Ok(v.iter()
        .enumerate()
        .map(|(i, &vi)| if i < m1 { vi } else { vi.max(0.0) })
        .collect())
}

pub fn primal_objective(p: &LpProblem, x: &[f64]) -> f64 {
    dot(&p.c, x) + p.objective_constant
}

/// Value of `−δ_C*(−z) = Σ_{z>0} l·z + Σ_{z<0} u·z`, plus the number of components
/// whose relevant bound was infinite and were counted as `z = 0`.
pub fn bound_support_term(z: &[f64], lower: &[f64], upper: &[f64]) -> (f64, usize) {
    let mut value = 0.0;
    let mut clamped = 0;
    for ((&zi, &l), &u) in z.iter().zip(lower).zip(upper) {
        if zi > 0.0 {
            if l.is_finite() {
                value += l * zi;
            } else {
                clamped += 1;
            }
        } else if zi < 0.0 {
            if u.is_finite() {
                value += u * zi;
            } else {
                clamped += 1;
            }
        }
    }
    (value, clamped)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualObjective {
    pub value: f64,
    pub clamped: usize,
}

/// `⟨b, y⟩ − δ_C*(−z) + const`, with infinite-bound components treated as zero.
pub fn dual_objective(p: &LpProblem, y: &[f64], z: &[f64]) -> DualObjective {
    let by = dot(&p.b_eq, &y[..p.m1()]) + dot(&p.b_ineq, &y[p.m1()..]);
    let (support, clamped) = bound_support_term(z, &p.lower, &p.upper);
    DualObjective {
        value: by + support + p.objective_constant,
        clamped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    fn one_dim(m1: usize) -> LpProblem {
        let a = SparseMatrix::from_dense(&[vec![1.0]]).unwrap();
        let (a_eq, a_ineq, b_eq, b_ineq) = if m1 == 1 {
            (a, SparseMatrix::zeros(0, 1), vec![1.0], vec![])
        } else {
            (SparseMatrix::zeros(0, 1), a, vec![], vec![1.0])
        };
        LpProblem::new(a_eq, a_ineq, b_eq, b_ineq, vec![1.0], vec![0.0], vec![INF]).unwrap()
    }

    #[test]
    fn box_projection_examples() {
        assert_eq!(
            project_onto_box(&[2.0, -2.0], &[0.0, 0.0], &[1.0, INF]).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            project_onto_box(&[0.3, 5.0], &[0.0, -INF], &[1.0, INF]).unwrap(),
            vec![0.3, 5.0]
        );
        assert_eq!(project_onto_box(&[0.5], &[0.5], &[0.5]).unwrap(), vec![0.5]);
        assert!(project_onto_box(&[1.0], &[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn dual_cone_projection_examples() {
        assert_eq!(project_onto_dual_cone(&[-3.0, -3.0], 1).unwrap(), vec![-3.0, 0.0]);
        assert_eq!(project_onto_dual_cone(&[-1.0, 2.0], 2).unwrap(), vec![-1.0, 2.0]);
        assert_eq!(project_onto_dual_cone(&[-1.0, 2.0], 0).unwrap(), vec![0.0, 2.0]);
        assert!(project_onto_dual_cone(&[1.0], 2).is_err());
    }

    #[test]
    fn primal_objective_examples() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0]]).unwrap();
        let mut p = LpProblem::new(
            a,
            SparseMatrix::zeros(0, 2),
            vec![1.0],
            vec![],
            vec![1.0, 2.0],
            vec![0.0; 2],
            vec![INF; 2],
        )
        .unwrap();
        assert_eq!(primal_objective(&p, &[1.0, 0.0]), 1.0);
        p.objective_constant = 3.0;
        assert_eq!(primal_objective(&p, &[0.0, 0.0]), 3.0);
        p.c = vec![1.0, 1.0];
        assert_eq!(primal_objective(&p, &[0.5, 0.5]), 4.0);
    }

    #[test]
    fn dual_objective_examples() {
        let p = one_dim(1);
        assert_eq!(dual_objective(&p, &[1.0], &[0.0]).value, 1.0);
        let d = dual_objective(&p, &[0.0], &[2.0]);
        assert_eq!((d.value, d.clamped), (0.0, 0));

        let mut free = one_dim(1);
        free.b_eq = vec![5.0];
        free.lower = vec![-INF];
        let d = dual_objective(&free, &[1.0], &[1.0]);
        assert_eq!((d.value, d.clamped), (5.0, 1));
    }

    #[test]
    fn validation_rejects_bad_models() {
        let a = SparseMatrix::from_dense(&[vec![1.0]]).unwrap();
        let bad_bounds = LpProblem::new(
            a.clone(),
            SparseMatrix::zeros(0, 1),
            vec![1.0],
            vec![],
            vec![1.0],
            vec![2.0],
            vec![1.0],
        );
        assert!(matches!(bad_bounds, Err(Error::InvalidProblem(_))));
        let zero = LpProblem::new(
            SparseMatrix::zeros(1, 1),
            SparseMatrix::zeros(0, 1),
            vec![1.0],
            vec![],
            vec![1.0],
            vec![0.0],
            vec![1.0],
        );
        assert!(matches!(zero, Err(Error::InvalidProblem(_))));
        let nan = LpProblem::new(
            a,
            SparseMatrix::zeros(0, 1),
            vec![1.0],
            vec![],
            vec![1.0],
            vec![f64::NAN],
            vec![1.0],
        );
        assert!(nan.is_err());
    }

    #[test]
    fn strong_duality_at_a_constructed_kkt_point() {
        for seed in 0..10 {
            let (p, pt) = crate::generate::generate_known_solution_lp(seed, 2, 3, 6, 0.6).unwrap();
            let primal = primal_objective(&p, &pt.x);
            let dual = dual_objective(&p, &pt.y, &pt.z);
            assert_eq!(dual.clamped, 0);
            assert!((primal - dual.value).abs() <= 1e-12 * (1.0 + primal.abs()), "seed {seed}");
        }
    }

    fn bounds_strategy(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        proptest::collection::vec((-5.0f64..5.0, 0.0f64..4.0, 0u8..4), n).prop_map(|cells| {
            cells
                .into_iter()
                .map(|(l, w, kind)| match kind {
                    0 => (l, l + w),
                    1 => (l, INF),
                    2 => (-INF, l + w),
                    _ => (-INF, INF),
                })
                .unzip()
        })
    }

    proptest! {
        #[test]
        fn box_projection_is_idempotent(
            (v, (l, u)) in (1usize..10).prop_flat_map(|n| (proptest::collection::vec(-10.0f64..10.0, n), bounds_strategy(n)))
        ) {
            let once = project_onto_box(&v, &l, &u).unwrap();
            let twice = project_onto_box(&once, &l, &u).unwrap();
            prop_assert_eq!(&once, &twice);
            for ((x, lo), hi) in once.iter().zip(&l).zip(&u) {
                prop_assert!(lo <= x && x <= hi);
            }
        }

        #[test]
        fn dual_cone_projection_is_a_projection(v in proptest::collection::vec(-10.0f64..10.0, 0..10), m1_frac in 0.0f64..1.0) {
            let m1 = ((v.len() as f64) * m1_frac) as usize;
            let once = project_onto_dual_cone(&v, m1).unwrap();
            prop_assert!(once[m1..].iter().all(|&t| t >= 0.0));
            prop_assert_eq!(&once[..m1], &v[..m1]);
            prop_assert_eq!(project_onto_dual_cone(&once, m1).unwrap(), once);
        }
    }
}
