//! Compressed sparse row matrices and the kernels the solver needs per iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-compressed sparse matrix.
///
/// Column indices are strictly increasing within each row and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate entries are summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "non-finite matrix entry at ({i}, {j})"
                )));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut k = 0;
        while k < sorted.len() {
            let (i, j, mut v) = sorted[k];
            k += 1;
            while k < sorted.len() && sorted[k].0 == i && sorted[k].1 == j {
                v += sorted[k].2;
                k += 1;
            }
            if v != 0.0 {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
            }
        }
        for i in 0..nrows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a matrix from a dense row-major slice of rows.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::Dimension("ragged dense matrix".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(nrows, ncols, &triplets)
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates over `(col, value)` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Iterates over all stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            dense[i][j] = v;
        }
        dense
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Stacks `top` over `bottom`; both must have the same column count.
    pub fn vstack(top: &SparseMatrix, bottom: &SparseMatrix) -> Result<SparseMatrix> {
        if top.ncols != bottom.ncols {
            return Err(Error::Dimension(format!(
                "cannot stack {} columns over {} columns",
                top.ncols, bottom.ncols
            )));
        }
        let mut row_offsets = top.row_offsets.clone();
        let base = top.nnz();
        row_offsets.extend(bottom.row_offsets[1..].iter().map(|&o| o + base));
        let mut col_indices = top.col_indices.clone();
        col_indices.extend_from_slice(&bottom.col_indices);
        let mut values = top.values.clone();
        values.extend_from_slice(&bottom.values);
        Ok(SparseMatrix {
            nrows: top.nrows + bottom.nrows,
            ncols: top.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> SparseMatrix {
        let lo = self.row_offsets[start];
        let hi = self.row_offsets[end];
        SparseMatrix {
            nrows: end - start,
            ncols: self.ncols,
            row_offsets: self.row_offsets[start..=end].iter().map(|&o| o - lo).collect(),
            col_indices: self.col_indices[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    /// Replaces every entry `a_ij` by `row[i] * a_ij * col[j]`.
    pub fn scale_rows_cols(&mut self, row: &[f64], col: &[f64]) {
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                self.values[k] *= row[i] * col[self.col_indices[k]];
            }
        }
    }

    /// Multiplies every value of row `i` by `factor`.
    pub fn scale_row(&mut self, i: usize, factor: f64) {
        for k in self.row_offsets[i]..self.row_offsets[i + 1] {
            self.values[k] *= factor;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximum absolute entry per row.
    pub fn row_max_abs(&self) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).fold(0.0f64, |acc, (_, v)| acc.max(v.abs())))
            .collect()
    }

    /// Maximum absolute entry per column.
    pub fn col_max_abs(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.ncols];
        for (&j, &v) in self.col_indices.iter().zip(&self.values) {
            out[j] = out[j].max(v.abs());
        }
        out
    }

    /// Sum of `|a_ij|^p` per row.
    pub fn row_abs_pow_sums(&self, p: f64) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs().powf(p)).sum())
            .collect()
    }

    /// Sum of `|a_ij|^p` per column.
    pub fn col_abs_pow_sums(&self, p: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols];
        for (&j, &v) in self.col_indices.iter().zip(&self.values) {
            out[j] += v.abs().powf(p);
        }
        out
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `out = A v`.
    pub fn spmv_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                acc += self.values[k] * v[self.col_indices[k]];
            }
            *o = acc;
        }
    }

    /// `out = Aᵀ v`, accumulated by a scatter over rows in ascending order.
    pub fn spmv_t_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.nrows);
        debug_assert_eq!(out.len(), self.ncols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                out[self.col_indices[k]] += self.values[k] * vi;
            }
        }
    }
}

/// `A v` with dimension checking.
pub fn spmv(a: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.ncols() {
        return Err(Error::Dimension(format!(
            "spmv: matrix has {} columns, vector has length {}",
            a.ncols(),
            v.len()
        )));
    }
    let mut out = vec![0.0; a.nrows()];
    a.spmv_into(v, &mut out);
    Ok(out)
}

/// `Aᵀ v` with dimension checking.
pub fn spmv_t(a: &SparseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != a.nrows() {
        return Err(Error::Dimension(format!(
            "spmv_t: matrix has {} rows, vector has length {}",
            a.nrows(),
            v.len()
        )));
    }
    let mut out = vec![0.0; a.ncols()];
    a.spmv_t_into(v, &mut out);
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Parameters of the power method for `λ₁(AAᵀ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMethodConfig {
    /// Iteration stops once `‖AAᵀv − θv‖ ≤ tol·θ` for the Rayleigh quotient `θ`.
    pub tol: f64,
    pub max_iters: usize,
    /// Multiplicative safety margin applied to the converged estimate.
    pub inflation: f64,
}

impl Default for PowerMethodConfig {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iters: 5000,
            inflation: 1.0 + 1e-3,
        }
    }
}

/// Result of [`power_method_lambda_max`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMethodResult {
    /// Inflated estimate, the value used as `λ` by the solver.
    pub lambda: f64,
    /// Raw Rayleigh quotient before inflation.
    pub estimate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates the largest eigenvalue of `AAᵀ` by power iteration on `v ← A(Aᵀv)/‖·‖`.
///
/// Runs from two fixed-seed random starts and keeps the larger estimate; `iterations` is the
/// total over both runs.
pub fn power_method_lambda_max(a: &SparseMatrix, cfg: &PowerMethodConfig) -> Result<PowerMethodResult> {
    if a.is_zero() {
        return Err(Error::InvalidProblem(
            "power method needs a non-zero matrix".into(),
        ));
    }
    // The all-ones vector is often an eigenvector of a smaller eigenvalue (balanced rows,
    // assignment constraints), and the iteration then stalls there. A start that happens to lie
    // close to such an eigenvector stops early too, so two independent starts are run.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut result: Option<PowerMethodResult> = None;
    let mut iterations = 0;
    for _ in 0..2 {
        let start: Vec<f64> = (0..a.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let run = run_power_iteration(a, start, cfg);
        iterations += run.iterations;
        if result.as_ref().is_none_or(|best| run.estimate > best.estimate) {
            result = Some(run);
        }
    }
    let result = PowerMethodResult {
        iterations,
        ..result.expect("two runs")
    };
    if !result.converged {
        log::warn!(
            "power method did not converge in {} iterations (estimate {:.6e})",
            cfg.max_iters,
            result.estimate
        );
    }
    Ok(result)
}

fn run_power_iteration(a: &SparseMatrix, mut v: Vec<f64>, cfg: &PowerMethodConfig) -> PowerMethodResult {
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut atv = vec![0.0; a.ncols()];
    let mut aatv = vec![0.0; a.nrows()];
    let mut estimate = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        iterations = it;
        a.spmv_t_into(&v, &mut atv);
        let quotient = dot(&atv, &atv);
        a.spmv_into(&atv, &mut aatv);
        let norm = norm2(&aatv);
        if norm == 0.0 {
            estimate = quotient;
            converged = true;
            break;
        }
        // ‖AAᵀv − θv‖ with θ the Rayleigh quotient of the unit vector v.
        let residual = aatv
            .iter()
            .zip(&v)
            .map(|(w, x)| (w - quotient * x).powi(2))
            .sum::<f64>()
            .sqrt();
        estimate = quotient;
        v.iter_mut().zip(&aatv).for_each(|(x, y)| *x = y / norm);
        if residual <= cfg.tol * quotient {
            converged = true;
            break;
        }
    }
    PowerMethodResult {
        lambda: estimate * cfg.inflation,
        estimate,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_spmv() {
        let a = SparseMatrix::identity(3);
        assert_eq!(spmv(&a, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_products() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert_eq!(spmv(&a, &[1.0, 1.0]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(spmv_t(&a, &[1.0, 1.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(spmv(&a, &[1.0]), Err(Error::Dimension(_))));
        assert!(matches!(spmv_t(&a, &[1.0, 2.0, 3.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn triplets_merge_duplicates_and_drop_zeros() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 2.0), (0, 1, -2.0), (1, 0, 1.0), (1, 0, 0.5)])
            .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(1, 0), 1.5);
        assert_eq!(a.row_offsets()[a.nrows()], a.nnz());
    }

    #[test]
    fn power_method_diagonal() {
        let a = SparseMatrix::from_dense(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let res = power_method_lambda_max(&a, &PowerMethodConfig::default()).unwrap();
        assert!(res.lambda >= 16.0 && res.lambda <= 16.016, "{res:?}");
    }

    #[test]
    fn power_method_single_entry() {
        let a = SparseMatrix::from_triplets(1, 1, &[(0, 0, 5.0)]).unwrap();
        let res = power_method_lambda_max(&a, &PowerMethodConfig::default()).unwrap();
        assert!((res.lambda - 25.0 * 1.001).abs() < 1e-12);
    }

    #[test]
    fn power_method_recovers_from_orthogonal_start() {
        // ones is orthogonal to the dominant eigenvector (1, -1) of AAᵀ here.
        let a = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let res = power_method_lambda_max(&a, &PowerMethodConfig::default()).unwrap();
        assert!(res.lambda >= 2.0, "{res:?}");
    }

    #[test]
    fn power_method_escapes_a_subdominant_ones_eigenvector() {
        // AAᵀ = [[3, -1], [-1, 3]]: ones has eigenvalue 2, the dominant one is 4.
        let a = SparseMatrix::from_dense(&[
            vec![3f64.sqrt(), 0.0],
            vec![-1.0 / 3f64.sqrt(), (8.0f64 / 3.0).sqrt()],
        ])
        .unwrap();
        let res = power_method_lambda_max(&a, &PowerMethodConfig::default()).unwrap();
        assert!(res.lambda >= 4.0 && res.lambda <= 4.01, "{res:?}");
    }

    #[test]
    fn power_method_rejects_zero_matrix() {
        let a = SparseMatrix::zeros(2, 2);
        assert!(power_method_lambda_max(&a, &PowerMethodConfig::default()).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::option::weighted(0.4, -5.0f64..5.0), m * n).prop_map(
                move |cells| {
                    let trip: Vec<_> = cells
                        .iter()
                        .enumerate()
                        .filter_map(|(k, v)| v.map(|v| (k / n, k % n, v)))
                        .collect();
                    SparseMatrix::from_triplets(m, n, &trip).unwrap()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn transpose_swaps_products(a in arb_matrix(), seed in 0u64..1000) {
            let x: Vec<f64> = (0..a.ncols()).map(|j| ((j as u64 + seed) % 7) as f64 - 3.0).collect();
            let y = spmv(&a, &x).unwrap();
            let at = a.transpose();
            let y2 = spmv_t(&at, &x).unwrap();
            for (p, q) in y.iter().zip(&y2) {
                prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
            }
            prop_assert_eq!(at.transpose(), a);
        }

        #[test]
        fn power_method_tracks_the_dense_eigenvalue(a in arb_matrix()) {
            if a.is_zero() {
                prop_assert!(power_method_lambda_max(&a, &PowerMethodConfig::default()).is_err());
                return Ok(());
            }
            let d = a.to_dense();
            let dm = nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| d[i][j]);
            let top = (&dm * dm.transpose()).symmetric_eigen().eigenvalues.max();
            let res = power_method_lambda_max(&a, &PowerMethodConfig::default()).unwrap();
            prop_assert!(res.lambda >= 0.98 * top, "{} vs {}", res.lambda, top);
            prop_assert!(res.lambda <= 1.001 * top * (1.0 + 1e-12), "{} vs {}", res.lambda, top);
        }

        #[test]
        fn spmv_is_bit_deterministic(a in arb_matrix()) {
            let x: Vec<f64> = (0..a.ncols()).map(|j| 0.1 * j as f64 - 0.37).collect();
            let first = spmv(&a, &x).unwrap();
            let second = spmv(&a, &x).unwrap();
            prop_assert_eq!(first.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                            second.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
