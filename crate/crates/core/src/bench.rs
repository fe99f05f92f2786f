//! Batch runs over instance sets with per-run CSV rows and an SGM10 summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::driver::{solve, SolveStatus, SolverConfig};
use crate::error::{Error, Result};
use crate::generate::{generate_known_solution_lp, translate_lp};
use crate::hpr::Variant;
use crate::mps::read_mps_file;
use crate::problem::LpProblem;

pub const BENCH_SCHEMA_VERSION: u32 = 1;

/// Shifted geometric mean `(Π(tᵢ + Δ))^{1/n} − Δ`, evaluated in log space. Unsolved runs and
/// runs longer than `limit` count as `limit`.
pub fn sgm10(times: &[f64], limit: f64, solved: &[bool], shift: f64) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::InvalidConfig("shifted geometric mean of an empty list".into()));
    }
    if times.len() != solved.len() {
        return Err(Error::Dimension(format!(
            "{} times but {} solved flags",
            times.len(),
            solved.len()
        )));
    }
    let mean_log = times
        .iter()
        .zip(solved)
        .map(|(&t, &ok)| {
            let t = if ok { t.min(limit) } else { limit };
            (t + shift).ln()
        })
        .sum::<f64>()
        / times.len() as f64;
    Ok(mean_log.exp() - shift)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub solver: SolverConfig,
    pub variants: Vec<Variant>,
    pub tolerances: Vec<f64>,
    pub shift: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            variants: vec![Variant::Hpr],
            tolerances: vec![1e-4, 1e-6, 1e-8],
            shift: 10.0,
        }
    }
}

/// One (instance, variant, tolerance) run. Columns of the CSV output, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub variant: String,
    pub tolerance: f64,
    pub status: String,
    pub iterations: usize,
    pub restarts: usize,
    /// Power method, iterations and checks; excludes parsing and scaling.
    pub solve_seconds: f64,
    pub primal_infeas_rel: f64,
    pub dual_infeas_rel: f64,
    pub gap_rel: f64,
    pub primal_objective: f64,
    pub error: String,
}

impl BenchRow {
    pub fn solved(&self) -> bool {
        self.status == "Optimal"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub variant: String,
    pub tolerance: f64,
    pub sgm10: f64,
    pub solved: usize,
    pub total: usize,
    pub median_iterations: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRun {
    pub schema_version: u32,
    pub instances: Vec<String>,
    pub time_limit_seconds: f64,
    pub shift: f64,
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummary>,
}

impl BenchRun {
    pub fn summary_for(&self, variant: Variant, tolerance: f64) -> Option<&BenchSummary> {
        self.summary
            .iter()
            .find(|s| s.variant == variant.name() && s.tolerance == tolerance)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary JSON without the per-run rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": self.schema_version,
            "instances": self.instances,
            "time_limit_seconds": self.time_limit_seconds,
            "shift": self.shift,
            "summary": self.summary,
        })
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// `.mps` files directly inside `dir`, sorted by name.
pub fn list_instances(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("mps")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .mps files in {}",
            dir.as_ref().display()
        )));
    }
    Ok(paths)
}

/// Parses and solves every `.mps` file in `dir`. Parse failures are recorded as rows.
pub fn bench(dir: impl AsRef<Path>, cfg: &BenchConfig) -> Result<BenchRun> {
    let loaded: Vec<(String, Result<LpProblem>)> = list_instances(dir)?
        .into_iter()
        .map(|p| {
            let name = p.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
            (name, read_mps_file(&p))
        })
        .collect();
    run_batch(&loaded, cfg)
}

/// Solves in-memory instances.
pub fn bench_problems(instances: &[(String, LpProblem)], cfg: &BenchConfig) -> Result<BenchRun> {
    let loaded: Vec<(String, Result<LpProblem>)> =
        instances.iter().map(|(n, p)| (n.clone(), Ok(p.clone()))).collect();
    run_batch(&loaded, cfg)
}

/// Seeded desk-scale suite for comparing variants: 20 known-solution LPs with 40 to 135
/// columns whose optimal points are translated by `10^(i mod 5)`, so the distance from the
/// origin start, and with it the best penalty parameter, varies over four orders of magnitude.
pub fn ablation_suite() -> Result<Vec<(String, LpProblem)>> {
    (0..20u64)
        .map(|i| {
            let n = 40 + 5 * i as usize;
            let (p, w) = generate_known_solution_lp(500 + i, n / 5, n / 5, n, 0.2)?;
            let shift = 10f64.powi((i % 5) as i32);
            let (q, _) = translate_lp(&p, &w, shift)?;
            Ok((format!("ablation-{i:02}-n{n}-shift{shift:e}"), q))
        })
        .collect()
}

fn run_batch(instances: &[(String, Result<LpProblem>)], cfg: &BenchConfig) -> Result<BenchRun> {
    if instances.is_empty() {
        return Err(Error::InvalidConfig("no instances to benchmark".into()));
    }
    if cfg.variants.is_empty() || cfg.tolerances.is_empty() {
        return Err(Error::InvalidConfig("need at least one variant and tolerance".into()));
    }
    let limit = cfg.solver.time_limit_seconds;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &tolerance in &cfg.tolerances {
        for &variant in &cfg.variants {
            let solver = SolverConfig {
                tolerance,
                variant,
                ..cfg.solver.clone()
            };
            let start = rows.len();
            for (name, problem) in instances {
                rows.push(run_one(name, problem, &solver));
            }
            let batch: &[BenchRow] = &rows[start..];
            let times: Vec<f64> = batch.iter().map(|r| r.solve_seconds).collect();
            let solved: Vec<bool> = batch.iter().map(BenchRow::solved).collect();
            summary.push(BenchSummary {
                variant: variant.name().to_string(),
                tolerance,
                sgm10: sgm10(&times, limit, &solved, cfg.shift)?,
                solved: solved.iter().filter(|&&s| s).count(),
                total: batch.len(),
                median_iterations: median(batch.iter().map(|r| r.iterations as f64).collect()),
            });
        }
    }
    Ok(BenchRun {
        schema_version: BENCH_SCHEMA_VERSION,
        instances: instances.iter().map(|(n, _)| n.clone()).collect(),
        time_limit_seconds: limit,
        shift: cfg.shift,
        rows,
        summary,
    })
}

fn run_one(name: &str, problem: &Result<LpProblem>, solver: &SolverConfig) -> BenchRow {
    let failed = |status: &str, error| BenchRow {
        instance: name.to_string(),
        variant: solver.variant.name().to_string(),
        tolerance: solver.tolerance,
        status: status.to_string(),
        iterations: 0,
        restarts: 0,
        solve_seconds: solver.time_limit_seconds,
        primal_infeas_rel: f64::NAN,
        dual_infeas_rel: f64::NAN,
        gap_rel: f64::NAN,
        primal_objective: f64::NAN,
        error,
    };
    let p = match problem {
        Ok(p) => p,
        Err(e) => return failed("ParseError", e.to_string()),
    };
    match solve(p, solver) {
        Ok(r) => BenchRow {
            instance: name.to_string(),
            variant: solver.variant.name().to_string(),
            tolerance: solver.tolerance,
            status: format!("{:?}", r.status),
            iterations: r.iterations,
            restarts: r.restarts,
            solve_seconds: r.timings.solve,
            primal_infeas_rel: r.residual.primal_infeas_rel,
            dual_infeas_rel: r.residual.dual_infeas_rel,
            gap_rel: r.residual.gap_rel,
            primal_objective: r.primal_objective,
            error: if r.status == SolveStatus::NumericalError {
                r.message.unwrap_or_default()
            } else {
                String::new()
            },
        },
        Err(e) => failed("SolveError", e.to_string()),
    }
}
