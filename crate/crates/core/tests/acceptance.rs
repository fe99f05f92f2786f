//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the run fails if the
//! set of failing criteria differs from `KNOWN_RED`.

use std::time::{Duration, Instant};

use hprlp::bench::{ablation_suite, bench_problems, BenchConfig};
use hprlp::driver::{
    check_restart, sigma_from_deltas, sigma_update, RestartTrigger, SigmaGuard, SolverConfig,
};
use hprlp::exact::{halpern_padmm_trace, hpr_no_prox_trace, max_trace_gap, DenseCholesky};
use hprlp::generate::{
    generate_boxed_lp, generate_known_solution_lp, generate_qap_lp, QapInstance,
};
use hprlp::hpr::{Iterate, SemiProximal};
use hprlp::scaling::ScaledProblem;
use hprlp::verification::{check_complexity_bound, qap_brute_force, vertex_enumeration_solve};
use hprlp::{solve, LpProblem, SolveStatus, SparseMatrix, Variant};

/// Criteria that fail for documented reasons (see the README).
const KNOWN_RED: &[usize] = &[6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, secs: f64) -> bool {
    elapsed.as_secs_f64() < secs
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

fn tiny_lps() -> Vec<LpProblem> {
    (0..24u64)
        .map(|seed| {
            let m1 = 1 + (seed % 3) as usize;
            let m2 = 1 + (seed % 4) as usize;
            let n = 4 + (seed % 7) as usize;
            generate_boxed_lp(1000 + seed, m1, m2, n).unwrap()
        })
        .collect()
}

/// 20 instances from 20 to 200 columns; the largest carry about 5000 nonzeros.
fn known_suite() -> Vec<LpProblem> {
    (0..20u64)
        .map(|i| {
            let n = 20 + 180 * i as usize / 19;
            let (m1, m2) = (n / 8, n / 8);
            let density = (5000.0 / ((m1 + m2) as f64 * n as f64)).min(0.5);
            generate_known_solution_lp(100 + i, m1, m2, n, density).unwrap().0
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default().with_tolerance(1e-8);
    let mut worst_obj = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut failures = Vec::new();
    let lps = tiny_lps();
    for (i, p) in lps.iter().enumerate() {
        assert!(p.n() <= 12 && p.m() <= 12);
        let oracle = vertex_enumeration_solve(p).unwrap();
        let report = solve(p, &cfg).unwrap();
        let obj_gap = rel(report.primal_objective, oracle.value);
        let kkt = report.original_residual.max_relative();
        worst_obj = worst_obj.max(obj_gap);
        worst_kkt = worst_kkt.max(kkt);
        if report.status != SolveStatus::Optimal || obj_gap > 1e-6 || kkt > 1e-8 {
            failures.push(i);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 5.0),
        format!(
            "{} tiny LPs, worst objective gap {worst_obj:.1e}, worst KKT {worst_kkt:.1e}, failures {failures:?}, {:.2}s",
            lps.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn run_known_suite() -> Vec<serde_json::Value> {
    let suite = known_suite();
    let mut reports = Vec::new();
    for tol in [1e-4, 1e-6, 1e-8] {
        let cfg = SolverConfig::default().with_tolerance(tol);
        for p in &suite {
            reports.push(solve(p, &cfg).unwrap().deterministic_json());
        }
    }
    reports
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let suite = known_suite();
    let max_nnz = suite.iter().map(LpProblem::nnz).max().unwrap();
    let mut failures = Vec::new();
    for tol in [1e-4, 1e-6, 1e-8] {
        let cfg = SolverConfig::default().with_tolerance(tol);
        for (i, p) in suite.iter().enumerate() {
            let r = solve(p, &cfg).unwrap();
            if r.status != SolveStatus::Optimal || r.original_residual.max_relative() > tol {
                failures.push((i, tol));
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures.is_empty() && within(elapsed, 60.0),
        format!(
            "{} instances x 3 tolerances, n up to {}, nnz up to {max_nnz}, failures {failures:?}, {:.2}s",
            suite.len(),
            suite.iter().map(LpProblem::n).max().unwrap(),
            elapsed.as_secs_f64()
        ),
    )
}

fn complexity_runs() -> Vec<hprlp::verification::ComplexityReport> {
    let mut reports = Vec::new();
    for seed in 0..6u64 {
        let p = generate_boxed_lp(2000 + seed, 2, 3, 7).unwrap();
        let oracle = vertex_enumeration_solve(&p).unwrap();
        for sigma in [0.5, 1.0, 2.0] {
            reports.push(check_complexity_bound(&p, &oracle, 1000, sigma).unwrap());
        }
    }
    reports
}

fn criterion_3(runs: &[hprlp::verification::ComplexityReport]) -> Outcome {
    let worst = runs.iter().map(|r| r.max_merit_ratio).fold(0.0, f64::max);
    outcome(
        worst <= 1.0 + 1e-6,
        format!("{} runs of 1000 iterations, max merit ratio {worst:.6}", runs.len()),
    )
}

fn criterion_4(runs: &[hprlp::verification::ComplexityReport]) -> Outcome {
    let worst = runs.iter().map(|r| r.max_kkt_ratio).fold(0.0, f64::max);
    outcome(
        worst <= 1.0 + 1e-6,
        format!("{} runs of 1000 iterations, max KKT-bound ratio {worst:.6}", runs.len()),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut count = 0;
    for seed in 0..10u64 {
        let m = 2 + (seed % 4) as usize;
        let n = 2 * m + 2 + (seed % 3) as usize;
        let (p, _) = generate_known_solution_lp(3000 + seed, m, 0, n, 0.6).unwrap();
        let sp = ScaledProblem::unscaled(&p);
        let chol = DenseCholesky::factor_aat(&sp.a).unwrap();
        let (y0, x0) = (vec![0.0; m], vec![0.0; n]);
        for sigma in [0.1, 1.0, 10.0] {
            let a = hpr_no_prox_trace(&sp, &chol, sigma, &y0, &x0, 50).unwrap();
            let b = halpern_padmm_trace(&sp, &chol, sigma, &y0, &x0, 50).unwrap();
            worst = worst.max(max_trace_gap(&a, &b));
            count += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && within(elapsed, 5.0),
        format!(
            "{count} trace pairs of 50 iterations, max gap {worst:.1e}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let suite = ablation_suite().unwrap();
    let cfg = BenchConfig {
        variants: vec![Variant::Dr, Variant::HdrFixed, Variant::Hdr, Variant::Hpr],
        tolerances: vec![1e-8],
        ..BenchConfig::default()
    };
    let run = bench_problems(&suite, &cfg).unwrap();
    let get = |v| run.summary_for(v, 1e-8).unwrap();
    let (dr, fixed, hdr, hpr) = (get(Variant::Dr), get(Variant::HdrFixed), get(Variant::Hdr), get(Variant::Hpr));
    let medians_ordered = hpr.median_iterations <= hdr.median_iterations
        && hdr.median_iterations <= fixed.median_iterations
        && fixed.median_iterations <= dr.median_iterations;
    let sgm_smallest = [dr, fixed, hdr].iter().all(|s| hpr.sgm10 < s.sgm10);
    outcome(
        medians_ordered && sgm_smallest,
        format!(
            "median iterations hpr {} hdr {} hdr-fixed {} dr {} (ordered: {medians_ordered}); \
             SGM10 hpr {:.4} hdr {:.4} hdr-fixed {:.4} dr {:.4} (hpr smallest: {sgm_smallest})",
            hpr.median_iterations,
            hdr.median_iterations,
            fixed.median_iterations,
            dr.median_iterations,
            hpr.sgm10,
            hdr.sgm10,
            fixed.sgm10,
            dr.sgm10
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut checks = Vec::new();
    // Pass-through on the linearized path: λ = 4, ‖ȳ − y⁰‖ = 1, Δx = 2 gives 2/(2·1).
    let p = LpProblem::new(
        SparseMatrix::from_dense(&[vec![1.0, 0.0]]).unwrap(),
        SparseMatrix::zeros(0, 2),
        vec![0.0],
        vec![],
        vec![0.0, 0.0],
        vec![f64::NEG_INFINITY; 2],
        vec![f64::INFINITY; 2],
    )
    .unwrap();
    let sp = ScaledProblem::unscaled(&p);
    let anchor = Iterate::zeros(1, 2);
    let bar = Iterate {
        y: vec![1.0],
        x: vec![2.0, 0.0],
    };
    let lin = SemiProximal::Linearized { lambda: 4.0 };
    let u = sigma_update(&bar, &anchor, &lin, &sp, 1e-3, 1e-3);
    checks.push(u.sigma == 1.0 && u.guard == SigmaGuard::Passed);
    let u = sigma_from_deltas(6.0, 1.0, 1e-2, 1e-3);
    checks.push(u.sigma == 6.0 && u.guard == SigmaGuard::Passed);
    // Exact path: Δx = 3, ‖Aᵀ(ȳ − y⁰)‖ = 1.5 gives 2.
    let p1 = LpProblem::new(
        SparseMatrix::from_dense(&[vec![1.5]]).unwrap(),
        SparseMatrix::zeros(0, 1),
        vec![0.0],
        vec![],
        vec![0.0],
        vec![f64::NEG_INFINITY],
        vec![f64::INFINITY],
    )
    .unwrap();
    let sp1 = ScaledProblem::unscaled(&p1);
    let exact = SemiProximal::Exact(DenseCholesky::factor_aat(&sp1.a).unwrap());
    let bar1 = Iterate {
        y: vec![1.0],
        x: vec![3.0],
    };
    let u = sigma_update(&bar1, &Iterate::zeros(1, 1), &exact, &sp1, 1e-3, 1e-3);
    checks.push(u.sigma == 2.0 && u.guard == SigmaGuard::Passed);
    // Range guard at both thresholds.
    for (dx, dy) in [(1e-20, 1.0), (1.0, 1e-16), (1e12, 1.0), (1.0, 5e12)] {
        let u = sigma_from_deltas(dx, dy, 1e-3, 1e-3);
        checks.push(u.sigma == 1.0 && u.guard == SigmaGuard::DeltaRange);
    }
    // Ratio guard at both thresholds.
    for (ep, ed) in [(1.0, 1e-8), (1e-9, 1.0), (1.0, 1e8)] {
        let u = sigma_from_deltas(3.0, 1.0, ep, ed);
        checks.push(u.sigma == 1.0 && u.guard == SigmaGuard::InfeasibilityRatio);
    }
    let u = sigma_from_deltas(3.0, 1.0, 1.0, 1.1e-8);
    checks.push(u.sigma == 3.0 && u.guard == SigmaGuard::Passed);
    let passed = checks.iter().filter(|&&c| c).count();
    outcome(
        passed == checks.len(),
        format!("{passed}/{} σ-update fixtures", checks.len()),
    )
}

fn criterion_8() -> Outcome {
    let cfg = SolverConfig::default();
    assert_eq!((cfg.alpha1, cfg.alpha2, cfg.alpha3), (0.2, 0.6, 0.2));
    let cases = [
        // (now, first, prev, t, k, expected)
        (1.9, 10.0, 5.0, 10, 1000, RestartTrigger::Sufficient),
        (2.0, 10.0, 5.0, 10, 1000, RestartTrigger::Sufficient),
        (5.0, 10.0, 4.0, 10, 1000, RestartTrigger::Stalled),
        (5.0, 10.0, 6.0, 10, 1000, RestartTrigger::None),
        (7.0, 10.0, 4.0, 10, 1000, RestartTrigger::None),
        (7.0, 10.0, 4.0, 200, 1000, RestartTrigger::LongLoop),
        (7.0, 10.0, 4.0, 199, 1000, RestartTrigger::None),
        // Priority: sufficient decay wins over a long loop, stalling wins over a long loop.
        (1.0, 10.0, 0.5, 500, 1000, RestartTrigger::Sufficient),
        (5.0, 10.0, 4.0, 500, 1000, RestartTrigger::Stalled),
    ];
    let mut bad = Vec::new();
    for (i, &(now, first, prev, t, k, want)) in cases.iter().enumerate() {
        if check_restart(now, first, prev, t, k, &cfg) != want {
            bad.push(i);
        }
    }
    outcome(
        bad.is_empty(),
        format!("{}/{} restart fixtures, mismatches {bad:?}", cases.len() - bad.len(), cases.len()),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for seed in 0..3u64 {
        let q = QapInstance::random(3, seed, 9);
        let lp = generate_qap_lp(&q, true).unwrap();
        let report = solve(&lp, &SolverConfig::default().with_tolerance(1e-6)).unwrap();
        let (brute, _) = qap_brute_force(&q);
        let bound_holds = report.primal_objective <= brute + 1e-6 * (1.0 + brute.abs());
        ok &= report.status == SolveStatus::Optimal && bound_holds;
        details.push(format!("LP {:.4} vs best {brute}", report.primal_objective));
    }
    let elapsed = start.elapsed();
    outcome(
        ok && within(elapsed, 30.0),
        format!("N=3: {}, {:.2}s", details.join(", "), elapsed.as_secs_f64()),
    )
}

fn criterion_10() -> Outcome {
    let first = run_known_suite();
    let second = run_known_suite();
    let same = first == second;
    outcome(same, format!("{} reports compared", first.len()))
}

#[test]
fn acceptance_criteria() {
    let complexity = complexity_runs();
    let results = [
        (1, "oracle agreement", criterion_1()),
        (2, "known-solution convergence", criterion_2()),
        (3, "fixed-point residual bound", criterion_3(&complexity)),
        (4, "KKT residual bound", criterion_4(&complexity)),
        (5, "HPR / Halpern pADMM equivalence", criterion_5()),
        (6, "ablation trend", criterion_6()),
        (7, "sigma update guards", criterion_7()),
        (8, "restart criteria", criterion_8()),
        (9, "QAP relaxation bound", criterion_9()),
        (10, "determinism", criterion_10()),
    ];
    let mut failing = Vec::new();
    for (id, name, o) in &results {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_RED.contains(id) { " (known)" } else { "" };
        println!("criterion {id:>2} {tag}{note} {name}: {}", o.detail);
        if !o.passed {
            failing.push(*id);
        }
    }
    assert_eq!(failing, KNOWN_RED, "failing criteria changed");
}
