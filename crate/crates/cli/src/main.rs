//! Command-line front end: solve MPS files, run benchmark batches, generate instances and run
//! the verification checks.
//!
//! Exit codes: 0 optimal (or check passed), 1 usage, I/O or parse error, 2 iteration or time
//! limit, 3 numerical error, 4 verification check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hprlp::bench::{bench, BenchConfig};
use hprlp::driver::TerminationSpace;
use hprlp::exact::{halpern_padmm_trace, hpr_no_prox_trace, max_trace_gap, DenseCholesky};
use hprlp::generate::{generate_boxed_lp, generate_known_solution_lp, generate_qap_lp, QapInstance};
use hprlp::mps::{read_mps_file, write_mps};
use hprlp::scaling::{ScaledProblem, ScalingConfig};
use hprlp::verification::{check_complexity_bound, qap_brute_force, vertex_enumeration_solve};
use hprlp::{solve, Error, LpProblem, SolveStatus, SolverConfig, Variant};

const EXIT_USAGE: u8 = 1;
const EXIT_LIMIT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "hprlp", version, about = "Restarted Halpern Peaceman-Rachford LP solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one MPS file.
    Solve(SolveArgs),
    /// Solve every .mps file in a directory and write per-run CSV plus a summary.
    Bench(BenchArgs),
    /// Write the LP relaxation of a quadratic assignment problem as MPS.
    GenQap(GenQapArgs),
    /// Write a random LP with a known optimal primal-dual pair.
    GenKnown(GenKnownArgs),
    /// Compare the proximal-free HPR and Halpern pADMM traces on an equality-form LP.
    #[command(alias = "verify-appendix")]
    VerifyEquivalence(VerifyEquivalenceArgs),
    /// Check the iteration-complexity bounds against a vertex-enumeration optimum.
    VerifyBounds(VerifyBoundsArgs),
}

#[derive(Args)]
struct SolverOpts {
    /// Relative KKT tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iter: usize,
    /// One of hpr, hdr, hdr-fixed, dr.
    #[arg(long, default_value = "hpr")]
    variant: Variant,
    /// Iterations between convergence and restart checks.
    #[arg(long, default_value_t = 150)]
    check_interval: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma0: f64,
    /// Skip Ruiz, Pock-Chambolle and b/c normalization.
    #[arg(long)]
    no_scaling: bool,
    /// Evaluate termination in the original or the scaled problem.
    #[arg(long, default_value = "original")]
    termination_space: TerminationSpace,
}

impl SolverOpts {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            tolerance: self.tol,
            time_limit_seconds: self.time_limit,
            max_iterations: self.max_iter,
            check_interval: self.check_interval,
            sigma0: self.sigma0,
            variant: self.variant,
            scaling: if self.no_scaling {
                ScalingConfig::none()
            } else {
                ScalingConfig::default()
            },
            termination_space: self.termination_space,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// Write the full report as JSON to this path, or to standard output when no path is given.
    #[arg(long, num_args = 0..=1, default_missing_value = "-")]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// Comma-separated variants; overrides --variant.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<Variant>,
    /// Comma-separated tolerances; overrides --tol.
    #[arg(long, value_delimiter = ',')]
    tolerances: Vec<f64>,
    #[arg(long, default_value = "bench.csv")]
    csv: PathBuf,
    #[arg(long, default_value = "bench_summary.json")]
    summary: PathBuf,
}

#[derive(Args)]
struct GenQapArgs {
    /// Size of a random symmetric instance, or the expected size of the matrix files.
    #[arg(long, required_unless_present = "flow")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 9)]
    max_entry: u32,
    /// Flow matrix file: one whitespace-separated row per line.
    #[arg(long, requires = "dist")]
    flow: Option<PathBuf>,
    /// Distance matrix file in the same format.
    #[arg(long, requires = "flow")]
    dist: Option<PathBuf>,
    /// Keep both copies of symmetric product constraints.
    #[arg(long)]
    no_dedup: bool,
    /// Also print the brute-force optimum (N ≤ 9).
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenKnownArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    m1: usize,
    #[arg(long, default_value_t = 5)]
    m2: usize,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long)]
    out: PathBuf,
    /// Write the known optimal point as JSON.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyEquivalenceArgs {
    /// Equality-form MPS file; a random instance is generated when omitted.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Largest accepted relative gap between the traces.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct VerifyBoundsArgs {
    /// Small MPS file (at most 12 rows and columns); a random boxed LP is generated when omitted.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    m1: usize,
    #[arg(long, default_value_t = 2)]
    m2: usize,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Relative slack allowed on each bound ratio.
    #[arg(long, default_value_t = 1e-9)]
    slack: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(command: Command) -> hprlp::Result<ExitCode> {
    match command {
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::GenQap(args) => run_gen_qap(args),
        Command::GenKnown(args) => run_gen_known(args),
        Command::VerifyEquivalence(args) => run_verify_equivalence(args),
        Command::VerifyBounds(args) => run_verify_bounds(args),
    }
}

fn status_code(status: SolveStatus) -> ExitCode {
    match status {
        SolveStatus::Optimal => ExitCode::SUCCESS,
        SolveStatus::IterationLimit | SolveStatus::TimeLimit => ExitCode::from(EXIT_LIMIT),
        SolveStatus::NumericalError => ExitCode::from(EXIT_NUMERICAL),
    }
}

fn check_code(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn load(path: &Path) -> hprlp::Result<LpProblem> {
    read_mps_file(path).map_err(|e| match e {
        Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })
}

fn run_solve(args: SolveArgs) -> hprlp::Result<ExitCode> {
    let problem = load(&args.file)?;
    let report = solve(&problem, &args.solver.config())?;
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&report)?;
        if path.as_os_str() == "-" {
            println!("{text}");
        } else {
            std::fs::write(path, text)?;
        }
    }
    if args.json.as_ref().is_none_or(|p| p.as_os_str() != "-") {
        let r = &report.residual;
        println!("status      {:?}", report.status);
        println!("objective   {:.12e}", report.primal_objective);
        println!("dual bound  {:.12e}", report.dual_objective);
        println!("iterations  {} ({} restarts)", report.iterations, report.restarts);
        println!(
            "residuals   primal {:.3e}  dual {:.3e}  gap {:.3e}",
            r.primal_infeas_rel, r.dual_infeas_rel, r.gap_rel
        );
        println!("time        {:.3} s", report.timings.solve);
        if let Some(msg) = &report.message {
            println!("message     {msg}");
        }
    }
    Ok(status_code(report.status))
}

fn run_bench(args: BenchArgs) -> hprlp::Result<ExitCode> {
    let cfg = BenchConfig {
        variants: if args.variants.is_empty() {
            vec![args.solver.variant]
        } else {
            args.variants.clone()
        },
        tolerances: if args.tolerances.is_empty() {
            vec![args.solver.tol]
        } else {
            args.tolerances.clone()
        },
        solver: args.solver.config(),
        ..BenchConfig::default()
    };
    let run = bench(&args.dir, &cfg)?;
    run.write_csv(&args.csv)?;
    std::fs::write(&args.summary, serde_json::to_string_pretty(&run.summary_json())?)?;
    for s in &run.summary {
        println!(
            "{:<10} tol {:.0e}  solved {}/{}  SGM10 {:.4} s  median iterations {}",
            s.variant, s.tolerance, s.solved, s.total, s.sgm10, s.median_iterations
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn read_matrix(path: &Path) -> hprlp::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::InvalidProblem(format!(
                            "{}:{}: '{tok}' is not a number",
                            path.display(),
                            i + 1
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn run_gen_qap(args: GenQapArgs) -> hprlp::Result<ExitCode> {
    let q = match (&args.flow, &args.dist, args.n) {
        (Some(f), Some(d), n) => {
            let q = QapInstance::new(read_matrix(f)?, read_matrix(d)?)?;
            if n.is_some_and(|n| n != q.n) {
                return Err(Error::Dimension(format!("--n {} but the matrices are {}x{}", n.unwrap(), q.n, q.n)));
            }
            q
        }
        (_, _, Some(n)) => QapInstance::random(n, args.seed, args.max_entry),
        _ => return Err(Error::InvalidConfig("need --n or --flow with --dist".into())),
    };
    let lp = generate_qap_lp(&q, !args.no_dedup)?;
    std::fs::write(&args.out, write_mps(&lp))?;
    println!(
        "wrote {}: {} rows, {} columns, {} nonzeros",
        args.out.display(),
        lp.m(),
        lp.n(),
        lp.nnz()
    );
    if args.brute_force {
        if q.n > 9 {
            return Err(Error::TooLarge(format!("brute force over {}! permutations", q.n)));
        }
        let (value, perm) = qap_brute_force(&q);
        println!("brute-force optimum {value} at {perm:?}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_gen_known(args: GenKnownArgs) -> hprlp::Result<ExitCode> {
    let (lp, point) = generate_known_solution_lp(args.seed, args.m1, args.m2, args.n, args.density)?;
    std::fs::write(&args.out, write_mps(&lp))?;
    println!(
        "wrote {}: objective {:.12e}",
        args.out.display(),
        lp.reported_objective(hprlp::problem::primal_objective(&lp, &point.x))
    );
    if let Some(path) = &args.solution {
        std::fs::write(path, serde_json::to_string_pretty(&point)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify_equivalence(args: VerifyEquivalenceArgs) -> hprlp::Result<ExitCode> {
    let lp: LpProblem = match &args.file {
        Some(path) => load(path)?,
        None => generate_known_solution_lp(args.seed, args.m, 0, args.n, 0.6)?.0,
    };
    let sp = ScaledProblem::unscaled(&lp);
    let chol = DenseCholesky::factor_aat(&sp.a)?;
    let (y0, x0) = (vec![0.0; lp.m()], vec![0.0; lp.n()]);
    let hpr = hpr_no_prox_trace(&sp, &chol, args.sigma, &y0, &x0, args.iters)?;
    let padmm = halpern_padmm_trace(&sp, &chol, args.sigma, &y0, &x0, args.iters)?;
    let gap = max_trace_gap(&hpr, &padmm);
    let passed = gap <= args.tol;
    println!(
        "{} max trace gap {gap:.3e} over {} iterations (tolerance {:.1e})",
        if passed { "PASS" } else { "FAIL" },
        args.iters,
        args.tol
    );
    Ok(check_code(passed))
}

fn run_verify_bounds(args: VerifyBoundsArgs) -> hprlp::Result<ExitCode> {
    let lp = match &args.file {
        Some(path) => load(path)?,
        None => generate_boxed_lp(args.seed, args.m1, args.m2, args.n)?,
    };
    let oracle = vertex_enumeration_solve(&lp)?;
    let report = check_complexity_bound(&lp, &oracle, args.iters, args.sigma)?;
    let passed = report.bounds_hold(args.slack);
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "{} merit ratio {:.6} (k={}), KKT ratio {:.6} (k={})",
        if passed { "PASS" } else { "FAIL" },
        report.max_merit_ratio,
        report.argmax_merit_ratio,
        report.max_kkt_ratio,
        report.argmax_kkt_ratio
    );
    Ok(check_code(passed))
}
