//! A restarted, adaptively penalized Halpern Peaceman–Rachford solver for linear programs
//!
//! ```text
//! min ⟨c, x⟩  s.t.  A₁x = b₁,  A₂x ≥ b₂,  l ≤ x ≤ u,
//! ```
//!
//! with MPS ingestion, instance generators, preconditioning, brute-force oracles and a small
//! benchmark harness.

pub mod bench;
pub mod driver;
pub mod error;
pub mod exact;
pub mod generate;
pub mod hpr;
pub mod mps;
pub mod problem;
pub mod scaling;
pub mod sparse;
pub mod verification;

pub use driver::{solve, KktResidual, SolveReport, SolveStatus, SolverConfig};
pub use error::{Error, Result};
pub use hpr::Variant;
pub use problem::{LpProblem, PrimalDualPoint};
pub use sparse::SparseMatrix;
