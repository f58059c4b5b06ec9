//! Certification toolkit for weighted Poincare, Hardy-Poincare and Hardy
//! inequalities on the line and on R^N (radial weights), plus a radial solver
//! for the rescaled doubly nonlinear fast-diffusion equation with entropy
//! decay diagnostics.

pub mod cli;
pub mod criteria;
pub mod fastdiff;
pub mod hardy_construct;
pub mod optimal_search;
pub mod quad;
pub mod weights;

/// Entry point for the `hardy-cert` binary; returns the process exit code.
pub fn run_cli() -> i32 {
    cli::run()
}
