//! The linear response `L`, the nonlinear terms `A_{m,n}` and `B`, the
//! contraction map `Γ`, Picard iteration and post-solve verification.

mod config;
mod linear;
mod nonlinear;
mod picard;

pub use config::{AuditOutcome, SolverConfig};
pub use linear::{apply_l, solve_one_plus_l, ResponseKernel};
pub use nonlinear::{apply_a, apply_b, apply_b_series, gamma_map, series_pairs, GammaMap, GammaValue, REALNESS_TOLERANCE};
pub use picard::{
    picard_solve, postsolve_verify, ChainCheck, Iterate, SolutionRecord, SolveSummary, VerificationReport,
    PLATEAU_TOLERANCE, RESIDUAL_TARGET,
};
