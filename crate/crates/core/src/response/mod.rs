//! Linear-response multiplier `m_f`, its two evaluation routes, and the
//! invertibility / hypothesis audits built on it.

mod audit;
mod gcheck;
mod multiplier;
mod potential;
mod state;

pub use audit::{
    alpha0_for, epsilon_g, hypothesis_audit, invertibility_scan, AuditItem, EpsilonG, HypothesisReport,
    InvertibilityReport, BORDERLINE_MARGIN, DEFAULT_SCHEDULE,
};
pub use gcheck::{bessel_j0, gcheck_point, gcheck_table, GcheckSummary, GcheckTable};
pub use multiplier::{
    im_mf_explicit, m1f, mdf, mf_spectral, mf_timedomain, spectral_normalization, truncation_tail, MultiplierTable,
    TIME_PHASE_SIGN,
};
pub use potential::{Potential, RadialSymbol};
pub use state::{ReferenceState, StateKind, DERIVATIVE_CUTOFF};
pub(crate) use audit::radial_lp;
