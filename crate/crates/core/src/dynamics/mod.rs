//! Wave-operator series, Q evolution under a time-dependent potential,
//! reconstruction of Q(t) and the scattering diagnostic.

mod evolve;
mod potential;
mod series;

pub use evolve::{evolve_q, reconstruct_q, scattering_diagnostic, CauchyRow, Reconstruction, ScatteringTable};
pub use potential::{convolve, PotentialTrajectory};
pub use series::{
    conjugated_potential, factorial_decay_report, wave_operator, wave_series_term, wave_series_terms, SeriesRow,
    WaveOperator, WaveSeriesReport, DECAY_SLACK, DEFAULT_EPSILON, DEFAULT_MAX_ORDER,
};
pub(crate) use series::{march, Propagation};
