//! Reduced integrals, dual-inequality evaluation and optimality probes for the
//! density Strichartz estimate, plus direct lattice ratio tests.

mod dual;
mod lattice;
mod reduced;

pub use dual::{
    dual_lhs, highfreq_prediction, highfreq_profile, lowfreq_params, lowfreq_profile, probe_highfreq, probe_lowfreq,
    BoxProfile, DualQuadrature, DualValue, SlopeReport, XiBox, DUAL_TOLERANCE, MIN_R2, SLOPE_ABS_TOL, SLOPE_REL_TOL,
};
pub use lattice::{density_strichartz_ratio, smoothing_operator, smoothing_ratio, SmoothingRatio};
pub use reduced::{
    i_montecarlo, i_reduced, radial_moment, uniform_bound_scan, McEstimate, ProfilePoint, ReducedIntegral,
    StrichartzParams, UniformBoundReport, SECTIONS, SLOPE_TOLERANCE, TAIL_WINDOW,
};
