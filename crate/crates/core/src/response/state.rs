use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::quad::UniformSpline;
use crate::real::Real;

/// Occupation profile `f` of the reference state `γ_f = f(-Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateKind {
    FermiDirac { beta: f64, mu: f64 },
    ZeroTemperature { mu: f64 },
    /// Samples of `f` on the uniform grid `r_j = j·step`; zero beyond the last sample.
    Tabulated { step: f64, values: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct ReferenceState<T: Real> {
    kind: StateKind,
    table: Option<UniformSpline<T>>,
}

/// Threshold below which `|f'|` is treated as zero when truncating `s`-integrals.
pub const DERIVATIVE_CUTOFF: f64 = 1e-12;

impl<T: Real> ReferenceState<T> {
    pub fn new(kind: StateKind) -> Result<Self> {
        let table = match &kind {
            StateKind::FermiDirac { beta, mu } => {
                if !(*beta > 0.0 && *mu > 0.0) {
                    return param("Fermi–Dirac state needs β > 0 and μ > 0");
                }
                None
            }
            StateKind::ZeroTemperature { mu } => {
                if !(*mu > 0.0) {
                    return param("zero-temperature state needs μ > 0");
                }
                None
            }
            StateKind::Tabulated { step, values } => {
                if !(*step > 0.0) || values.len() < 4 {
                    return param("tabulated occupation needs a positive step and at least four samples");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return param("tabulated occupation must be finite and non-negative");
                }
                let y = values.iter().map(|v| T::lit(*v)).collect();
                Some(UniformSpline::new(T::zero(), T::lit(*step), y))
            }
        };
        Ok(Self { kind, table })
    }

    pub fn fermi_dirac(beta: f64, mu: f64) -> Result<Self> {
        Self::new(StateKind::FermiDirac { beta, mu })
    }

    pub fn zero_temperature(mu: f64) -> Result<Self> {
        Self::new(StateKind::ZeroTemperature { mu })
    }

    /// Tabulate `f` on `[0, r_max]` with `samples` points.
    pub fn tabulate(f: impl Fn(f64) -> f64, r_max: f64, samples: usize) -> Result<Self> {
        let step = r_max / (samples - 1) as f64;
        Self::new(StateKind::Tabulated { step, values: (0..samples).map(|j| f(j as f64 * step)).collect() })
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn f(&self, r: T) -> T {
        match &self.kind {
            StateKind::FermiDirac { beta, mu } => {
                let x = T::lit(*beta) * (r - T::lit(*mu));
                if x > T::zero() {
                    let e = (-x).exp();
                    e / (T::one() + e)
                } else {
                    T::one() / (x.exp() + T::one())
                }
            }
            StateKind::ZeroTemperature { mu } => {
                if r <= T::lit(*mu) {
                    T::one()
                } else {
                    T::zero()
                }
            }
            StateKind::Tabulated { .. } => {
                let s = self.table.as_ref().unwrap();
                if r > s.x_max() || r < T::zero() {
                    T::zero()
                } else {
                    s.eval(r)
                }
            }
        }
    }

    /// `f'(r)`; analytic for Fermi–Dirac, zero (away from the jump) at zero temperature.
    pub fn df(&self, r: T) -> T {
        match &self.kind {
            StateKind::FermiDirac { beta, mu } => {
                let b = T::lit(*beta);
                let x = b * (r - T::lit(*mu));
                let e = (-x.mag()).exp();
                -b * e / ((T::one() + e) * (T::one() + e))
            }
            StateKind::ZeroTemperature { .. } => T::zero(),
            StateKind::Tabulated { .. } => {
                let s = self.table.as_ref().unwrap();
                if r > s.x_max() || r < T::zero() {
                    T::zero()
                } else {
                    s.derivative(r)
                }
            }
        }
    }

    /// Radius beyond which `|f'| < DERIVATIVE_CUTOFF` (and `f` is negligible).
    pub fn s_max(&self) -> T {
        match &self.kind {
            StateKind::FermiDirac { beta, mu } => T::lit(mu + (beta / DERIVATIVE_CUTOFF).ln() / beta),
            StateKind::ZeroTemperature { mu } => T::lit(*mu),
            StateKind::Tabulated { .. } => self.table.as_ref().unwrap().x_max(),
        }
    }

    /// Radius beyond which `f` itself is below double-precision relevance.
    pub fn support_end(&self) -> T {
        match &self.kind {
            StateKind::FermiDirac { beta, mu } => T::lit(mu + 40.0 / beta),
            _ => self.s_max(),
        }
    }

    /// Points where `f` or `f'` changes character (used as quadrature breakpoints).
    pub fn features(&self) -> Vec<T> {
        match &self.kind {
            StateKind::FermiDirac { mu, .. } | StateKind::ZeroTemperature { mu } => vec![T::lit(*mu)],
            StateKind::Tabulated { .. } => vec![],
        }
    }

    /// Length scale over which `f'` varies.
    pub fn width(&self) -> T {
        match &self.kind {
            StateKind::FermiDirac { beta, .. } => T::lit(1.0 / beta),
            StateKind::ZeroTemperature { .. } => T::zero(),
            StateKind::Tabulated { step, values } => T::lit((step * values.len() as f64 / 16.0).max(*step)),
        }
    }

    pub fn is_zero_temperature(&self) -> Option<T> {
        match &self.kind {
            StateKind::ZeroTemperature { mu } => Some(T::lit(*mu)),
            _ => None,
        }
    }
}
