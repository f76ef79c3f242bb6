use serde::{Deserialize, Serialize};

use crate::real::Real;

/// Radial Fourier symbol of one interaction factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialSymbol {
    /// `a·e^{-σ|ξ|²}`
    Gaussian { a: f64, sigma: f64 },
    /// `a·min(|ξ|^{1/2}, 1)·e^{-σ|ξ|²}`
    VanishingOrigin { a: f64, sigma: f64 },
    /// Linear interpolation of samples on `k_j = j·step`; zero beyond the table.
    Tabulated { step: f64, values: Vec<f64> },
}

impl RadialSymbol {
    pub fn zero() -> Self {
        RadialSymbol::Gaussian { a: 0.0, sigma: 1.0 }
    }

    pub fn eval<T: Real>(&self, k: T) -> T {
        match self {
            RadialSymbol::Gaussian { a, sigma } => T::lit(*a) * (-T::lit(*sigma) * k * k).exp(),
            RadialSymbol::VanishingOrigin { a, sigma } => {
                T::lit(*a) * k.sqrt().min(T::one()) * (-T::lit(*sigma) * k * k).exp()
            }
            RadialSymbol::Tabulated { step, values } => {
                let s = k.to_f() / step;
                if !(s >= 0.0) || s >= (values.len() - 1) as f64 {
                    return T::zero();
                }
                let i = s.floor() as usize;
                let t = s - i as f64;
                T::lit(values[i] * (1.0 - t) + values[i + 1] * t)
            }
        }
    }

    /// Radius beyond which the symbol is negligible (< 1e-17 relative).
    pub fn extent(&self) -> f64 {
        match self {
            RadialSymbol::Gaussian { sigma, .. } | RadialSymbol::VanishingOrigin { sigma, .. } => {
                (40.0 / sigma.max(1e-300)).sqrt()
            }
            RadialSymbol::Tabulated { step, values } => step * (values.len() - 1) as f64,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RadialSymbol::Gaussian { a, .. } | RadialSymbol::VanishingOrigin { a, .. } => *a == 0.0,
            RadialSymbol::Tabulated { values, .. } => values.iter().all(|v| *v == 0.0),
        }
    }
}

/// Pair interaction `w = w₁ * w₂`, described by `ŵ₁` and `ŵ₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Potential {
    pub w1: RadialSymbol,
    pub w2: RadialSymbol,
}

impl Potential {
    pub fn zero() -> Self {
        Self { w1: RadialSymbol::zero(), w2: RadialSymbol::zero() }
    }

    pub fn w1_hat<T: Real>(&self, k: T) -> T {
        self.w1.eval(k)
    }

    pub fn w2_hat<T: Real>(&self, k: T) -> T {
        self.w2.eval(k)
    }

    pub fn w_hat<T: Real>(&self, k: T) -> T {
        self.w1.eval(k) * self.w2.eval(k)
    }

    pub fn is_zero(&self) -> bool {
        self.w1.is_zero() || self.w2.is_zero()
    }

    pub fn extent(&self) -> f64 {
        self.w1.extent().min(self.w2.extent())
    }
}
