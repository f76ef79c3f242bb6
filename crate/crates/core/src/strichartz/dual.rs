use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::quad::{gl_panel, log_log_fit};
use crate::real::{japanese, sphere_area, Real};

use super::reduced::{radial_moment, StrichartzParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum XiBox {
    /// Centred ball `|ξ| ≤ radius`.
    Ball { radius: f64 },
    /// Axis-aligned box `∏ [lo_i, hi_i]`.
    Rect { lo: Vec<f64>, hi: Vec<f64> },
}

/// `Ṽ = amplitude · 1_{[tau.0, tau.1]}(τ) · 1_{xi}(ξ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxProfile {
    pub tau: (f64, f64),
    pub xi: XiBox,
    pub amplitude: f64,
}

impl BoxProfile {
    fn xi_volume(&self, d: usize) -> f64 {
        match &self.xi {
            XiBox::Ball { radius } => sphere_area(d - 1) * radius.powi(d as i32) / d as f64,
            XiBox::Rect { lo, hi } => lo.iter().zip(hi).map(|(a, b)| b - a).product(),
        }
    }

    /// `‖Ṽ‖²_{L²_τ L²_ξ}`.
    pub fn l2_norm_sq(&self, d: usize) -> f64 {
        self.amplitude * self.amplitude * (self.tau.1 - self.tau.0) * self.xi_volume(d)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualValue {
    /// Squared left side of the dual inequality.
    pub lhs_sq: f64,
    pub v_norm_sq: f64,
}

/// Quadrature orders for [`dual_lhs`]: GL nodes per ξ direction and per `η₁` panel.
#[derive(Debug, Clone, Copy)]
pub struct DualQuadrature {
    pub xi_nodes: usize,
    pub eta_nodes: usize,
}

impl Default for DualQuadrature {
    fn default() -> Self {
        Self { xi_nodes: 16, eta_nodes: 10 }
    }
}

/// Agreement demanded between the base rule and a refined one.
pub const DUAL_TOLERANCE: f64 = 1e-4;

/// Squared dual left side for a box profile.
///
/// With `ξ = r·e₁` the constraint `τ = |ξ|² − 2ξ·η` fixes `η₁ = (r²−τ)/(2r)`, so
/// the τ-integral becomes an `η₁`-integral over `[(r²−τ₊)/(2r), (r²−τ₋)/(2r)]`
/// with Jacobian `2r`. The transverse `η'` integral is radial.
pub fn dual_lhs<T: Real>(profile: &BoxProfile, params: &StrichartzParams, quad: DualQuadrature) -> Result<DualValue> {
    let d = params.d;
    if !(1..=3).contains(&d) {
        return param("dual evaluator supports d ∈ {1, 2, 3}");
    }
    if let XiBox::Rect { lo, hi } = &profile.xi {
        if lo.len() != d || hi.len() != d {
            return Err(Error::Structural { expected: d, found: lo.len().max(hi.len()) });
        }
    }
    if !(profile.tau.1 >= profile.tau.0) {
        return param("empty τ-interval");
    }
    let v_norm_sq = profile.l2_norm_sq(d);
    if profile.amplitude == 0.0 {
        return Ok(DualValue { lhs_sq: 0.0, v_norm_sq });
    }
    let base = unit_lhs::<T>(profile, params, quad);
    let fine = unit_lhs::<T>(
        profile,
        params,
        DualQuadrature { xi_nodes: quad.xi_nodes + quad.xi_nodes / 2, eta_nodes: quad.eta_nodes + 4 },
    );
    if !base.is_finite() || (base - fine).abs() > DUAL_TOLERANCE * fine.abs() {
        return Err(Error::Numerical(format!("dual quadrature unconverged: {base:e} vs {fine:e}")));
    }
    Ok(DualValue { lhs_sq: profile.amplitude * profile.amplitude * fine, v_norm_sq })
}

/// The amplitude-free integral `∫ r^{2α̃} ⟨r⟩^{2α₀} ∫ K(η₁, η₁−r) dη₁ dξ`.
fn unit_lhs<T: Real>(profile: &BoxProfile, p: &StrichartzParams, q: DualQuadrature) -> f64 {
    let xi_pts: Vec<(f64, f64)> = match &profile.xi {
        XiBox::Ball { radius } => {
            // r = R u² clusters nodes at the origin, where r^{2α̃-1} may be singular
            let shell = if p.d == 1 { 2.0 } else { sphere_area(p.d - 1) };
            gl_panel(0.0, 1.0, q.xi_nodes)
                .into_iter()
                .map(|(u, w)| {
                    let r = radius * u * u;
                    (r, w * shell * r.powi(p.d as i32 - 1) * 2.0 * radius * u)
                })
                .collect()
        }
        XiBox::Rect { lo, hi } => {
            let axes: Vec<Vec<(f64, f64)>> = lo.iter().zip(hi).map(|(&a, &b)| gl_panel(a, b, q.xi_nodes)).collect();
            let mut pts = vec![(0.0, 1.0)];
            for axis in &axes {
                pts = pts.iter().flat_map(|&(s, w)| axis.iter().map(move |&(x, v)| (s + x * x, w * v))).collect();
            }
            pts.into_iter().map(|(s, w)| (s.sqrt(), w)).collect()
        }
    };
    let (t0, t1) = profile.tau;
    xi_pts
        .par_iter()
        .map(|&(r, w)| {
            if r <= 0.0 || w == 0.0 {
                return 0.0;
            }
            let a_lo = (r * r - t1) / (2.0 * r);
            let a_hi = (r * r - t0) / (2.0 * r);
            let inner = scale_panels(a_lo, a_hi)
                .windows(2)
                .flat_map(|s| gl_panel(T::lit(s[0]), T::lit(s[1]), q.eta_nodes))
                .fold(T::zero(), |acc, (a, v)| acc + v * transverse(p, a, a - T::lit(r)));
            let x = T::lit(r);
            let weight = x.powf(T::lit(2.0 * p.alpha_tilde)) * japanese(x).powf(T::lit(2.0 * p.alpha0));
            w * (weight * inner).to_f()
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// `∫_{R^{d-1}} ⟨(a, η')⟩^{-2α₁} ⟨(b, η')⟩^{-2α₂} dη'`.
fn transverse<T: Real>(p: &StrichartzParams, a: T, b: T) -> T {
    let ca = T::one() + a * a;
    let cb = T::one() + b * b;
    if p.d == 1 {
        return T::one() / (ca.powf(T::lit(p.alpha1)) * cb.powf(T::lit(p.alpha2)));
    }
    T::lit(sphere_area(p.d - 2)) * radial_moment(p.d - 2, ca, p.alpha1, cb, p.alpha2)
}

/// Breakpoints for an integrand varying on unit scale near the origin and
/// algebraically beyond: 0, ±1, ±2, ±4, … clipped to `[lo, hi]`.
fn scale_panels(lo: f64, hi: f64) -> Vec<f64> {
    let mut b = vec![lo];
    let mut marks = vec![0.0];
    let mut s = 1.0;
    while s < lo.abs().max(hi.abs()) {
        marks.push(s);
        marks.push(-s);
        s *= 2.0;
    }
    marks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.extend(marks.into_iter().filter(|&m| m > lo && m < hi));
    b.push(hi);
    b
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub n: Vec<usize>,
    pub value: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
    pub predicted: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

pub const SLOPE_REL_TOL: f64 = 0.15;
pub const SLOPE_ABS_TOL: f64 = 0.05;
pub const MIN_R2: f64 = 0.9;

fn slope_report(n: &[usize], value: Vec<f64>, predicted: f64, mut flags: Vec<String>) -> SlopeReport {
    let x: Vec<f64> = n.iter().map(|&v| v as f64).collect();
    let (slope, _, r2) = log_log_fit(&x, &value);
    let pass = if predicted.abs() > SLOPE_ABS_TOL {
        (slope - predicted).abs() <= SLOPE_REL_TOL * predicted.abs()
    } else {
        (slope - predicted).abs() <= SLOPE_ABS_TOL
    };
    if r2 < MIN_R2 {
        flags.push(format!("unreliable fit: R² = {r2:.3}"));
    }
    SlopeReport { n: n.to_vec(), value, slope, r2, predicted, pass, flags }
}

fn check_family(n_list: &[usize]) -> Result<()> {
    if n_list.len() < 3 {
        return param("slope fits need at least three n values");
    }
    if n_list.contains(&0) {
        return param("family index must be positive");
    }
    Ok(())
}

/// Input orders used by the low-frequency family. Only `α̃` matters for the
/// rate; the pre-asymptotic `O(n⁻²)` correction grows with `α₁, α₂`, so they sit
/// ½ above the admissibility threshold `α₁+α₂ > (d-1)/2`.
pub fn lowfreq_params(d: usize, alpha_tilde: f64) -> StrichartzParams {
    let a = (d as f64 - 1.0) / 4.0 + 0.25;
    StrichartzParams::new(d, alpha_tilde, 0.0, a, a)
}

/// `Ṽ_n = n^{(d+2)/2} 1_{[-1/n², 1/n²]}(τ) 1_{B(0,1/n)}(ξ)`.
pub fn lowfreq_profile(d: usize, n: usize) -> BoxProfile {
    let nf = n as f64;
    BoxProfile { tau: (-1.0 / (nf * nf), 1.0 / (nf * nf)), xi: XiBox::Ball { radius: 1.0 / nf }, amplitude: nf.powf((d as f64 + 2.0) / 2.0) }
}

/// Slope of the squared dual side along the low-frequency family (predicted `1 − 2α̃`).
pub fn probe_lowfreq<T: Real>(d: usize, alpha_tilde: f64, n_list: &[usize]) -> Result<SlopeReport> {
    check_family(n_list)?;
    let params = lowfreq_params(d, alpha_tilde);
    let vals = n_list
        .iter()
        .map(|&n| dual_lhs::<T>(&lowfreq_profile(d, n), &params, DualQuadrature::default()))
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<f64> = vals.iter().map(|v| v.v_norm_sq).collect();
    let mut flags = Vec::new();
    let spread = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / norms.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 1.01 {
        flags.push(format!("‖Ṽ_n‖² varies by a factor {spread:.4}"));
    }
    Ok(slope_report(n_list, vals.iter().map(|v| v.lhs_sq).collect(), 1.0 - 2.0 * alpha_tilde, flags))
}

/// `Ṽ_n = 1_{[±n²-½, ±n²+½]}(τ) 1_{[n-½,n+½]×[-½,½]^{d-1}}(ξ)`; the sign is `-` when `α₁ < α₂`.
pub fn highfreq_profile(params: &StrichartzParams, n: usize) -> BoxProfile {
    let nf = n as f64;
    let c = if params.alpha1 >= params.alpha2 { nf * nf } else { -nf * nf };
    let mut lo = vec![-0.5; params.d];
    let mut hi = vec![0.5; params.d];
    lo[0] = nf - 0.5;
    hi[0] = nf + 0.5;
    BoxProfile { tau: (c - 0.5, c + 0.5), xi: XiBox::Rect { lo, hi }, amplitude: 1.0 }
}

/// Growth exponent of the squared dual side along the high-frequency family.
pub fn highfreq_prediction(params: &StrichartzParams) -> (f64, bool) {
    let (big, small) = (params.big(), params.small());
    let c = (params.d as f64 - 1.0) / 2.0;
    if (big - c).abs() < 1e-12 {
        (2.0 * params.alpha0 - 2.0 * small, true)
    } else if big < c {
        (2.0 * params.alpha0 - 2.0 * (params.alpha1 + params.alpha2) + params.d as f64 - 1.0, false)
    } else {
        (2.0 * params.alpha0 - 2.0 * small, false)
    }
}

pub fn probe_highfreq<T: Real>(params: &StrichartzParams, n_list: &[usize]) -> Result<SlopeReport> {
    check_family(n_list)?;
    let vals = n_list
        .iter()
        .map(|&n| dual_lhs::<T>(&highfreq_profile(params, n), params, DualQuadrature { xi_nodes: 8, eta_nodes: 10 }))
        .collect::<Result<Vec<_>>>()?;
    let (predicted, log_branch) = highfreq_prediction(params);
    let mut flags = Vec::new();
    if log_branch {
        flags.push("borderline order: positive log n correction expected".into());
    }
    Ok(slope_report(n_list, vals.iter().map(|v| v.lhs_sq).collect(), predicted, flags))
}
