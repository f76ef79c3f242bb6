use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::quad::{gl_panel, linear_fit};
use crate::real::{japanese, sphere_area, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrichartzParams {
    pub d: usize,
    pub alpha_tilde: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl StrichartzParams {
    pub fn new(d: usize, alpha_tilde: f64, alpha0: f64, alpha1: f64, alpha2: f64) -> Self {
        Self { d, alpha_tilde, alpha0, alpha1, alpha2 }
    }

    pub fn big(&self) -> f64 {
        self.alpha1.max(self.alpha2)
    }

    pub fn small(&self) -> f64 {
        self.alpha1.min(self.alpha2)
    }

    fn crit(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }

    fn borderline(&self) -> bool {
        (self.big() - self.crit()).abs() < 1e-12
    }

    /// Supremum of admissible `α₀`; attained except on the borderline branch.
    pub fn alpha0_limit(&self) -> f64 {
        let c = self.crit();
        if self.borderline() {
            self.small()
        } else if self.big() < c {
            self.alpha1 + self.alpha2 - c
        } else {
            self.small()
        }
    }

    /// Violated regime conditions (empty when the estimate is expected to hold).
    pub fn regime_violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.d >= 2 && !(self.alpha1 + self.alpha2 > self.crit()) {
            v.push(format!("α₁+α₂ = {} ≤ (d-1)/2", self.alpha1 + self.alpha2));
        }
        let lim = self.alpha0_limit();
        if self.alpha0 > lim + 1e-12 || (self.borderline() && self.alpha0 >= lim) {
            v.push(format!("α₀ = {} exceeds {}", self.alpha0, self.alpha0_limit()));
        }
        if self.alpha0 < 0.0 || self.alpha1 < 0.0 || self.alpha2 < 0.0 {
            v.push("negative order".into());
        }
        v
    }

    pub fn in_regime(&self) -> bool {
        self.regime_violations().is_empty()
    }

    fn check(&self) -> Result<()> {
        if !(1..=3).contains(&self.d) {
            return param("Strichartz lab supports d ∈ {1, 2, 3}");
        }
        Ok(())
    }
}

/// `∫₀^∞ ρ^m (a+ρ²)^{-p} (b+ρ²)^{-q} dρ` for `a, b > 0`; infinite when the tail diverges.
pub fn radial_moment<T: Real>(m: usize, a: T, p: f64, b: T, q: f64) -> T {
    let tail_exp = 2.0 * (p + q) - m as f64 - 1.0;
    if !(tail_exp > 0.0) {
        return T::lit(f64::INFINITY);
    }
    let (p, q) = (T::lit(p), T::lit(q));
    let f = |r: T| r.powi(m as i32) / ((a + r * r).powf(p) * (b + r * r).powf(q));
    let lo = a.min(b).sqrt();
    let hi = a.max(b).sqrt();
    let mut acc = T::zero();
    for (r, w) in gl_panel(T::zero(), lo, 24) {
        acc += w * f(r);
    }
    // log panels: ρ = e^u, one per factor of two
    let log_panels = |from: T, to: T, acc: &mut T| {
        let (u0, u1) = (from.ln(), to.ln());
        let k = ((u1 - u0) / T::lit(std::f64::consts::LN_2)).ceil().to_f().max(1.0) as usize;
        let h = (u1 - u0) / T::usize(k);
        for j in 0..k {
            for (u, w) in gl_panel(u0 + h * T::usize(j), u0 + h * T::usize(j + 1), 16) {
                let r = u.exp();
                *acc += w * r * f(r);
            }
        }
    };
    if hi > lo {
        log_panels(lo, hi, &mut acc);
    }
    let far = hi * T::lit(1e6);
    log_panels(hi, far, &mut acc);
    acc + far.powf(-T::lit(tail_exp)) / T::lit(tail_exp)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReducedIntegral {
    pub exact: f64,
    /// Ĩ: `|η₁* - |ξ||` replaced by `|ξ|/2` and `η₁*` by 0, without the `½|ξ|^{2α̃-1}` factor.
    pub surrogate: f64,
}

/// The delta-reduced integral at `η₁* = (|ξ|²-τ)/(2|ξ|)`; zero for `τ < 0`, where the
/// constraint `|η| ≤ |ξ-η|` empties the delta's support.
pub fn i_reduced<T: Real>(params: &StrichartzParams, tau: T, xi: T) -> Result<ReducedIntegral> {
    params.check()?;
    if !(xi > T::zero()) {
        return param("reduced integral needs |ξ| > 0");
    }
    let (big, small) = (params.big(), params.small());
    let d = params.d;
    let two = T::lit(2.0);
    let weight = japanese(xi).powf(T::lit(2.0 * params.alpha0));
    let sphere = if d >= 2 { T::lit(sphere_area(d - 2)) } else { T::one() };
    let surrogate = if d == 1 {
        weight / (T::one() + xi * xi / T::lit(4.0)).powf(T::lit(small))
    } else {
        weight * sphere * radial_moment(d - 2, T::one(), big, T::one() + xi * xi / T::lit(4.0), small)
    };
    let exact = if tau < T::zero() {
        T::zero()
    } else {
        let e1 = (xi * xi - tau) / (two * xi);
        let a = T::one() + e1 * e1;
        let b = T::one() + (e1 - xi) * (e1 - xi);
        let pre = xi.powf(T::lit(2.0 * params.alpha_tilde - 1.0)) * weight / two;
        if d == 1 {
            pre / (a.powf(T::lit(big)) * b.powf(T::lit(small)))
        } else {
            pre * sphere * radial_moment(d - 2, a, big, b, small)
        }
    };
    Ok(ReducedIntegral { exact: exact.to_f(), surrogate: surrogate.to_f() })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub low_confidence: bool,
}

/// Importance-sampled `I_{τ,ξ}` with the delta replaced by a Gaussian of width `ε`.
/// `η₁` is drawn from the mollifier itself (so its weight is the constant `1/(2|ξ|)`),
/// `η'` from a heavy-tailed radial law scaled to `⟨η₁*⟩`.
pub fn i_montecarlo<R: Rng>(
    params: &StrichartzParams,
    tau: f64,
    xi: &[f64],
    samples: usize,
    width: f64,
    rng: &mut R,
) -> Result<McEstimate> {
    params.check()?;
    if samples < 10_000 || !(width > 0.0) {
        return param("Monte-Carlo oracle needs at least 10⁴ samples and a positive mollifier width");
    }
    let x = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(x > 0.0) {
        return param("Monte-Carlo oracle needs |ξ| > 0");
    }
    let first = mc_run(params, tau, x, samples, width, rng);
    if first.stderr <= 0.1 * first.value.abs() {
        return Ok(first);
    }
    let mut second = mc_run(params, tau, x, 4 * samples, width, rng);
    second.low_confidence = second.stderr > 0.1 * second.value.abs();
    Ok(second)
}

fn mc_run<R: Rng>(p: &StrichartzParams, tau: f64, x: f64, samples: usize, width: f64, rng: &mut R) -> McEstimate {
    let m = p.d - 1;
    let e1 = (x * x - tau) / (2.0 * x);
    let sigma = width / (2.0 * x);
    let scale = (1.0 + e1 * e1).sqrt();
    let pre = x.powf(2.0 * p.alpha_tilde) * (1.0 + x * x).powf(p.alpha0) / (2.0 * x);
    let (big, small) = (p.big(), p.small());
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        let z: f64 = StandardNormal.sample(rng);
        let eta1 = e1 + sigma * z;
        // η' = scale·ζ with ζ from a Cauchy-type law; `inv_p` = 1/density(η')
        let (rho2, inv_p) = match m {
            0 => (0.0, 1.0),
            1 => {
                let u: f64 = rng.random();
                let t = (std::f64::consts::PI * (u - 0.5)).tan();
                (scale * scale * t * t, std::f64::consts::PI * (1.0 + t * t) * scale)
            }
            _ => {
                let u: f64 = 1.0 - rng.random::<f64>();
                let r2 = 1.0 / (u * u) - 1.0;
                (scale * scale * r2, 2.0 * std::f64::consts::PI * (1.0 + r2).powf(1.5) * scale * scale)
            }
        };
        let v = if eta1 <= x / 2.0 {
            pre * inv_p / ((1.0 + eta1 * eta1 + rho2).powf(big) * (1.0 + (x - eta1) * (x - eta1) + rho2).powf(small))
        } else {
            0.0
        };
        s1 += v;
        s2 += v * v;
    }
    let n = samples as f64;
    let mean = s1 / n;
    let var = (s2 / n - mean * mean).max(0.0);
    McEstimate { value: mean, stderr: (var / (n - 1.0)).sqrt(), samples, low_confidence: false }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfilePoint {
    pub tau: f64,
    pub xi_abs: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundReport {
    pub sup: f64,
    pub argmax: (f64, f64),
    pub profile: Vec<ProfilePoint>,
    pub tail_slope: f64,
    pub tail_window: (f64, f64),
    pub growth: bool,
    pub in_regime: bool,
}

/// Sections `τ = c·|ξ|²` used for the large-frequency profile.
pub const SECTIONS: [f64; 5] = [0.0, 1.0, -1.0, 10.0, -10.0];
/// Window of `|ξ|` over which the tail slope is fitted.
pub const TAIL_WINDOW: (f64, f64) = (1e2, 1e3);
pub const SLOPE_TOLERANCE: f64 = 0.05;

/// Sup of `I` over a grid plus the large-`|ξ|` profile (max over the sections), with the
/// log-log slope of the profile's tail.
pub fn uniform_bound_scan<T: Real>(params: &StrichartzParams, taus: &[f64], xis: &[f64]) -> Result<UniformBoundReport> {
    params.check()?;
    let eval = |t: f64, x: f64| i_reduced(params, T::lit(t), T::lit(x)).map(|r| r.exact);
    let pts: Vec<(f64, f64)> = taus.iter().flat_map(|&t| xis.iter().map(move |&x| (t, x))).collect();
    let vals = pts.par_iter().map(|&(t, x)| eval(t, x)).collect::<Result<Vec<_>>>()?;
    let (mut sup, mut argmax) = (f64::NEG_INFINITY, (f64::NAN, f64::NAN));
    for (&p, &v) in pts.iter().zip(&vals) {
        if v > sup {
            sup = v;
            argmax = p;
        }
    }
    let profile_xi: Vec<f64> = (0..=30).map(|j| 10f64.powf(j as f64 / 10.0)).collect();
    let profile = profile_xi
        .par_iter()
        .map(|&x| {
            let mut best = ProfilePoint { tau: 0.0, xi_abs: x, value: f64::NEG_INFINITY };
            for c in SECTIONS {
                let v = eval(c * x * x, x)?;
                if v > best.value {
                    best = ProfilePoint { tau: c * x * x, xi_abs: x, value: v };
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    for p in &profile {
        if p.value > sup {
            sup = p.value;
            argmax = (p.tau, p.xi_abs);
        }
    }
    let tail: Vec<&ProfilePoint> = profile
        .iter()
        .filter(|p| p.xi_abs >= TAIL_WINDOW.0 * (1.0 - 1e-12) && p.xi_abs <= TAIL_WINDOW.1 * (1.0 + 1e-12))
        .collect();
    let lx: Vec<f64> = tail.iter().map(|p| p.xi_abs.ln()).collect();
    let ly: Vec<f64> = tail.iter().map(|p| p.value.ln()).collect();
    let tail_slope = if tail.iter().all(|p| p.value > 0.0 && p.value.is_finite()) {
        linear_fit(&lx, &ly).0
    } else {
        f64::INFINITY
    };
    Ok(UniformBoundReport {
        sup,
        argmax,
        profile,
        tail_slope,
        tail_window: TAIL_WINDOW,
        growth: !(tail_slope.abs() <= SLOPE_TOLERANCE),
        in_regime: params.in_regime(),
    })
}
