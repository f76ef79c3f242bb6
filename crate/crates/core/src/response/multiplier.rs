use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gcheck::GcheckTable;
use super::state::{ReferenceState, StateKind};
use crate::error::{param, Error, Result};
use crate::quad::{gl_panel, smooth_panels};
use crate::real::{cis, sphere_area, Real, C};

/// Sign `σ` of the time phase `e^{iστt}` in the time-domain route; pinned by the
/// cross-route test.
pub const TIME_PHASE_SIGN: f64 = -1.0;

/// Scale carried by the spectral route so that it matches the time-domain route,
/// `(2π)^{-d/2}`.
pub fn spectral_normalization(d: usize) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0)
}

/// One-dimensional kernel. Errors on the logarithmic singular set.
pub fn m1f<T: Real>(mu: T, tau: T, xi: T) -> Result<C<T>> {
    if !(xi > T::zero()) || mu < T::zero() {
        return param("m1F needs ξ > 0 and μ ≥ 0");
    }
    let two = T::lit(2.0);
    let a = xi * xi;
    let b = two * xi * mu.sqrt();
    let num = (a + b) * (a + b) - tau * tau;
    let den = (a - b) * (a - b) - tau * tau;
    if num == T::zero() || den == T::zero() {
        let factor = if num == T::zero() { den } else { num };
        return Err(Error::Singularity { context: format!("m1F log argument at μ={mu}, τ={tau}, ξ={xi}"), factor: factor.to_f() });
    }
    let x = T::lit(4.0) * a * b / den;
    let log = if x.mag() < T::lit(0.5) { x.ln_1p() } else { num.mag().ln() - den.mag().ln() };
    let re = log / (two * (T::two_pi()).sqrt() * xi);
    let ind = |v: T| if v.mag() <= b { T::one() } else { T::zero() };
    let im = T::pi().sqrt() / (two * two.sqrt() * xi) * (ind(tau + a) - ind(tau - a));
    Ok(C::new(re, im))
}

/// Radii `r ∈ (0,1)` at which `μ(1-r²)` meets the singular set of `m1F`.
fn radial_breaks<T: Real>(mu: T, tau: T, xi: T) -> Vec<T> {
    let mut br = vec![T::zero(), T::one()];
    for c in singular_levels(tau, xi) {
        if c > T::zero() && c < mu {
            br.push((T::one() - c / mu).sqrt());
        }
    }
    br.sort_by(|a, b| a.partial_cmp(b).unwrap());
    br
}

/// The two levels `c± = (τ±ξ²)²/(4ξ²)` of the singular set in the `μ` variable.
fn singular_levels<T: Real>(tau: T, xi: T) -> [T; 2] {
    let a = xi * xi;
    let four_a = T::lit(4.0) * a;
    [(tau - a) * (tau - a) / four_a, (tau + a) * (tau + a) / four_a]
}

/// `m1F` at a quadrature node: a node that lands on the singular set after
/// rounding is shifted once by a few ulps.
fn m1f_node<T: Real>(mu: T, tau: T, xi: T) -> Result<C<T>> {
    match m1f(mu, tau, xi) {
        Err(Error::Singularity { .. }) => m1f(mu + (mu * T::lit(1e-13)).max(T::lit(1e-300)), tau, xi),
        r => r,
    }
}

/// `d ≥ 2` kernel: `|S^{d-2}| μ^{(d-1)/2} (2π)^{-(d-1)/2} ∫₀¹ m1F(μ(1-r²),τ,ξ) r^{d-2} dr`.
pub fn mdf<T: Real>(d: usize, mu: T, tau: T, xi: T, nodes: usize) -> Result<C<T>> {
    if d < 2 {
        return param("mdF needs d ≥ 2; use m1F for d = 1");
    }
    if nodes < 2 {
        return param("mdF needs at least two nodes per panel");
    }
    if mu <= T::zero() {
        return Ok(C::new(T::zero(), T::zero()));
    }
    let mut acc = C::new(T::zero(), T::zero());
    for (r, w) in smooth_panels(&radial_breaks(mu, tau, xi), nodes) {
        let v = m1f_node(mu * (T::one() - r * r), tau, xi)?;
        acc += v * (w * r.powi(d as i32 - 2));
    }
    let pre = T::lit(sphere_area(d - 2)) * (mu / T::two_pi()).powf(T::lit((d as f64 - 1.0) / 2.0));
    Ok(acc * pre)
}

fn kernel_at<T: Real>(d: usize, s: T, tau: T, xi: T, nodes: usize) -> Result<C<T>> {
    if d == 1 {
        m1f_node(s, tau, xi)
    } else {
        mdf(d, s, tau, xi, nodes)
    }
}

/// Spectral route: `(2π)^{-d/2} · (-∫₀^∞ m_d^F(s,τ,ξ) f'(s) ds)`, truncated where
/// `|f'|` drops below the cutoff.
pub fn mf_spectral<T: Real>(state: &ReferenceState<T>, d: usize, tau: T, xi: T, s_nodes: usize) -> Result<C<T>> {
    if d == 0 {
        return param("dimension must be positive");
    }
    let norm = T::lit(spectral_normalization(d));
    if let Some(mu) = state.is_zero_temperature() {
        let v = if d == 1 { m1f(mu, tau, xi)? } else { mdf(d, mu, tau, xi, s_nodes)? };
        return Ok(v * norm);
    }
    let s_max = state.s_max();
    let mut breaks = vec![T::zero(), s_max];
    for c in singular_levels(tau, xi).into_iter().chain(state.features()) {
        if c > T::zero() && c < s_max {
            breaks.push(c);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let breaks = refine(&breaks, T::lit(2.0) * state.width());
    let mut acc = C::new(T::zero(), T::zero());
    for (s, w) in smooth_panels(&breaks, s_nodes) {
        let fp = state.df(s);
        if fp != T::zero() {
            acc -= kernel_at(d, s, tau, xi, s_nodes)? * (w * fp);
        }
    }
    Ok(acc * norm)
}

/// Insert breakpoints so that no panel exceeds `max_len` (when positive).
fn refine<T: Real>(breaks: &[T], max_len: T) -> Vec<T> {
    if !(max_len > T::zero()) {
        return breaks.to_vec();
    }
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let k = (len / max_len).ceil().to_f().max(1.0) as usize;
        for j in 1..=k {
            out.push(w[0] + len * T::usize(j) / T::usize(k));
        }
    }
    out
}

/// Size of `∫₀^∞ |f'|` beyond the truncation point (reported as a warning when large).
pub fn truncation_tail<T: Real>(state: &ReferenceState<T>) -> f64 {
    match state.kind() {
        StateKind::ZeroTemperature { .. } => 0.0,
        _ => state.f(state.s_max()).to_f(),
    }
}

/// Time-domain route: `∫₀^{T_cut} e^{iστt} 2 sin(t|ξ|²) ǧ(2t|ξ|) dt` with `σ = TIME_PHASE_SIGN`.
/// `t_nodes` is the Gauss–Legendre order per panel; panels are sized to the fastest
/// phase and to the ǧ table spacing.
pub fn mf_timedomain<T: Real>(table: &GcheckTable<T>, tau: T, xi: &[T], t_cut: T, t_nodes: usize) -> Result<C<T>> {
    let xi_abs = xi.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
    if xi_abs == T::zero() {
        return Ok(C::new(T::zero(), T::zero()));
    }
    if !(t_cut > T::zero()) || t_nodes < 2 {
        return param("time-domain route needs T_cut > 0 and at least two nodes");
    }
    let two = T::lit(2.0);
    let reach = two * t_cut * xi_abs;
    if reach > table.r_max() {
        return Err(Error::Range { required: reach.to_f(), available: table.r_max().to_f() });
    }
    let omega = tau.mag() + xi_abs * xi_abs;
    let per_rad = (t_cut * omega / T::lit(2.0)).ceil().to_f() as usize;
    let per_r = (reach / T::lit(0.5)).ceil().to_f() as usize;
    let panels = per_rad.max(per_r).max(4);
    let h = t_cut / T::usize(panels);
    let sigma = T::lit(TIME_PHASE_SIGN);
    let mut acc = C::new(T::zero(), T::zero());
    for p in 0..panels {
        for (t, w) in gl_panel(h * T::usize(p), h * T::usize(p + 1), t_nodes) {
            let g = table.eval_unchecked(two * t * xi_abs);
            acc += cis(sigma * tau * t) * (w * two * (t * xi_abs * xi_abs).sin() * g);
        }
    }
    Ok(acc)
}

/// Imaginary part via the explicit double integral
/// `N_d |S^{d-2}| / (4|ξ|(2π)^{(d-2)/2}) ∫₀¹ r^{d-2} ∫_{lo(r)}^{hi(r)} s^{(d-1)/2} f'(s) ds dr`,
/// `lo = (τ-ξ²)²/(4ξ²(1-r²))`, `hi = (τ+ξ²)²/(4ξ²(1-r²))`.
pub fn im_mf_explicit<T: Real>(state: &ReferenceState<T>, d: usize, tau: T, xi: T, nodes: usize) -> Result<T> {
    if d < 2 {
        return param("explicit imaginary part needs d ≥ 2");
    }
    if tau == T::zero() || !(xi > T::zero()) {
        return param("explicit imaginary part needs τ ≠ 0 and ξ > 0");
    }
    let [c_lo, c_hi] = singular_levels(tau, xi);
    let half_dm1 = T::lit((d as f64 - 1.0) / 2.0);
    let pre = T::lit(spectral_normalization(d) * sphere_area(d - 2) / 4.0 / (2.0 * std::f64::consts::PI).powf((d as f64 - 2.0) / 2.0)) / xi;
    let sign = if c_lo < c_hi { T::one() } else { -T::one() };
    let (c_a, c_b) = if c_lo < c_hi { (c_lo, c_hi) } else { (c_hi, c_lo) };
    let r_at = |c: T, s: T| -> Option<T> {
        let q = T::one() - c / s;
        if q > T::zero() && q < T::one() {
            Some(q.sqrt())
        } else {
            None
        }
    };

    if let Some(mu) = state.is_zero_temperature() {
        // f' = -δ(s-μ): the inner integral is -μ^{(d-1)/2} on {lo ≤ μ < hi}.
        let r_hi = if c_a < mu { (T::one() - c_a / mu).sqrt() } else { return Ok(T::zero()) };
        let r_lo = if c_b < mu { (T::one() - c_b / mu).sqrt() } else { T::zero() };
        let dm1 = T::usize(d - 1);
        let outer = (r_hi.powf(dm1) - r_lo.powf(dm1)) / dm1;
        return Ok(-sign * pre * mu.powf(half_dm1) * outer);
    }

    let s_max = state.s_max();
    let mut rb = vec![T::zero(), T::one()];
    for s in state.features().into_iter().chain([s_max]) {
        for c in [c_a, c_b] {
            if let Some(r) = r_at(c, s) {
                rb.push(r);
            }
        }
    }
    rb.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let width = T::lit(2.0) * state.width();
    let mut outer = T::zero();
    for (r, wr) in smooth_panels(&rb, nodes) {
        let q = T::one() - r * r;
        let lo = (c_a / q).min(s_max);
        let hi = (c_b / q).min(s_max);
        if hi <= lo {
            continue;
        }
        let mut sb = vec![lo, hi];
        for s in state.features() {
            if s > lo && s < hi {
                sb.push(s);
            }
        }
        sb.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut inner = T::zero();
        for w in refine(&sb, width).windows(2) {
            for (s, ws) in gl_panel(w[0], w[1], nodes) {
                inner += ws * s.powf(half_dm1) * state.df(s);
            }
        }
        outer += wr * r.powi(d as i32 - 2) * inner;
    }
    Ok(sign * pre * outer)
}

/// Tabulated `m_f` on a `τ × |ξ|` grid, row-major in `τ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierTable {
    pub tau_grid: Vec<f64>,
    pub xi_grid: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub state: StateKind,
    pub quadrature: serde_json::Value,
}

impl MultiplierTable {
    pub fn build<T: Real>(state: &ReferenceState<T>, d: usize, taus: &[f64], xis: &[f64], s_nodes: usize) -> Result<Self> {
        let points: Vec<(f64, f64)> = taus.iter().flat_map(|&t| xis.iter().map(move |&x| (t, x))).collect();
        let values = points
            .par_iter()
            .map(|&(t, x)| mf_spectral(state, d, T::lit(t), T::lit(x), s_nodes))
            .collect::<Result<Vec<_>>>()?;
        let tail = truncation_tail(state);
        Ok(Self {
            tau_grid: taus.to_vec(),
            xi_grid: xis.to_vec(),
            re: values.iter().map(|v| v.re.to_f()).collect(),
            im: values.iter().map(|v| v.im.to_f()).collect(),
            state: state.kind().clone(),
            quadrature: serde_json::json!({
                "route": "spectral",
                "dimension": d,
                "s_nodes": s_nodes,
                "s_max": state.s_max().to_f(),
                "truncation_tail": tail,
                "truncation_warning": tail > 1e-10,
            }),
        })
    }

    pub fn get(&self, i_tau: usize, i_xi: usize) -> (f64, f64) {
        let k = i_tau * self.xi_grid.len() + i_xi;
        (self.re[k], self.im[k])
    }

    /// Largest `|Im m(-τ) + Im m(τ)|` over mirrored grid pairs.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, &t) in self.tau_grid.iter().enumerate() {
            if let Some(j) = self.tau_grid.iter().position(|&u| (u + t).abs() <= 1e-12 * (1.0 + t.abs())) {
                for k in 0..self.xi_grid.len() {
                    worst = worst.max((self.get(i, k).1 + self.get(j, k).1).abs());
                }
            }
        }
        worst
    }
}
