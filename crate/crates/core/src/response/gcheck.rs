use serde::Serialize;

use super::state::ReferenceState;
use crate::error::{param, Error, Result};
use crate::quad::{gl_panel, UniformSpline};
use crate::real::{sphere_area, Real};

const PANEL_ORDER: usize = 20;
/// Mirrored samples kept left of the origin so that `r = 0` is an interior spline point.
const MIRROR: usize = 16;

/// Radial profile of `ǧ(x) = (2π)^{-d} ∫ e^{ix·ξ} f(|ξ|²) dξ` tabulated on `[0, r_max]`.
#[derive(Debug, Clone)]
pub struct GcheckTable<T: Real> {
    d: usize,
    r_max: T,
    spline: UniformSpline<T>,
    samples: Vec<T>,
    /// `∫ |ǧ(x)| |x|^{2-d} dx`
    pub moment_abs: T,
    /// `∫ ǧ(x) |x|^{2-d} dx`
    pub moment_signed: T,
    /// `|ǧ(r_max)|`, the size of the neglected tail
    pub tail: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct GcheckSummary {
    pub dimension: usize,
    pub r_max: f64,
    pub nodes: usize,
    pub moment_abs: f64,
    pub moment_signed: f64,
    pub tail: f64,
    pub at_origin: f64,
}

impl<T: Real> GcheckTable<T> {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn eval(&self, r: T) -> Result<T> {
        if r.mag() > self.r_max {
            return Err(Error::Range { required: r.mag().to_f(), available: self.r_max.to_f() });
        }
        Ok(self.spline.eval(r.mag()))
    }

    pub(crate) fn eval_unchecked(&self, r: T) -> T {
        self.spline.eval(r.mag().min(self.r_max))
    }

    pub fn summary(&self) -> GcheckSummary {
        GcheckSummary {
            dimension: self.d,
            r_max: self.r_max.to_f(),
            nodes: self.samples.len() - 1,
            moment_abs: self.moment_abs.to_f(),
            moment_signed: self.moment_signed.to_f(),
            tail: self.tail.to_f(),
            at_origin: self.samples[0].to_f(),
        }
    }
}

/// `J₀(x)`: power series below 15, Hankel asymptotics above.
pub fn bessel_j0<T: Real>(x: T) -> T {
    let x = x.mag();
    if x < T::lit(15.0) {
        let q = -x * x / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        for m in 1..80 {
            term *= q / T::usize(m * m);
            sum += term;
            if term.mag() < T::lit(1e-18) * sum.mag().max(T::one()) {
                break;
            }
        }
        return sum;
    }
    let (mut p, mut qs) = (T::zero(), T::zero());
    let mut a = T::one();
    let mut xk = T::one();
    for k in 0..30 {
        let term = a / xk;
        if k > 0 && term.mag() < T::lit(1e-17) {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => qs -= term,
            2 => p -= term,
            _ => qs += term,
        }
        let two_k1 = T::usize(2 * k + 1);
        a *= two_k1 * two_k1 / (T::usize(k + 1) * T::lit(8.0));
        xk *= x;
    }
    let ph = x - T::frac_pi_4();
    (T::lit(2.0) / (T::pi() * x)).sqrt() * (p * ph.cos() - qs * ph.sin())
}

/// Quadrature nodes in `k` on `[0, k_max]` resolving oscillations up to radius `r_reach`.
fn k_nodes<T: Real>(state: &ReferenceState<T>, r_reach: T, refine: usize) -> Vec<(T, T)> {
    let k_max = state.support_end().sqrt();
    let mut breaks = vec![T::zero(), k_max];
    for f in state.features() {
        let k = f.sqrt();
        if k > T::zero() && k < k_max {
            breaks.push(k);
        }
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // oscillation of the radial kernel and the width of f(k²) near its features
    let mut h = T::lit(4.0) / r_reach.max(T::one());
    let w = state.width();
    if w > T::zero() {
        for f in state.features() {
            h = h.min(T::lit(2.0) * w / (T::lit(2.0) * f.sqrt()).max(T::lit(1e-3)));
        }
    }
    if state.features().is_empty() {
        // spline data: only piecewise smooth, so keep panels short
        h = h.min(T::lit(0.05));
    }
    h = h.min(T::lit(0.25)) / T::usize(refine);
    let mut out = Vec::new();
    for seg in breaks.windows(2) {
        let len = seg[1] - seg[0];
        let panels = (len / h).ceil().to_f().max(1.0) as usize;
        let step = len / T::usize(panels);
        for p in 0..panels {
            out.extend(gl_panel(seg[0] + step * T::usize(p), seg[0] + step * T::usize(p + 1), PANEL_ORDER));
        }
    }
    out
}

fn radial_transform<T: Real>(d: usize, nodes: &[(T, T)], r: T) -> T {
    // nodes carry (k, weight·g(k))
    let pi = T::pi();
    let mut acc = T::zero();
    match d {
        1 => {
            for &(k, wg) in nodes {
                acc += wg * (k * r).cos();
            }
            acc / pi
        }
        2 => {
            for &(k, wg) in nodes {
                acc += wg * k * bessel_j0(k * r);
            }
            acc / T::two_pi()
        }
        _ => {
            if r == T::zero() {
                for &(k, wg) in nodes {
                    acc += wg * k * k;
                }
            } else {
                for &(k, wg) in nodes {
                    acc += wg * k * (k * r).sin() / r;
                }
            }
            acc / (T::lit(2.0) * pi * pi)
        }
    }
}

fn weighted_nodes<T: Real>(state: &ReferenceState<T>, r_reach: T, refine: usize) -> Vec<(T, T)> {
    k_nodes(state, r_reach, refine).into_iter().map(|(k, w)| (k, w * state.f(k * k))).collect()
}

/// ǧ at a single radius by direct quadrature.
pub fn gcheck_point<T: Real>(state: &ReferenceState<T>, d: usize, r: T) -> Result<T> {
    if !(1..=3).contains(&d) {
        return param("ǧ is implemented for d ∈ {1, 2, 3}");
    }
    Ok(radial_transform(d, &weighted_nodes(state, r.mag(), 1), r.mag()))
}

/// Tabulate ǧ on `nodes` uniform intervals of `[0, r_max]` and compute its moments.
pub fn gcheck_table<T: Real>(state: &ReferenceState<T>, d: usize, r_max: T, nodes: usize) -> Result<GcheckTable<T>> {
    if !(1..=3).contains(&d) {
        return param("ǧ is implemented for d ∈ {1, 2, 3}");
    }
    if !(r_max > T::zero()) || nodes < 8 {
        return param("ǧ table needs r_max > 0 and at least 8 intervals");
    }
    let kn = weighted_nodes(state, r_max, 1);
    let at0 = radial_transform(d, &kn, T::zero());
    // convergence check on the coarse rule
    let fine = weighted_nodes(state, r_max, 2);
    let tol = T::lit(1e-9) * at0.mag().max(T::lit(1e-300));
    for r in [T::zero(), r_max / T::lit(2.0), r_max] {
        let diff = (radial_transform(d, &fine, r) - radial_transform(d, &kn, r)).mag();
        if diff > tol {
            return Err(Error::Numerical(format!(
                "radial quadrature for ǧ not converged at r = {}: refinement changes the value by {:e} (tail |ǧ(r_max)| ≈ {:e})",
                r.to_f(),
                diff.to_f(),
                radial_transform(d, &fine, r_max).mag().to_f()
            )));
        }
    }
    let h = r_max / T::usize(nodes);
    let samples: Vec<T> = (0..=nodes).map(|j| radial_transform(d, &kn, h * T::usize(j))).collect();
    let mut y: Vec<T> = (1..=MIRROR).rev().map(|j| samples[j]).collect();
    y.extend(samples.iter().copied());
    let spline = UniformSpline::new(-h * T::usize(MIRROR), h, y);

    // ∫|ǧ(x)||x|^{2-d}dx = |S^{d-1}| ∫₀^{r_max} |ǧ(r)| r dr, composite Simpson on the samples
    let sphere = T::lit(sphere_area(d - 1));
    let simpson = |vals: &dyn Fn(usize) -> T| -> T {
        let mut acc = T::zero();
        let m = nodes - nodes % 2;
        for j in 0..=m {
            let c = if j == 0 || j == m { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += T::lit(c) * vals(j);
        }
        acc = acc * h / T::lit(3.0);
        if m < nodes {
            acc += h / T::lit(2.0) * (vals(m) + vals(nodes));
        }
        acc
    };
    let moment_abs = sphere * simpson(&|j| samples[j].mag() * h * T::usize(j));
    let moment_signed = sphere * simpson(&|j| samples[j] * h * T::usize(j));
    Ok(GcheckTable { d, r_max, spline, tail: samples[nodes].mag(), samples, moment_abs, moment_signed })
}
