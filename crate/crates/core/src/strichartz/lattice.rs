use serde::Serialize;

use crate::density::{sobolev_hs_norm, DensityMatrix, Mat};
use crate::error::{param, Result};
use crate::grid::SpaceTimeField;
use crate::quad::trapezoid_weight;
use crate::real::{cis, czero, japanese, Real, C};

use super::reduced::StrichartzParams;

/// Ratio of the two sides of the density Strichartz estimate for the free
/// evolution `e^{itΔ}γ0e^{-itΔ}` on `[0, T]` (trapezoid with `nt` steps).
pub fn density_strichartz_ratio<T: Real>(gamma0: &DensityMatrix<T>, params: &StrichartzParams, horizon: T, nt: usize) -> Result<T> {
    let grid = gamma0.grid;
    if params.d != grid.dim() {
        return param(format!("params for d = {} on a {}-dimensional grid", params.d, grid.dim()));
    }
    if nt == 0 || !(horizon > T::zero()) {
        return param("need nt ≥ 1 and T > 0");
    }
    let den = sobolev_hs_norm(gamma0, params.alpha1, params.alpha2);
    if !(den > T::zero()) {
        return param("γ0 has zero weighted Hilbert–Schmidt norm");
    }
    let n = grid.len();
    let m = gamma0.momentum();
    let energy: Vec<T> = (0..n).map(|k| grid.k2(k)).collect();
    let weight: Vec<T> = (0..n)
        .map(|q| {
            let k = grid.k_abs(q);
            k.powf(T::lit(2.0 * params.alpha_tilde)) * japanese(k).powf(T::lit(2.0 * params.alpha0))
        })
        .collect();
    let shift: Vec<usize> = (0..n * n).map(|i| grid.sub(i / n, i % n)).collect();
    let dt = horizon / T::usize(nt);
    let mut acc = T::zero();
    for j in 0..=nt {
        let t = dt * T::usize(j);
        let ph: Vec<C<T>> = energy.iter().map(|&e| cis(-t * e)).collect();
        let mut s = T::zero();
        for q in 0..n {
            if weight[q] == T::zero() {
                continue;
            }
            let mut rho = czero::<T>();
            for k in 0..n {
                let l = shift[k * n + q];
                rho += m[(k, l)] * ph[k] * ph[l].conj();
            }
            s += weight[q] * rho.norm_sqr();
        }
        acc += trapezoid_weight(j, nt, dt) * s;
    }
    Ok((acc / grid.volume()).sqrt() / den)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothingRatio {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Set when `V ≡ 0` and the ratio is 0 by convention.
    pub degenerate: bool,
}

/// `‖⟨∇⟩^{-α₁} ∫ e^{-itΔ}V(t)e^{itΔ} dt ⟨∇⟩^{-α₂}‖_{S²} / ‖V‖_{L²_t L^{2d/(d+1)}_x}`.
pub fn smoothing_ratio<T: Real>(v: &SpaceTimeField<T>, alpha1: f64, alpha2: f64) -> Result<SmoothingRatio> {
    let sp = *v.grid.spatial();
    let scale = v.values.iter().fold(T::zero(), |m, z| m.max(z.re.mag()));
    if v.max_imag() > T::lit(1e-12) * scale.max(T::one()) {
        return param("smoothing ratio needs a real-valued potential");
    }
    let d = sp.dim() as f64;
    let denominator = v.mixed_norm(2.0 * d / (d + 1.0)).to_f();
    let op = smoothing_operator(v);
    let numerator = weighted_hs(&sp, &op, -alpha1, -alpha2);
    if denominator == 0.0 {
        return Ok(SmoothingRatio { ratio: 0.0, numerator, denominator, degenerate: true });
    }
    Ok(SmoothingRatio { ratio: numerator / denominator, numerator, denominator, degenerate: false })
}

/// Plane-wave matrix of `∫ e^{-itΔ}V(t)e^{itΔ} dt`; entry `(k,l)` is
/// `L^{-d} ∫ V̂(t, k−l) e^{it(|k|²−|l|²)} dt`.
pub fn smoothing_operator<T: Real>(v: &SpaceTimeField<T>) -> Mat<T> {
    let sp = *v.grid.spatial();
    let n = sp.len();
    let spec = v.spatial_forward();
    let w = v.grid.trapezoid();
    let inv_vol = T::one() / sp.volume();
    let energy: Vec<T> = (0..n).map(|k| sp.k2(k)).collect();
    let mut out = Mat::<T>::zeros(n, n);
    for (j, wj) in w.iter().enumerate() {
        if *wj == T::zero() {
            continue;
        }
        let slice = &spec[j * n..(j + 1) * n];
        if slice.iter().all(|z| *z == czero()) {
            continue;
        }
        let t = v.grid.time(j);
        let ph: Vec<C<T>> = energy.iter().map(|&e| cis(t * e)).collect();
        let s = *wj * inv_vol;
        for l in 0..n {
            let pl = ph[l].conj();
            for k in 0..n {
                out[(k, l)] += slice[sp.sub(k, l)] * ph[k] * pl * s;
            }
        }
    }
    out
}

fn weighted_hs<T: Real>(sp: &crate::grid::SpatialGrid<T>, m: &Mat<T>, al: f64, ar: f64) -> f64 {
    let n = sp.len();
    let wl: Vec<T> = (0..n).map(|k| japanese(sp.k_abs(k)).powf(T::lit(2.0 * al))).collect();
    let wr: Vec<T> = (0..n).map(|k| japanese(sp.k_abs(k)).powf(T::lit(2.0 * ar))).collect();
    let mut s = T::zero();
    for j in 0..n {
        for i in 0..n {
            s += m[(i, j)].norm_sqr() * wl[i] * wr[j];
        }
    }
    s.sqrt().to_f()
}
