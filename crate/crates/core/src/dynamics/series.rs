use serde::Serialize;

use crate::density::{schatten_norm_op, unitary_columns, DensityMatrix, Mat};
use crate::error::{param, Result};
use crate::grid::{Direction, FftPlan, Field, SpatialGrid};
use crate::real::{cis, Real, C};

use super::potential::PotentialTrajectory;

/// Largest series order accepted without an explicit override.
pub const DEFAULT_MAX_ORDER: usize = 8;
/// `ε` in the `(n!)^{1/2-ε}` decay law.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Shared plane-wave machinery for one spatial grid.
pub(crate) struct Propagation<T: Real> {
    pub grid: SpatialGrid<T>,
    pub plan: FftPlan<T>,
    pub energy: Vec<T>,
}

impl<T: Real> Propagation<T> {
    pub fn new(grid: SpatialGrid<T>) -> Self {
        let energy = (0..grid.len()).map(|k| grid.k2(k)).collect();
        Self { plan: grid.plan(), grid, energy }
    }

    /// Multiply row `k` by `e^{iθE_k}`.
    pub fn phase_rows(&self, m: &mut Mat<T>, theta: T) {
        let ph: Vec<C<T>> = self.energy.iter().map(|&e| cis(theta * e)).collect();
        for mut col in m.column_iter_mut() {
            for (v, p) in col.iter_mut().zip(&ph) {
                *v *= *p;
            }
        }
    }

    /// `X ← e^{-isΔ} V e^{isΔ} X` in the plane-wave basis.
    pub fn apply_conjugated(&self, v: &[T], s: T, x: &mut Mat<T>) {
        self.phase_rows(x, -s);
        self.apply_multiplication(v, x);
        self.phase_rows(x, s);
    }

    /// `X ← V X` for the multiplication operator `V` (plane-wave basis).
    pub fn apply_multiplication(&self, v: &[T], x: &mut Mat<T>) {
        unitary_columns(&self.plan, x, Direction::Inverse);
        for mut col in x.column_iter_mut() {
            for (z, &w) in col.iter_mut().zip(v) {
                *z = z.scale(w);
            }
        }
        unitary_columns(&self.plan, x, Direction::Forward);
    }

    /// Rows of `e^{itΔ} X` in the position basis: `F* e^{itΔ} X`.
    pub fn position_rows(&self, x: &Mat<T>, t: T) -> Mat<T> {
        let mut y = x.clone();
        self.phase_rows(&mut y, -t);
        unitary_columns(&self.plan, &mut y, Direction::Inverse);
        y
    }
}

/// Marches the Duhamel recursion through the time nodes, handing the terms
/// `W^{(0..=order)}(t_j)` (plane-wave basis) to `visit` at every node.
///
/// `W^{(n)}(t_j) = -i dt (½P₀ + P₁ + … + P_{j-1} + ½P_j)` with
/// `P_m = e^{-it_mΔ}V(t_m)e^{it_mΔ} W^{(n-1)}(t_m)`; only running sums are kept.
pub(crate) fn march<T: Real>(
    v: &PotentialTrajectory<T>,
    order: usize,
    last: usize,
    mut visit: impl FnMut(usize, &[Mat<T>]) -> Result<()>,
) -> Result<()> {
    let sp = *v.grid.spatial();
    let n = sp.len();
    let prop = Propagation::new(sp);
    let dt = v.grid.dt();
    let half = T::lit(0.5);
    let mi = C::new(T::zero(), -dt);
    let mut terms: Vec<Mat<T>> = (0..=order).map(|k| if k == 0 { Mat::identity(n, n) } else { Mat::zeros(n, n) }).collect();
    let mut running: Vec<Mat<T>> = vec![Mat::zeros(n, n); order];
    let mut first: Vec<Mat<T>> = vec![Mat::zeros(n, n); order];
    let zero_potential = v.is_zero();
    for j in 0..=last {
        let t = v.grid.time(j);
        if order > 0 && !zero_potential {
            let slice = v.slice(j);
            // P^{(k)}_j from the lower order at the same node, ascending in k
            for k in 1..=order {
                let mut p = terms[k - 1].clone();
                prop.apply_conjugated(slice, t, &mut p);
                if j == 0 {
                    first[k - 1] = p.clone();
                    terms[k] = Mat::zeros(n, n);
                } else {
                    terms[k] = (&running[k - 1] - first[k - 1].scale(half) + p.scale(half)) * mi;
                }
                running[k - 1] += p;
            }
        }
        visit(j, &terms)?;
    }
    Ok(())
}

pub(crate) fn node_of<T: Real>(v: &PotentialTrajectory<T>, t: T) -> Result<usize> {
    v.grid.node_of(t).ok_or_else(|| crate::error::Error::Parameter(format!("t = {} is not a grid node", t.to_f())))
}

/// `e^{-itΔ} V e^{itΔ}` as an operator.
pub fn conjugated_potential<T: Real>(v: &Field<T>, t: T) -> DensityMatrix<T> {
    let prop = Propagation::new(v.grid);
    let n = v.grid.len();
    let re: Vec<T> = v.values.iter().map(|z| z.re).collect();
    let im: Vec<T> = v.values.iter().map(|z| z.im).collect();
    let mut a = Mat::<T>::identity(n, n);
    prop.apply_conjugated(&re, t, &mut a);
    if im.iter().any(|&x| x != T::zero()) {
        let mut b = Mat::<T>::identity(n, n);
        prop.apply_conjugated(&im, t, &mut b);
        a += b * C::new(T::zero(), T::one());
    }
    let herm = im.iter().all(|&x| x == T::zero());
    let mut g = DensityMatrix::from_momentum(v.grid, a, false);
    if herm {
        g.kernel = (g.kernel.clone() + g.kernel.adjoint()).map(|z| z.scale(T::lit(0.5)));
        g.hermitian = true;
    }
    g
}

/// `W^{(n)}_V(t)` (trapezoid Duhamel recursion on the grid nodes).
pub fn wave_series_term<T: Real>(v: &PotentialTrajectory<T>, n: usize, t: T) -> Result<DensityMatrix<T>> {
    if n > DEFAULT_MAX_ORDER {
        return param(format!("series order {n} above the configured maximum {DEFAULT_MAX_ORDER}"));
    }
    let j = node_of(v, t)?;
    if n == 0 {
        let sp = *v.grid.spatial();
        return Ok(DensityMatrix::from_operator(sp, Mat::identity(sp.len(), sp.len()), true));
    }
    let mut out = None;
    march(v, n, j, |i, terms| {
        if i == j {
            out = Some(terms[n].clone());
        }
        Ok(())
    })?;
    Ok(DensityMatrix::from_momentum(*v.grid.spatial(), out.expect("node visited"), false))
}

/// All terms `W^{(0..=n_max)}_V(t)` in the plane-wave basis.
pub fn wave_series_terms<T: Real>(v: &PotentialTrajectory<T>, n_max: usize, t: T) -> Result<Vec<Mat<T>>> {
    let j = node_of(v, t)?;
    let mut out = Vec::new();
    march(v, n_max, j, |i, terms| {
        if i == j {
            out = terms.to_vec();
        }
        Ok(())
    })?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct WaveOperator<T: Real> {
    pub op: DensityMatrix<T>,
    pub order: usize,
    /// `(C‖V‖)^{N+1} / ((N+1)!)^{1/2-ε}` with `C` fitted from the first term.
    pub tail_estimate: f64,
    pub fitted_c: f64,
    pub warning: Option<String>,
}

/// Partial sum `Σ_{n ≤ n_max} W^{(n)}_V(t)` with a tail estimate.
pub fn wave_operator<T: Real>(v: &PotentialTrajectory<T>, t: T, n_max: usize) -> Result<WaveOperator<T>> {
    let terms = wave_series_terms(v, n_max.max(1), t)?;
    let p = 2.0 * v.grid.spatial().dim() as f64;
    let mut sum = terms[0].clone();
    for m in terms.iter().take(n_max + 1).skip(1) {
        sum += m;
    }
    let vn = v.norm().to_f();
    let w1 = schatten_norm_op(&terms[1], p, false)?.to_f();
    let fitted_c = if vn > 0.0 { w1 / vn } else { 0.0 };
    let tail_estimate = tail_bound(fitted_c * vn, n_max + 1, DEFAULT_EPSILON);
    let total = schatten_norm_op(&sum, p, false)?.to_f();
    let warning = (tail_estimate > 1e-3 * total)
        .then(|| format!("series truncated at order {n_max}: tail estimate {tail_estimate:e} vs partial sum {total:e}"));
    Ok(WaveOperator { op: DensityMatrix::from_momentum(*v.grid.spatial(), sum, false), order: n_max, tail_estimate, fitted_c, warning })
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

pub(crate) fn tail_bound(x: f64, n: usize, eps: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (n as f64 * x.ln() - (0.5 - eps) * ln_factorial(n)).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub n: usize,
    pub norm: f64,
    pub bound: f64,
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveSeriesReport {
    pub rows: Vec<SeriesRow>,
    pub fitted_c: f64,
    pub v_norm: f64,
    pub epsilon: f64,
    pub schatten_p: f64,
    pub pass: bool,
}

/// Slack allowed on `‖W^{(n)}‖ (n!)^{1/2-ε} / (C‖V‖)ⁿ`.
pub const DECAY_SLACK: f64 = 1.5;

/// `‖W^{(n)}(T)‖_{S^{2d}}` for `n = 1..=n_max` against `(C‖V‖)ⁿ/(n!)^{1/2-ε}`,
/// with `C` fitted on `n = 1`.
pub fn factorial_decay_report<T: Real>(v: &PotentialTrajectory<T>, n_max: usize, eps: f64) -> Result<WaveSeriesReport> {
    if n_max < 3 {
        return param("factorial decay report needs n_max ≥ 3");
    }
    if !(eps > 0.0 && eps < 0.5) {
        return param("ε must lie in (0, 1/2)");
    }
    let p = 2.0 * v.grid.spatial().dim() as f64;
    let terms = wave_series_terms(v, n_max, v.grid.horizon())?;
    let norms = terms[1..].iter().map(|m| schatten_norm_op(m, p, false).map(|x| x.to_f())).collect::<Result<Vec<_>>>()?;
    let v_norm = v.norm().to_f();
    let fitted_c = if v_norm > 0.0 { norms[0] / v_norm } else { 0.0 };
    let rows: Vec<SeriesRow> = norms
        .iter()
        .enumerate()
        .map(|(i, &norm)| {
            let n = i + 1;
            let bound = tail_bound(fitted_c * v_norm, n, eps);
            let ratio = if bound > 0.0 { norm / bound } else { 0.0 };
            SeriesRow { n, norm, bound, ratio, pass: ratio <= DECAY_SLACK }
        })
        .collect();
    let pass = rows.iter().all(|r| r.pass);
    Ok(WaveSeriesReport { rows, fitted_c, v_norm, epsilon: eps, schatten_p: p, pass })
}
