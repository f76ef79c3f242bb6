use serde::Serialize;

use crate::density::{free_conjugate, momentum_to_position, position_to_momentum, schatten_norm, schatten_norm_op, DensityMatrix, Mat, OperatorTrajectory};
use crate::error::{param, Error, Result};
use crate::real::{cis, Real, C};

use super::potential::PotentialTrajectory;
use super::series::{march, tail_bound, Propagation, DEFAULT_EPSILON};

/// `Q ← e^{iθΔ} Q e^{-iθΔ}` in the plane-wave basis.
fn free_step<T: Real>(prop: &Propagation<T>, q: &mut Mat<T>, theta: T) {
    let ph: Vec<C<T>> = prop.energy.iter().map(|&e| cis(-theta * e)).collect();
    let n = ph.len();
    for l in 0..n {
        let pl = ph[l].conj();
        for k in 0..n {
            q[(k, l)] *= ph[k] * pl;
        }
    }
}

/// `Q ← e^{-ihV} Q e^{ihV}`.
fn potential_step<T: Real>(prop: &Propagation<T>, q: Mat<T>, v: &[T], h: T) -> Mat<T> {
    let mut p = momentum_to_position(&prop.grid, q);
    let ph: Vec<C<T>> = v.iter().map(|&x| cis(-h * x)).collect();
    let n = ph.len();
    for b in 0..n {
        let pb = ph[b].conj();
        for a in 0..n {
            p[(a, b)] *= ph[a] * pb;
        }
    }
    position_to_momentum(&prop.grid, p)
}

fn finish<T: Real>(grid: crate::grid::SpatialGrid<T>, m: Mat<T>, hermitian: bool) -> DensityMatrix<T> {
    let mut g = DensityMatrix::from_momentum(grid, m, false);
    if hermitian {
        g.kernel = (g.kernel.clone() + g.kernel.adjoint()).map(|z| z.scale(T::lit(0.5)));
        g.hermitian = true;
    }
    g
}

/// Solves `i∂_tQ = [-Δ + V, Q]` from `Q0` by Strang splitting (half free step,
/// full potential step at the midpoint, half free step), `substeps` per grid step.
/// Every step is a unitary conjugation, so Schatten norms are conserved.
pub fn evolve_q<T: Real>(v: &PotentialTrajectory<T>, q0: &DensityMatrix<T>, substeps: usize) -> Result<OperatorTrajectory<T>> {
    let sp = *v.grid.spatial();
    if q0.grid != sp {
        return Err(Error::Structural { expected: sp.len(), found: q0.size() });
    }
    if substeps == 0 {
        return param("need at least one substep");
    }
    let prop = Propagation::new(sp);
    let h = v.grid.dt() / T::usize(substeps);
    let half = h / T::lit(2.0);
    let mut q = q0.momentum();
    let mut slices = Vec::with_capacity(v.grid.nodes());
    slices.push(q0.clone());
    let zero = v.is_zero();
    for j in 0..v.grid.nt() {
        let (a, b) = (v.slice(j), v.slice(j + 1));
        for s in 0..substeps {
            if zero {
                free_step(&prop, &mut q, h);
                continue;
            }
            let w = (T::usize(s) + T::lit(0.5)) / T::usize(substeps);
            let mid: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x + (y - x) * w).collect();
            free_step(&prop, &mut q, half);
            q = potential_step(&prop, q, &mid, h);
            free_step(&prop, &mut q, half);
        }
        slices.push(finish(sp, q.clone(), q0.hermitian));
    }
    OperatorTrajectory::new(v.grid, slices)
}

#[derive(Debug, Clone)]
pub struct Reconstruction<T: Real> {
    pub trajectory: OperatorTrajectory<T>,
    pub tail_estimate: f64,
    pub warnings: Vec<String>,
}

/// `Q(t) = e^{itΔ} W(t)(γ_f + Q0)W(t)* e^{-itΔ} − γ_f` with the partial sums
/// `W = Σ_{n ≤ n_max} W^{(n)}`.
pub fn reconstruct_q<T: Real>(v: &PotentialTrajectory<T>, q0: &DensityMatrix<T>, gamma_f: &DensityMatrix<T>, n_max: usize) -> Result<Reconstruction<T>> {
    let sp = *v.grid.spatial();
    if q0.grid != sp || gamma_f.grid != sp {
        return Err(Error::Structural { expected: sp.len(), found: q0.size().max(gamma_f.size()) });
    }
    let prop = Propagation::new(sp);
    let gf = gamma_f.momentum();
    let middle = &gf + q0.momentum();
    let herm = q0.hermitian && gamma_f.hermitian;
    let mut slices = Vec::with_capacity(v.grid.nodes());
    let mut first_norm = 0.0;
    let last = v.grid.nt();
    march(v, n_max, last, |j, terms| {
        let mut w = terms[0].clone();
        for m in &terms[1..] {
            w += m;
        }
        // γ_f commutes with the free flow, so subtract it before conjugating
        let mut x = &w * &middle * w.adjoint() - &gf;
        free_step(&prop, &mut x, v.grid.time(j));
        slices.push(finish(sp, x, herm));
        if j == last && n_max >= 1 {
            first_norm = schatten_norm_op(&terms[1], 2.0 * sp.dim() as f64, false)?.to_f();
        }
        Ok(())
    })?;
    let tail_estimate = tail_bound(first_norm, n_max + 1, DEFAULT_EPSILON);
    let mut warnings = Vec::new();
    if tail_estimate > 1e-3 * (1.0 + first_norm) {
        warnings.push(format!("wave series truncated at order {n_max}: tail estimate {tail_estimate:e}"));
    }
    Ok(Reconstruction { trajectory: OperatorTrajectory::new(v.grid, slices)?, tail_estimate, warnings })
}

#[derive(Debug, Clone, Serialize)]
pub struct CauchyRow {
    pub t1: f64,
    pub t2: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringTable {
    pub p: f64,
    pub rows: Vec<CauchyRow>,
    /// Strictly decreasing Cauchy differences.
    pub decreasing: bool,
}

/// `‖e^{-it₁Δ}Q(t₁)e^{it₁Δ} − e^{-it₂Δ}Q(t₂)e^{it₂Δ}‖_{S^p}` over the dyadic
/// checkpoints `T/8, T/4, T/2, T` (nearest grid nodes).
pub fn scattering_diagnostic<T: Real>(traj: &OperatorTrajectory<T>, p: f64) -> Result<ScatteringTable> {
    if !(p >= 1.0) {
        return param("Schatten exponent must be ≥ 1");
    }
    let nt = traj.grid.nt();
    let nodes: Vec<usize> = [8usize, 4, 2, 1].iter().map(|&k| ((nt as f64) / k as f64).round() as usize).collect();
    let pulled: Vec<(f64, DensityMatrix<T>)> = nodes
        .iter()
        .map(|&j| {
            let t = traj.grid.time(j);
            (t.to_f(), free_conjugate(&traj.slices[j], -t))
        })
        .collect();
    let mut rows = Vec::new();
    for w in pulled.windows(2) {
        let diff = w[1].1.combine(C::new(T::one(), T::zero()), &w[0].1, C::new(-T::one(), T::zero()))?;
        rows.push(CauchyRow { t1: w[0].0, t2: w[1].0, s: schatten_norm(&diff, p)?.to_f() });
    }
    let decreasing = rows.windows(2).all(|r| r[1].s < r[0].s);
    Ok(ScatteringTable { p, rows, decreasing })
}
