use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{SpaceTimeField, SpaceTimeGrid};
use crate::quad::trapezoid_weight;
use crate::real::{cabs, cis, czero, Real, C};
use crate::response::{GcheckTable, Potential, ReferenceState};

/// Diagonal entries `1 + dt·ŵK(0)/2` below this are treated as singular.
const DIAGONAL_FLOOR: f64 = 1e-12;

/// Causal response kernel `K_q(u)` of the linearised density map, one row of
/// lags `u = 0, dt, …, T` per spatial mode, together with `ŵ(q) = ŵ₁ŵ₂`.
///
/// `(Lφ)^(t_j, q) = ŵ(q) Σ_m w_m K_q(t_j − t_m) φ̂(t_m, q)` with trapezoid
/// weights `w_m`, so `L` is lower triangular in time for each mode.
#[derive(Debug, Clone)]
pub struct ResponseKernel<T: Real> {
    pub grid: SpaceTimeGrid<T>,
    pub w_hat: Vec<T>,
    /// `values[q·(nt+1) + lag]`
    pub values: Vec<C<T>>,
}

impl<T: Real> ResponseKernel<T> {
    /// Exact kernel of the grid problem:
    /// `K_q(u) = i L^{-d} Σ_k (f(E_{k−q}) − f(E_k)) e^{-iu(E_k − E_{k−q})}`.
    ///
    /// This is what `−w₂ ∗ ρ[e^{itΔ}(W⁽¹⁾γ_f + γ_fW⁽¹⁾*)e^{-itΔ}]` evaluates to
    /// when `W⁽¹⁾` is built with the same trapezoid rule.
    pub fn lattice(state: &ReferenceState<T>, potential: &Potential, grid: SpaceTimeGrid<T>) -> Self {
        let sp = *grid.spatial();
        let n = sp.len();
        let lags = grid.nodes();
        let energy: Vec<T> = (0..n).map(|k| sp.k2(k)).collect();
        let occ: Vec<T> = energy.iter().map(|&e| state.f(e)).collect();
        let scale = T::one() / sp.volume();
        let dt = grid.dt();
        let values: Vec<C<T>> = (0..n)
            .into_par_iter()
            .flat_map_iter(|q| {
                let pairs: Vec<(T, T)> = (0..n)
                    .filter_map(|k| {
                        let kq = sp.sub(k, q);
                        let df = occ[kq] - occ[k];
                        (df != T::zero()).then(|| (df, energy[k] - energy[kq]))
                    })
                    .collect();
                (0..lags).map(move |u| {
                    let s = T::usize(u) * dt;
                    let acc = pairs.iter().fold(czero::<T>(), |a, &(df, de)| a + cis(-s * de).scale(df));
                    C::new(-acc.im, acc.re).scale(scale)
                })
            })
            .collect();
        Self { w_hat: symbol(potential, &grid), grid, values }
    }

    /// Continuum kernel `K_q(u) = 2 sin(u|q|²) ǧ(2u|q|)` from a tabulated `ǧ`.
    pub fn continuum(table: &GcheckTable<T>, potential: &Potential, grid: SpaceTimeGrid<T>) -> Result<Self> {
        let sp = *grid.spatial();
        let n = sp.len();
        let lags = grid.nodes();
        let k_max = (0..n).fold(T::zero(), |m, k| m.max(sp.k_abs(k)));
        let needed = T::lit(2.0) * grid.horizon() * k_max;
        if needed > table.r_max() {
            return Err(Error::Range { required: needed.to_f(), available: table.r_max().to_f() });
        }
        let two = T::lit(2.0);
        let mut values = Vec::with_capacity(n * lags);
        for q in 0..n {
            let (k, k2) = (sp.k_abs(q), sp.k2(q));
            for u in 0..lags {
                let s = grid.time(u);
                values.push(C::new(two * (s * k2).sin() * table.eval(two * s * k)?, T::zero()));
            }
        }
        Ok(Self { w_hat: symbol(potential, &grid), grid, values })
    }

    fn row(&self, q: usize) -> &[C<T>] {
        let lags = self.grid.nodes();
        &self.values[q * lags..(q + 1) * lags]
    }

    fn check(&self, f: &SpaceTimeField<T>) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::Structural { expected: self.grid.nodes() * self.grid.spatial().len(), found: f.values.len() });
        }
        Ok(())
    }

    /// `Lφ`.
    pub fn apply(&self, phi: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
        self.check(phi)?;
        if self.w_hat.iter().all(|&w| w == T::zero()) {
            return Ok(SpaceTimeField::zeros(self.grid));
        }
        let n = self.grid.spatial().len();
        let nodes = self.grid.nodes();
        let dt = self.grid.dt();
        let spec = phi.spatial_forward();
        let cols: Vec<Vec<C<T>>> = (0..n)
            .into_par_iter()
            .map(|q| {
                let w = self.w_hat[q];
                if w == T::zero() {
                    return vec![czero(); nodes];
                }
                let k = self.row(q);
                (0..nodes)
                    .map(|j| {
                        let acc = (0..=j).fold(czero::<T>(), |a, m| {
                            a + k[j - m] * spec[m * n + q].scale(trapezoid_weight(m, j, dt))
                        });
                        acc.scale(w)
                    })
                    .collect()
            })
            .collect();
        SpaceTimeField::from_spatial_spectrum(self.grid, interleave(cols, nodes, n))
    }

    /// `(1 + L)⁻¹ψ` by forward substitution in time, mode by mode.
    pub fn solve(&self, psi: &SpaceTimeField<T>) -> Result<SpaceTimeField<T>> {
        self.check(psi)?;
        if self.w_hat.iter().all(|&w| w == T::zero()) {
            return Ok(psi.clone());
        }
        let n = self.grid.spatial().len();
        let nodes = self.grid.nodes();
        let dt = self.grid.dt();
        let spec = psi.spatial_forward();
        let cols: Vec<Vec<C<T>>> = (0..n)
            .into_par_iter()
            .map(|q| {
                let w = self.w_hat[q];
                let mut x: Vec<C<T>> = (0..nodes).map(|j| spec[j * n + q]).collect();
                if w == T::zero() {
                    return Ok(x);
                }
                let k = self.row(q);
                for j in 0..nodes {
                    let hist = (0..j).fold(czero::<T>(), |a, m| a + k[j - m] * x[m].scale(trapezoid_weight(m, j, dt)));
                    let diag = C::new(T::one(), T::zero()) + k[0].scale(w * trapezoid_weight(j, j, dt));
                    if cabs(diag).to_f() < DIAGONAL_FLOOR {
                        return Err(Error::Singularity {
                            context: format!("causal solve, mode {q}, node {j}"),
                            factor: cabs(diag).to_f(),
                        });
                    }
                    x[j] = (x[j] - hist.scale(w)) / diag;
                }
                Ok(x)
            })
            .collect::<Result<_>>()?;
        SpaceTimeField::from_spatial_spectrum(self.grid, interleave(cols, nodes, n))
    }
}

fn symbol<T: Real>(potential: &Potential, grid: &SpaceTimeGrid<T>) -> Vec<T> {
    let sp = grid.spatial();
    (0..sp.len()).map(|k| potential.w_hat(sp.k_abs(k))).collect()
}

fn interleave<T: Real>(cols: Vec<Vec<C<T>>>, nodes: usize, n: usize) -> Vec<C<T>> {
    let mut out = vec![czero(); nodes * n];
    for (q, col) in cols.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            out[j * n + q] = v;
        }
    }
    out
}

/// `Lφ` with the lattice kernel of `(state, potential)` on `φ`'s grid.
pub fn apply_l<T: Real>(phi: &SpaceTimeField<T>, state: &ReferenceState<T>, potential: &Potential) -> Result<SpaceTimeField<T>> {
    ResponseKernel::lattice(state, potential, phi.grid).apply(phi)
}

/// `(1 + L)⁻¹ψ` with the lattice kernel.
pub fn solve_one_plus_l<T: Real>(psi: &SpaceTimeField<T>, state: &ReferenceState<T>, potential: &Potential) -> Result<SpaceTimeField<T>> {
    ResponseKernel::lattice(state, potential, psi.grid).solve(psi)
}
