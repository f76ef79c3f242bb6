use crate::density::{DensityMatrix, Mat};
use crate::dynamics::{convolve, evolve_q, march, PotentialTrajectory, Propagation};
use crate::error::{Error, Result};
use crate::grid::SpaceTimeField;
use crate::real::{czero, Real, C};
use crate::response::{Potential, ReferenceState};

use super::config::SolverConfig;
use super::linear::ResponseKernel;

/// Imaginary part of a density output, relative to its size, that fails the run.
pub const REALNESS_TOLERANCE: f64 = 1e-8;

/// `Q0 = Σ_r a_r b_r*` in the plane-wave basis (singular vectors scaled into `a`).
#[derive(Debug, Clone)]
pub(crate) struct LowRank<T: Real> {
    left: Mat<T>,
    right: Mat<T>,
}

impl<T: Real> LowRank<T> {
    pub fn new(q0: &DensityMatrix<T>) -> Self {
        let m = q0.momentum();
        let n = m.nrows();
        let svd = m.svd(true, true);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let top = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
        let keep: Vec<usize> = (0..n).filter(|&i| top > T::zero() && svd.singular_values[i] > T::lit(1e-14) * top).collect();
        let left = Mat::from_fn(n, keep.len(), |i, r| u[(i, keep[r])].scale(svd.singular_values[keep[r]]));
        let right = Mat::from_fn(n, keep.len(), |i, r| vt[(keep[r], i)].conj());
        Self { left, right }
    }

    pub fn rank(&self) -> usize {
        self.left.ncols()
    }
}

/// What to accumulate at every node of the Duhamel march.
struct Terms<'a, T: Real> {
    /// Occupation `f(|k|²)` of `γ_f`.
    occupation: &'a [T],
    /// `(m, n)` pairs of `W^{(m)}γ_fW^{(n)}*`.
    pairs: &'a [(usize, usize)],
    /// `(W Q0 W*)` with `W = Σ_{n ≤ order} W^{(n)}`.
    perturbation: Option<(&'a LowRank<T>, usize)>,
}

/// Densities `ρ[e^{itΔ}(Σ W^{(m)}γ_fW^{(n)}* + WQ0W*)e^{-itΔ}]` on every node.
fn sandwich_density<T: Real>(v: &PotentialTrajectory<T>, terms: &Terms<T>) -> Result<SpaceTimeField<T>> {
    let sp = *v.grid.spatial();
    let n = sp.len();
    let prop = Propagation::new(sp);
    let inv_dv = T::one() / sp.volume_element();
    let zero_v = v.is_zero();
    let pair_order = terms.pairs.iter().map(|&(m, k)| m.max(k)).max().unwrap_or(0);
    let order = pair_order.max(terms.perturbation.map_or(0, |(_, o)| o));
    let mut out = vec![czero::<T>(); v.grid.nodes() * n];
    march(v, order, v.grid.nt(), |j, w| {
        let t = v.grid.time(j);
        let rho = &mut out[j * n..(j + 1) * n];
        let mut rows: Vec<Option<Mat<T>>> = vec![None; pair_order + 1];
        for &(a, b) in terms.pairs {
            if zero_v && (a > 0 || b > 0) {
                continue;
            }
            for m in [a, b] {
                if rows[m].is_none() {
                    rows[m] = Some(prop.position_rows(&w[m], t));
                }
            }
            let (ya, yb) = (rows[a].as_ref().unwrap().as_slice(), rows[b].as_ref().unwrap().as_slice());
            for (p, &f) in terms.occupation.iter().enumerate() {
                let col = p * n..(p + 1) * n;
                for ((r, x), y) in rho.iter_mut().zip(&ya[col.clone()]).zip(&yb[col]) {
                    *r += (x * y.conj()).scale(f);
                }
            }
        }
        if let Some((q0, o)) = terms.perturbation {
            if q0.rank() > 0 {
                let mut sum = w[0].clone();
                if !zero_v {
                    for m in &w[1..=o] {
                        sum += m;
                    }
                }
                let y = prop.position_rows(&sum, t);
                let (ya, yb) = (&y * &q0.left, &y * &q0.right);
                for (ca, cb) in ya.as_slice().chunks(n).zip(yb.as_slice().chunks(n)) {
                    for ((r, x), z) in rho.iter_mut().zip(ca).zip(cb) {
                        *r += x * z.conj();
                    }
                }
            }
        }
        rho.iter_mut().for_each(|r| *r = r.scale(inv_dv));
        Ok(())
    })?;
    SpaceTimeField::new(v.grid, out)
}

fn occupation<T: Real>(state: &ReferenceState<T>, v: &PotentialTrajectory<T>) -> Vec<T> {
    let sp = v.grid.spatial();
    (0..sp.len()).map(|k| state.f(sp.k2(k))).collect()
}

/// `A_{m,n}(φ) = w₂ ∗ ρ[e^{itΔ}W^{(m)}γ_fW^{(n)}*e^{-itΔ}]` with `V = w₁ ∗ φ`.
///
/// Complex in general; real when `m = n`.
pub fn apply_a<T: Real>(phi: &SpaceTimeField<T>, m: usize, n: usize, state: &ReferenceState<T>, potential: &Potential) -> Result<SpaceTimeField<T>> {
    let v = PotentialTrajectory::from_phi(phi, &potential.w1)?;
    let occ = occupation(state, &v);
    let rho = sandwich_density(&v, &Terms { occupation: &occ, pairs: &[(m, n)], perturbation: None })?;
    convolve(&rho, &potential.w2)
}

/// `B(φ) = w₂ ∗ ρ[U(t)Q0U(t)*]`, evolving `Q0` by splitting under `V = w₁ ∗ φ`.
pub fn apply_b<T: Real>(phi: &SpaceTimeField<T>, q0: &DensityMatrix<T>, potential: &Potential, substeps: usize) -> Result<SpaceTimeField<T>> {
    let v = PotentialTrajectory::from_phi(phi, &potential.w1)?;
    let traj = evolve_q(&v, q0, substeps)?;
    let n = v.grid.spatial().len();
    let mut out = Vec::with_capacity(v.grid.nodes() * n);
    for s in &traj.slices {
        out.extend(s.kernel.diagonal().iter().copied());
    }
    convolve(&SpaceTimeField::new(v.grid, out)?, &potential.w2)
}

/// `B(φ)` through the truncated wave series, `W = Σ_{n ≤ order} W^{(n)}`.
pub fn apply_b_series<T: Real>(phi: &SpaceTimeField<T>, q0: &DensityMatrix<T>, potential: &Potential, order: usize) -> Result<SpaceTimeField<T>> {
    let v = PotentialTrajectory::from_phi(phi, &potential.w1)?;
    let lr = LowRank::new(q0);
    let rho = sandwich_density(&v, &Terms { occupation: &[], pairs: &[], perturbation: Some((&lr, order)) })?;
    convolve(&rho, &potential.w2)
}

/// All `(m, n)` with `2 ≤ m+n ≤ order`.
pub fn series_pairs(order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 2..=order {
        for m in 0..=total {
            out.push((m, total - m));
        }
    }
    out
}

/// One evaluation of `Γ`.
#[derive(Debug, Clone)]
pub struct GammaValue<T: Real> {
    pub value: SpaceTimeField<T>,
    /// `Σ A_{m,n}(φ) + B(φ)` before the causal solve.
    pub source: SpaceTimeField<T>,
    /// Largest `|Im|` of the source relative to its largest `|Re|`.
    pub imag_residual: f64,
}

/// `Γ(φ) = (1+L)⁻¹(Σ_{2 ≤ m+n ≤ M} A_{m,n}(φ) + B(φ))` for fixed `Q0`, with
/// the kernel of `L` and the factorisation of `Q0` precomputed.
#[derive(Debug, Clone)]
pub struct GammaMap<T: Real> {
    pub config: SolverConfig<T>,
    pub kernel: ResponseKernel<T>,
    occupation: Vec<T>,
    pairs: Vec<(usize, usize)>,
    q0: LowRank<T>,
}

impl<T: Real> GammaMap<T> {
    pub fn new(q0: &DensityMatrix<T>, config: &SolverConfig<T>) -> Result<Self> {
        config.validate()?;
        let sp = *config.grid.spatial();
        if q0.grid != sp {
            return Err(Error::Structural { expected: sp.len(), found: q0.size() });
        }
        Ok(Self {
            kernel: ResponseKernel::lattice(&config.state, &config.potential, config.grid),
            occupation: (0..sp.len()).map(|k| config.state.f(sp.k2(k))).collect(),
            pairs: series_pairs(config.series_order),
            q0: LowRank::new(q0),
            config: config.clone(),
        })
    }

    pub fn eval(&self, phi: &SpaceTimeField<T>) -> Result<GammaValue<T>> {
        let pot = &self.config.potential;
        let v = PotentialTrajectory::from_phi(phi, &pot.w1)?;
        let terms = Terms { occupation: &self.occupation, pairs: &self.pairs, perturbation: Some((&self.q0, self.config.wave_order)) };
        let rho = sandwich_density(&v, &terms)?;
        let source = convolve(&rho, &pot.w2)?;
        let scale = source.values.iter().fold(T::zero(), |m, z| m.max(z.re.mag())).to_f();
        let im = source.max_imag().to_f();
        let imag_residual = if scale > 0.0 { im / scale } else { im };
        if imag_residual > REALNESS_TOLERANCE {
            return Err(Error::Numerical(format!("density source not real: relative imaginary part {imag_residual:e}")));
        }
        let real = SpaceTimeField { grid: source.grid, values: source.values.iter().map(|z| C::new(z.re, T::zero())).collect() };
        let value = self.kernel.solve(&real)?;
        let value = SpaceTimeField { grid: value.grid, values: value.values.iter().map(|z| C::new(z.re, T::zero())).collect() };
        Ok(GammaValue { value, source: real, imag_residual })
    }
}

/// `Γ(φ)` for one `φ`.
pub fn gamma_map<T: Real>(phi: &SpaceTimeField<T>, q0: &DensityMatrix<T>, config: &SolverConfig<T>) -> Result<SpaceTimeField<T>> {
    Ok(GammaMap::new(q0, config)?.eval(phi)?.value)
}

/// Grid density `ρ(x) = γ(x, x)` of every slice of a trajectory.
pub(crate) fn trajectory_density<T: Real>(traj: &crate::density::OperatorTrajectory<T>) -> Result<SpaceTimeField<T>> {
    let mut out = Vec::with_capacity(traj.grid.nodes() * traj.grid.spatial().len());
    for s in &traj.slices {
        out.extend(crate::density::density(s).values);
    }
    SpaceTimeField::new(traj.grid, out)
}
