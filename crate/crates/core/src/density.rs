//! Density matrices on a spatial grid.
//!
//! `kernel[(i, j)] = γ(x_i, x_j)`; the operator in the orthonormal position
//! basis is `ΔV·kernel`, and every Schatten norm is taken of that operator.
//! The momentum representation uses the unitary DFT `F_{kj} = e^{-ik·x_j}/√N`,
//! so `|e_k⟩ = e^{ik·x}/L^{d/2}` are its basis vectors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::grid::{lp_norm, Direction, Field, FftPlan, SpaceTimeGrid, SpatialGrid};
use crate::real::{cabs, cis, czero, japanese, Real, C};

pub type Mat<T> = DMatrix<C<T>>;

/// Largest matrix handed to a full singular-value decomposition.
pub const MAX_DENSE: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevWeights {
    pub alpha: f64,
    pub beta_decay: f64,
    pub beta0: f64,
}

impl SobolevWeights {
    pub fn beta_tilde(&self) -> f64 {
        self.beta_decay - 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    pub grid: SpatialGrid<T>,
    pub kernel: Mat<T>,
    pub hermitian: bool,
}

impl<T: Real> DensityMatrix<T> {
    pub fn new(grid: SpatialGrid<T>, kernel: Mat<T>, hermitian: bool) -> Result<Self> {
        let n = grid.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(Error::Structural { expected: n, found: kernel.nrows().max(kernel.ncols()) });
        }
        if hermitian {
            let scale = kernel.iter().fold(T::one(), |m, v| m.max(cabs(*v)));
            let dev = hermitian_defect(&kernel);
            if dev > T::lit(1e-12) * scale {
                return param(format!("kernel flagged hermitian deviates by {:e}", dev.to_f()));
            }
        }
        Ok(Self { grid, kernel, hermitian })
    }

    pub fn zeros(grid: SpatialGrid<T>) -> Self {
        let n = grid.len();
        Self { grid, kernel: Mat::zeros(n, n), hermitian: true }
    }

    /// From the operator matrix in the orthonormal position basis.
    pub fn from_operator(grid: SpatialGrid<T>, op: Mat<T>, hermitian: bool) -> Self {
        let s = T::one() / grid.volume_element();
        Self { grid, kernel: op.map(|v| v.scale(s)), hermitian }
    }

    /// From the operator matrix in the plane-wave basis.
    pub fn from_momentum(grid: SpatialGrid<T>, m: Mat<T>, hermitian: bool) -> Self {
        Self::from_operator(grid, momentum_to_position(&grid, m), hermitian)
    }

    /// `|u⟩⟨v|` for grid functions `u`, `v`.
    pub fn outer(u: &Field<T>, v: &Field<T>) -> Result<Self> {
        u.grid.check(v.values.len())?;
        let n = u.grid.len();
        let kernel = Mat::from_fn(n, n, |i, j| u.values[i] * v.values[j].conj());
        let herm = u.values == v.values;
        Ok(Self { grid: u.grid, kernel, hermitian: herm })
    }

    /// Projector onto the normalised plane wave with flat Fourier index `k`.
    pub fn plane_wave(grid: SpatialGrid<T>, k: usize) -> Self {
        let n = grid.len();
        let mut m = Mat::zeros(n, n);
        m[(k, k)] = C::new(T::one(), T::zero());
        Self::from_momentum(grid, m, true)
    }

    /// `f(-Δ)`: Fourier-diagonal with symbol `f(|k|²)`.
    pub fn fourier_multiplier(grid: SpatialGrid<T>, f: impl Fn(T) -> T) -> Self {
        let n = grid.len();
        let m = Mat::from_fn(n, n, |i, j| if i == j { C::new(f(grid.k2(i)), T::zero()) } else { czero() });
        Self::from_momentum(grid, m, true)
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// Operator matrix in the orthonormal position basis.
    pub fn operator(&self) -> Mat<T> {
        let dv = self.grid.volume_element();
        self.kernel.map(|v| v.scale(dv))
    }

    /// Operator matrix in the plane-wave basis.
    pub fn momentum(&self) -> Mat<T> {
        position_to_momentum(&self.grid, self.operator())
    }

    pub fn trace(&self) -> C<T> {
        self.kernel.diagonal().iter().fold(czero(), |a, v| a + *v).scale(self.grid.volume_element())
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { grid: self.grid, kernel: self.kernel.map(|v| v.scale(s)), hermitian: self.hermitian }
    }

    pub fn combine(&self, a: C<T>, other: &Self, b: C<T>) -> Result<Self> {
        if other.size() != self.size() {
            return Err(Error::Structural { expected: self.size(), found: other.size() });
        }
        let kernel = self.kernel.map(|v| v * a) + other.kernel.map(|v| v * b);
        let herm = self.hermitian && other.hermitian && a.im == T::zero() && b.im == T::zero();
        Ok(Self { grid: self.grid, kernel, hermitian: herm })
    }

    pub fn adjoint(&self) -> Self {
        Self { grid: self.grid, kernel: self.kernel.adjoint(), hermitian: self.hermitian }
    }
}

pub(crate) fn hermitian_defect<T: Real>(m: &Mat<T>) -> T {
    let n = m.nrows();
    let mut dev = T::zero();
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max(cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    dev
}

/// `F M F*` with the unitary DFT.
pub fn position_to_momentum<T: Real>(grid: &SpatialGrid<T>, m: Mat<T>) -> Mat<T> {
    conjugate_by_dft(grid, m, Direction::Forward)
}

/// `F* M F` with the unitary DFT.
pub fn momentum_to_position<T: Real>(grid: &SpatialGrid<T>, m: Mat<T>) -> Mat<T> {
    conjugate_by_dft(grid, m, Direction::Inverse)
}

fn conjugate_by_dft<T: Real>(grid: &SpatialGrid<T>, mut m: Mat<T>, dir: Direction) -> Mat<T> {
    let plan = grid.plan();
    let back = match dir {
        Direction::Forward => Direction::Inverse,
        Direction::Inverse => Direction::Forward,
    };
    unitary_columns(&plan, &mut m, dir);
    let mut t = m.transpose();
    unitary_columns(&plan, &mut t, back);
    t.transpose()
}

pub(crate) fn unitary_columns<T: Real>(plan: &FftPlan<T>, m: &mut Mat<T>, dir: Direction) {
    plan.run(m.as_mut_slice(), dir);
    let s = T::one() / T::usize(plan.len()).sqrt();
    m.iter_mut().for_each(|v| *v = v.scale(s));
}

/// `ρ(x_i) = γ(x_i, x_i)`.
pub fn density<T: Real>(gamma: &DensityMatrix<T>) -> Field<T> {
    Field { grid: gamma.grid, values: gamma.kernel.diagonal().iter().copied().collect() }
}

/// Singular values (or absolute eigenvalues when hermitian) of an operator matrix.
pub fn singular_values<T: Real>(op: &Mat<T>, hermitian: bool) -> Result<Vec<T>> {
    let n = op.nrows();
    if n > MAX_DENSE {
        return param(format!("dense decomposition capped at N = {MAX_DENSE} (got {n})"));
    }
    if hermitian {
        let ev = op.clone().symmetric_eigenvalues();
        return Ok(ev.iter().map(|v| v.mag()).collect());
    }
    match op.clone().try_svd(false, false, T::default_epsilon(), 10_000) {
        Some(svd) => Ok(svd.singular_values.iter().copied().collect()),
        None => {
            let fro = op.iter().fold(T::zero(), |a, v| a + v.norm_sqr()).sqrt();
            let finite = op.iter().all(|v| v.re.is_finite() && v.im.is_finite());
            Err(Error::Numerical(format!(
                "singular value decomposition did not converge (N = {n}, Frobenius norm {:e}, all entries finite: {finite})",
                fro.to_f()
            )))
        }
    }
}

/// `(Σ σ_i^p)^{1/p}`; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_of_values<T: Real>(sv: &[T], p: f64) -> T {
    if p.is_infinite() {
        return sv.iter().fold(T::zero(), |m, v| m.max(*v));
    }
    // scale by the largest value so high powers stay in range
    let top = sv.iter().fold(T::zero(), |m, v| m.max(*v));
    if top == T::zero() {
        return T::zero();
    }
    let pt = T::lit(p);
    let s = sv.iter().fold(T::zero(), |a, v| a + (*v / top).powf(pt));
    top * s.powf(T::one() / pt)
}

pub fn schatten_norm_op<T: Real>(op: &Mat<T>, p: f64, hermitian: bool) -> Result<T> {
    if !(p >= 1.0) {
        return param(format!("Schatten exponent must be ≥ 1 (got {p})"));
    }
    if p == 2.0 {
        return Ok(op.iter().fold(T::zero(), |a, v| a + v.norm_sqr()).sqrt());
    }
    Ok(schatten_of_values(&singular_values(op, hermitian)?, p))
}

pub fn schatten_norm<T: Real>(gamma: &DensityMatrix<T>, p: f64) -> Result<T> {
    schatten_norm_op(&gamma.operator(), p, gamma.hermitian)
}

/// Momentum matrix with `⟨k⟩^{αl}` on the left and `⟨l⟩^{αr}` on the right.
pub(crate) fn weighted_momentum<T: Real>(grid: &SpatialGrid<T>, mut m: Mat<T>, al: f64, ar: f64) -> Mat<T> {
    let n = grid.len();
    let wl: Vec<T> = (0..n).map(|k| japanese(grid.k_abs(k)).powf(T::lit(al))).collect();
    let wr: Vec<T> = (0..n).map(|k| japanese(grid.k_abs(k)).powf(T::lit(ar))).collect();
    for j in 0..n {
        for i in 0..n {
            m[(i, j)] = m[(i, j)].scale(wl[i] * wr[j]);
        }
    }
    m
}

/// `‖⟨∇⟩^{αl} γ ⟨∇⟩^{αr}‖_{S²}`.
pub fn sobolev_hs_norm<T: Real>(gamma: &DensityMatrix<T>, alpha_left: f64, alpha_right: f64) -> T {
    sobolev_hs_of_momentum(&gamma.grid, &gamma.momentum(), alpha_left, alpha_right)
}

pub(crate) fn sobolev_hs_of_momentum<T: Real>(grid: &SpatialGrid<T>, m: &Mat<T>, al: f64, ar: f64) -> T {
    let n = grid.len();
    let wl: Vec<T> = (0..n).map(|k| japanese(grid.k_abs(k)).powf(T::lit(al))).collect();
    let wr: Vec<T> = (0..n).map(|k| japanese(grid.k_abs(k)).powf(T::lit(ar))).collect();
    let mut s = T::zero();
    for j in 0..n {
        for i in 0..n {
            s += m[(i, j)].norm_sqr() * wl[i] * wl[i] * wr[j] * wr[j];
        }
    }
    s.sqrt()
}

/// Multiply momentum entry `(k, l)` by `e^{-it(|k|²-|l|²)}`.
pub(crate) fn free_phase<T: Real>(grid: &SpatialGrid<T>, m: &mut Mat<T>, t: T) {
    let n = grid.len();
    let ph: Vec<C<T>> = (0..n).map(|k| cis(-t * grid.k2(k))).collect();
    for j in 0..n {
        let pj = ph[j].conj();
        for i in 0..n {
            m[(i, j)] = m[(i, j)] * ph[i] * pj;
        }
    }
}

/// `e^{itΔ} γ e^{-itΔ}`.
pub fn free_conjugate<T: Real>(gamma: &DensityMatrix<T>, t: T) -> DensityMatrix<T> {
    let mut m = gamma.momentum();
    free_phase(&gamma.grid, &mut m, t);
    DensityMatrix::from_momentum(gamma.grid, m, gamma.hermitian)
}

#[derive(Debug, Clone)]
pub struct OperatorTrajectory<T: Real> {
    pub grid: SpaceTimeGrid<T>,
    pub slices: Vec<DensityMatrix<T>>,
}

impl<T: Real> OperatorTrajectory<T> {
    pub fn new(grid: SpaceTimeGrid<T>, slices: Vec<DensityMatrix<T>>) -> Result<Self> {
        if slices.len() != grid.nodes() {
            return Err(Error::Structural { expected: grid.nodes(), found: slices.len() });
        }
        if let Some(s) = slices.iter().find(|s| s.grid != *grid.spatial()) {
            return Err(Error::Structural { expected: grid.spatial().len(), found: s.size() });
        }
        Ok(Self { grid, slices })
    }

    /// `t ↦ e^{itΔ} γ0 e^{-itΔ}` on every node.
    pub fn free(gamma0: &DensityMatrix<T>, grid: SpaceTimeGrid<T>) -> Result<Self> {
        let m0 = gamma0.momentum();
        let slices = (0..grid.nodes())
            .map(|j| {
                let mut m = m0.clone();
                free_phase(&gamma0.grid, &mut m, grid.time(j));
                DensityMatrix::from_momentum(gamma0.grid, m, gamma0.hermitian)
            })
            .collect();
        Self::new(grid, slices)
    }
}

/// Exponent pair `(q, r)`; `f64::INFINITY` stands for ∞.
pub type Pair = (f64, f64);

pub fn check_admissible(d: usize, (q, r): Pair) -> Result<()> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    if !(q >= 2.0 && r >= 2.0) {
        return param(format!("pair ({q}, {r}) needs 2 ≤ q, r ≤ ∞"));
    }
    let lhs = 2.0 * inv(q) + d as f64 * inv(r);
    if (lhs - d as f64 / 2.0).abs() > 1e-9 {
        return param(format!("pair ({q}, {r}) violates the scaling relation 2/q + d/r = d/2 (got {lhs} vs {})", d as f64 / 2.0));
    }
    if d == 2 && q == 2.0 && r.is_infinite() {
        return param("the endpoint (2, ∞) is excluded in two dimensions");
    }
    Ok(())
}

/// Default finite surrogate for the admissible-pair supremum.
pub fn default_pairs(d: usize) -> Vec<Pair> {
    match d {
        1 => vec![(f64::INFINITY, 2.0), (4.0, f64::INFINITY)],
        2 => vec![(f64::INFINITY, 2.0), (4.0, 4.0)],
        _ => {
            let df = d as f64;
            vec![(f64::INFINITY, 2.0), (2.0, 2.0 * df / (df - 2.0)), (4.0, 2.0 * df / (df - 1.0))]
        }
    }
}

/// Max over `pairs` of `‖K‖_{L^q_t L^r_x L²_x'} + ‖K‖_{L^q_t L^r_x' L²_x}`,
/// `K = ⟨∇⟩^α γ(t) ⟨∇⟩^α` as a kernel.
pub fn strichartz_norm<T: Real>(traj: &OperatorTrajectory<T>, alpha: f64, pairs: &[Pair]) -> Result<T> {
    let sp = *traj.grid.spatial();
    for p in pairs {
        check_admissible(sp.dim(), *p)?;
    }
    let dv = sp.volume_element();
    let n = sp.len();
    // per slice: row and column L² profiles
    let profiles: Vec<(Vec<C<T>>, Vec<C<T>>)> = traj
        .slices
        .iter()
        .map(|g| {
            let m = weighted_momentum(&sp, g.momentum(), alpha, alpha);
            let k = momentum_to_position(&sp, m).map(|v| v.scale(T::one() / dv));
            let mut rows = vec![T::zero(); n];
            let mut cols = vec![T::zero(); n];
            for j in 0..n {
                for i in 0..n {
                    let a = k[(i, j)].norm_sqr();
                    rows[i] += a;
                    cols[j] += a;
                }
            }
            let wrap = |v: Vec<T>| v.into_iter().map(|s| C::new((s * dv).sqrt(), T::zero())).collect();
            (wrap(rows), wrap(cols))
        })
        .collect();
    let w = traj.grid.trapezoid();
    let mut best = T::zero();
    for &(q, r) in pairs {
        let mut total = T::zero();
        for pick in 0..2 {
            let per_t: Vec<T> = profiles
                .iter()
                .map(|(a, b)| lp_norm(if pick == 0 { a } else { b }, dv, r))
                .collect();
            total += if q.is_infinite() {
                per_t.iter().fold(T::zero(), |m, v| m.max(*v))
            } else {
                let qt = T::lit(q);
                per_t.iter().zip(&w).fold(T::zero(), |a, (v, wi)| a + *wi * v.powf(qt)).powf(T::one() / qt)
            };
        }
        best = best.max(total);
    }
    Ok(best)
}

/// Strichartz norm of the free trajectory over `[0, horizon]` divided by `‖γ0‖_{H^α}`.
pub fn kernel_strichartz_ratio<T: Real>(gamma0: &DensityMatrix<T>, alpha: f64, horizon: T, nt: usize) -> Result<T> {
    let den = sobolev_hs_norm(gamma0, alpha, alpha);
    if den == T::zero() {
        return param("γ0 must be nonzero");
    }
    let grid = SpaceTimeGrid::new(gamma0.grid, horizon, nt)?;
    let traj = OperatorTrajectory::free(gamma0, grid)?;
    Ok(strichartz_norm(&traj, alpha, &default_pairs(gamma0.grid.dim()))? / den)
}

/// Gaussian random hermitian operator, entry `(k, l)` of the plane-wave
/// matrix scaled by `env(|k|)·env(|l|)`.
pub fn random_hermitian<T: Real, R: rand::Rng>(grid: SpatialGrid<T>, rng: &mut R, env: impl Fn(T) -> T) -> DensityMatrix<T> {
    let n = grid.len();
    let e: Vec<T> = (0..n).map(|k| env(grid.k_abs(k))).collect();
    let mut m = Mat::from_fn(n, n, |i, j| gaussian_c(rng).scale(e[i] * e[j]));
    m = (m.clone() + m.adjoint()).map(|v| v.scale(T::lit(0.5)));
    let mut g = DensityMatrix::from_momentum(grid, m, false);
    // symmetrise away round-off so the hermitian flag holds exactly
    g.kernel = (g.kernel.clone() + g.kernel.adjoint()).map(|v| v.scale(T::lit(0.5)));
    g.hermitian = true;
    g
}

/// Random rank-one `|u⟩⟨v|` with plane-wave coefficients scaled by `env(|k|)`.
pub fn random_rank_one<T: Real, R: rand::Rng>(grid: SpatialGrid<T>, rng: &mut R, env: impl Fn(T) -> T) -> DensityMatrix<T> {
    let n = grid.len();
    let u: Vec<C<T>> = (0..n).map(|k| gaussian_c(rng).scale(env(grid.k_abs(k)))).collect();
    let v: Vec<C<T>> = (0..n).map(|k| gaussian_c(rng).scale(env(grid.k_abs(k)))).collect();
    let m = Mat::from_fn(n, n, |i, j| u[i] * v[j].conj());
    DensityMatrix::from_momentum(grid, m, false)
}

/// Hermitian `Σ_r ±|u_r⟩⟨u_r|` of rank `rank` (signs alternating), plane-wave
/// coefficients of each `u_r` scaled by `env(|k|)`.
pub fn random_low_rank<T: Real, R: rand::Rng>(grid: SpatialGrid<T>, rng: &mut R, rank: usize, env: impl Fn(T) -> T) -> DensityMatrix<T> {
    let n = grid.len();
    let mut m = Mat::zeros(n, n);
    for r in 0..rank {
        let u: Vec<C<T>> = (0..n).map(|k| gaussian_c(rng).scale(env(grid.k_abs(k)))).collect();
        let sign = if r % 2 == 0 { T::one() } else { -T::one() };
        m += Mat::from_fn(n, n, |i, j| (u[i] * u[j].conj()).scale(sign));
    }
    let mut g = DensityMatrix::from_momentum(grid, m, false);
    g.kernel = (g.kernel.clone() + g.kernel.adjoint()).map(|v| v.scale(T::lit(0.5)));
    g.hermitian = true;
    g
}

/// `Σ_r ±|u_r⟩⟨u_r|` (signs alternating) with `u_r` normalised Gaussian packets
/// of width `width` centred at uniformly random points of the periodic box.
pub fn random_packets<T: Real, R: rand::Rng>(grid: SpatialGrid<T>, rng: &mut R, rank: usize, width: T) -> DensityMatrix<T> {
    let n = grid.len();
    let len = grid.length();
    let mut m = Mat::zeros(n, n);
    for r in 0..rank {
        let centre: [T; 3] = std::array::from_fn(|_| T::lit(rng.random::<f64>()) * len);
        let mut u: Vec<C<T>> = (0..n)
            .map(|i| {
                let x = grid.position(i);
                let d2 = (0..grid.dim()).fold(T::zero(), |a, c| {
                    let mut dx = (x[c] - centre[c]).mag() % len;
                    dx = dx.min(len - dx);
                    a + dx * dx
                });
                C::new((-d2 / (T::lit(2.0) * width * width)).exp(), T::zero())
            })
            .collect();
        let norm = u.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        u.iter_mut().for_each(|z| *z = z.unscale(norm));
        let sign = if r % 2 == 0 { T::one() } else { -T::one() };
        m += Mat::from_fn(n, n, |i, j| (u[i] * u[j].conj()).scale(sign));
    }
    DensityMatrix::from_operator(grid, m, true)
}

pub(crate) fn gaussian_c<T: Real, R: rand::Rng>(rng: &mut R) -> C<T> {
    use rand_distr::{Distribution, StandardNormal};
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    C::new(T::lit(a), T::lit(b)).scale(T::lit(std::f64::consts::FRAC_1_SQRT_2))
}
