//! Periodic spatial grids, space-time grids and the discrete Fourier convention.
//!
//! Forward: `f̂(k) = ΔV Σ_j f(x_j) e^{-ik·x_j}`; inverse: `f(x) = L^{-d} Σ_k f̂(k) e^{ik·x}`,
//! with nodes `x_j = j·L/n` and frequencies `k = 2πm/L`, `m` in FFT order
//! `0, 1, …, n/2-1, -n/2, …, -1` along each axis (row-major, last axis fastest).

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::real::{czero, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid<T> {
    dim: usize,
    n: usize,
    length: T,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(dim: usize, n: usize, length: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return param(format!("grid dimension must be 1, 2 or 3 (got {dim})"));
        }
        if n < 4 || !n.is_power_of_two() {
            return param(format!("points per axis must be a power of two ≥ 4 (got {n})"));
        }
        if !(length > T::zero()) {
            return param("grid period must be positive");
        }
        Ok(Self { dim, n, length })
    }

    /// Grid with the default period `2π·8`.
    pub fn with_default_length(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, T::two_pi() * T::lit(8.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn length(&self) -> T {
        self.length
    }
    /// Total number of nodes `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn spacing(&self) -> T {
        self.length / T::usize(self.n)
    }
    pub fn volume_element(&self) -> T {
        self.spacing().powi(self.dim as i32)
    }
    /// `L^d`.
    pub fn volume(&self) -> T {
        self.length.powi(self.dim as i32)
    }
    pub fn freq_unit(&self) -> T {
        T::two_pi() / self.length
    }

    /// Multi-index of a flat index (axis 0 slowest).
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut r = flat;
        for a in (0..self.dim).rev() {
            out[a] = r % self.n;
            r /= self.n;
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, a| acc * self.n + idx[a])
    }

    /// Signed integer wave numbers of a flat Fourier index.
    pub fn wave_numbers(&self, flat: usize) -> [i64; 3] {
        let m = self.multi_index(flat);
        let half = (self.n / 2) as i64;
        let mut out = [0i64; 3];
        for a in 0..self.dim {
            let v = m[a] as i64;
            out[a] = if v < half { v } else { v - self.n as i64 };
        }
        out
    }

    pub fn frequency(&self, flat: usize) -> [T; 3] {
        let w = self.wave_numbers(flat);
        let u = self.freq_unit();
        [T::lit(w[0] as f64) * u, T::lit(w[1] as f64) * u, T::lit(w[2] as f64) * u]
    }

    pub fn k2(&self, flat: usize) -> T {
        let k = self.frequency(flat);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    pub fn k_abs(&self, flat: usize) -> T {
        self.k2(flat).sqrt()
    }

    /// True when some axis carries the unpaired mode `-n/2`.
    pub fn is_extreme(&self, flat: usize) -> bool {
        let w = self.wave_numbers(flat);
        (0..self.dim).any(|a| w[a] == -((self.n / 2) as i64))
    }

    /// Flat index of `k ⊖ q` (wave-number difference modulo the lattice).
    pub fn sub(&self, k: usize, q: usize) -> usize {
        let a = self.multi_index(k);
        let b = self.multi_index(q);
        let mut out = [0; 3];
        for ax in 0..self.dim {
            out[ax] = (a[ax] + self.n - b[ax]) % self.n;
        }
        self.flat_index(out)
    }

    pub fn position(&self, flat: usize) -> [T; 3] {
        let m = self.multi_index(flat);
        let h = self.spacing();
        [T::usize(m[0]) * h, T::usize(m[1]) * h, T::usize(m[2]) * h]
    }

    pub fn plan(&self) -> FftPlan<T> {
        FftPlan::new(self.dim, self.n)
    }

    pub(crate) fn check(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Structural { expected: self.len(), found: len });
        }
        Ok(())
    }
}

/// Frequency vectors in value-layout order.
pub fn freq_lattice<T: Real>(grid: &SpatialGrid<T>) -> Vec<Vec<T>> {
    (0..grid.len()).map(|i| grid.frequency(i)[..grid.dim()].to_vec()).collect()
}

/// Unnormalised d-dimensional FFT along every axis of a row-major array.
#[derive(Clone)]
pub struct FftPlan<T: Real> {
    dim: usize,
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> FftPlan<T> {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut p = FftPlanner::new();
        Self { dim, n, fwd: p.plan_fft_forward(n), inv: p.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place transform of one block of `n^d` values.
    pub fn run(&self, data: &mut [C<T>], dir: Direction) {
        let fft = match dir {
            Direction::Forward => &self.fwd,
            Direction::Inverse => &self.inv,
        };
        let n = self.n;
        let total = self.len();
        debug_assert_eq!(data.len() % total, 0);
        // last axis: contiguous lines
        fft.process(data);
        if self.dim == 1 {
            return;
        }
        let mut line = vec![czero::<T>(); n];
        for block in data.chunks_mut(total) {
            for axis in 0..self.dim - 1 {
                let stride = n.pow((self.dim - 1 - axis) as u32);
                let outer = total / (stride * n);
                for o in 0..outer {
                    for s in 0..stride {
                        let base = o * stride * n + s;
                        for (i, v) in line.iter_mut().enumerate() {
                            *v = block[base + i * stride];
                        }
                        fft.process(&mut line);
                        for (i, v) in line.iter().enumerate() {
                            block[base + i * stride] = *v;
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    pub grid: SpatialGrid<T>,
    pub values: Vec<C<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: SpatialGrid<T>, values: Vec<C<T>>) -> Result<Self> {
        grid.check(values.len())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid<T>) -> Self {
        Self { values: vec![czero(); grid.len()], grid }
    }

    pub fn from_fn(grid: SpatialGrid<T>, f: impl Fn([T; 3]) -> C<T>) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid, values }
    }

    /// `(ΔV Σ |f|²)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let s = self.values.iter().fold(T::zero(), |a, v| a + v.norm_sqr());
        (s * self.grid.volume_element()).sqrt()
    }
}

/// Discrete Fourier transform with the crate convention; `inverse(forward(f)) = f`.
pub fn transform<T: Real>(field: &Field<T>, dir: Direction) -> Result<Field<T>> {
    field.grid.check(field.values.len())?;
    let mut values = field.values.clone();
    field.grid.plan().run(&mut values, dir);
    let s = match dir {
        Direction::Forward => field.grid.volume_element(),
        Direction::Inverse => T::one() / field.grid.volume(),
    };
    for v in values.iter_mut() {
        *v = v.scale(s);
    }
    Ok(Field { grid: field.grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeGrid<T> {
    spatial: SpatialGrid<T>,
    horizon: T,
    nt: usize,
}

impl<T: Real> SpaceTimeGrid<T> {
    pub fn new(spatial: SpatialGrid<T>, horizon: T, nt: usize) -> Result<Self> {
        if nt < 8 {
            return param(format!("need at least 8 time steps (got {nt})"));
        }
        if !(horizon > T::zero()) {
            return param("time horizon must be positive");
        }
        Ok(Self { spatial, horizon, nt })
    }
    pub fn spatial(&self) -> &SpatialGrid<T> {
        &self.spatial
    }
    pub fn horizon(&self) -> T {
        self.horizon
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn dt(&self) -> T {
        self.horizon / T::usize(self.nt)
    }
    pub fn time(&self, j: usize) -> T {
        self.dt() * T::usize(j)
    }
    pub fn nodes(&self) -> usize {
        self.nt + 1
    }
    /// Index of the node at time `t`, if `t` is a node to within 1e-9·dt.
    pub fn node_of(&self, t: T) -> Option<usize> {
        let s = t / self.dt();
        let j = s.round();
        if (s - j).mag() > T::lit(1e-9) || j < T::zero() {
            return None;
        }
        let j = j.to_usize()?;
        (j <= self.nt).then_some(j)
    }
    /// Trapezoid weights over all nodes.
    pub fn trapezoid(&self) -> Vec<T> {
        (0..=self.nt).map(|i| crate::quad::trapezoid_weight(i, self.nt, self.dt())).collect()
    }
    /// Same spatial grid, horizon and step count scaled by `factor`.
    pub fn extended(&self, factor: usize) -> Self {
        Self { spatial: self.spatial, horizon: self.horizon * T::usize(factor), nt: self.nt * factor }
    }
    pub fn refined(&self, factor: usize) -> Self {
        Self { spatial: self.spatial, horizon: self.horizon, nt: self.nt * factor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField<T> {
    pub grid: SpaceTimeGrid<T>,
    pub values: Vec<C<T>>,
}

impl<T: Real> SpaceTimeField<T> {
    pub fn new(grid: SpaceTimeGrid<T>, values: Vec<C<T>>) -> Result<Self> {
        let expected = grid.nodes() * grid.spatial().len();
        if values.len() != expected {
            return Err(Error::Structural { expected, found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid<T>) -> Self {
        Self { values: vec![czero(); grid.nodes() * grid.spatial().len()], grid }
    }

    pub fn from_fn(grid: SpaceTimeGrid<T>, f: impl Fn(T, [T; 3]) -> C<T>) -> Self {
        let sp = *grid.spatial();
        let mut values = Vec::with_capacity(grid.nodes() * sp.len());
        for j in 0..grid.nodes() {
            let t = grid.time(j);
            values.extend((0..sp.len()).map(|i| f(t, sp.position(i))));
        }
        Self { grid, values }
    }

    pub fn slice(&self, j: usize) -> &[C<T>] {
        let n = self.grid.spatial().len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn slice_mut(&mut self, j: usize) -> &mut [C<T>] {
        let n = self.grid.spatial().len();
        &mut self.values[j * n..(j + 1) * n]
    }

    pub fn field(&self, j: usize) -> Field<T> {
        Field { grid: *self.grid.spatial(), values: self.slice(j).to_vec() }
    }

    /// `‖f‖_{L²_t L²_x}` with trapezoid in time and `ΔV` in space.
    pub fn l2_norm(&self) -> T {
        let w = self.grid.trapezoid();
        let dv = self.grid.spatial().volume_element();
        let s = (0..self.grid.nodes()).fold(T::zero(), |acc, j| {
            acc + w[j] * self.slice(j).iter().fold(T::zero(), |a, v| a + v.norm_sqr())
        });
        (s * dv).sqrt()
    }

    /// `‖f‖_{L²_t L^p_x}` (power mean in space, trapezoid in time).
    pub fn mixed_norm(&self, p: f64) -> T {
        let w = self.grid.trapezoid();
        let dv = self.grid.spatial().volume_element();
        let s = (0..self.grid.nodes()).fold(T::zero(), |acc, j| {
            let lp = lp_norm(self.slice(j), dv, p);
            acc + w[j] * lp * lp
        });
        s.sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| v.scale(s)).collect() }
    }

    pub fn axpy(&self, a: C<T>, other: &Self) -> Result<Self> {
        if other.values.len() != self.values.len() {
            return Err(Error::Structural { expected: self.values.len(), found: other.values.len() });
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| *x + a * *y).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn max_imag(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.im.mag()))
    }

    /// Spatial forward transform of every time slice.
    pub fn spatial_forward(&self) -> Vec<C<T>> {
        let sp = self.grid.spatial();
        let mut out = self.values.clone();
        sp.plan().run(&mut out, Direction::Forward);
        let dv = sp.volume_element();
        out.iter_mut().for_each(|v| *v = v.scale(dv));
        out
    }

    /// Inverse of [`spatial_forward`](Self::spatial_forward).
    pub fn from_spatial_spectrum(grid: SpaceTimeGrid<T>, mut spec: Vec<C<T>>) -> Result<Self> {
        let sp = *grid.spatial();
        sp.plan().run(&mut spec, Direction::Inverse);
        let s = T::one() / sp.volume();
        spec.iter_mut().for_each(|v| *v = v.scale(s));
        Self::new(grid, spec)
    }
}

pub(crate) fn lp_norm<T: Real>(values: &[C<T>], dv: T, p: f64) -> T {
    if p.is_infinite() {
        return values.iter().fold(T::zero(), |m, v| m.max(crate::real::cabs(*v)));
    }
    let pt = T::lit(p);
    let s = values.iter().fold(T::zero(), |a, v| a + crate::real::cabs(*v).powf(pt));
    (s * dv).powf(T::one() / pt)
}

/// Space-time spectrum; the time axis is zero padded to `padded ≥ 2(nt+1)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeSpectrum<T> {
    pub grid: SpaceTimeGrid<T>,
    pub padded: usize,
    pub values: Vec<C<T>>,
}

impl<T: Real> SpaceTimeSpectrum<T> {
    /// Time frequency of padded index `m` (FFT order).
    pub fn time_frequency(&self, m: usize) -> T {
        let p = self.padded as i64;
        let s = if (m as i64) < p / 2 { m as i64 } else { m as i64 - p };
        T::two_pi() * T::lit(s as f64) / (T::usize(self.padded) * self.grid.dt())
    }
}

/// Forward space-time transform: `dt·ΔV Σ_{j,x} f e^{-i(τt_j + k·x)}` on the padded time lattice.
pub fn st_forward<T: Real>(field: &SpaceTimeField<T>) -> SpaceTimeSpectrum<T> {
    let grid = field.grid;
    let n = grid.spatial().len();
    let padded = 2 * grid.nodes();
    let mut spec = field.spatial_forward();
    spec.resize(padded * n, czero());
    time_fft(&mut spec, padded, n, Direction::Forward);
    let dt = grid.dt();
    spec.iter_mut().for_each(|v| *v = v.scale(dt));
    SpaceTimeSpectrum { grid, padded, values: spec }
}

/// Inverse of [`st_forward`]; the padding region is discarded.
pub fn st_inverse<T: Real>(spec: &SpaceTimeSpectrum<T>) -> Result<SpaceTimeField<T>> {
    let grid = spec.grid;
    let n = grid.spatial().len();
    if spec.values.len() != spec.padded * n || spec.padded < grid.nodes() {
        return Err(Error::Structural { expected: spec.padded * n, found: spec.values.len() });
    }
    let mut v = spec.values.clone();
    time_fft(&mut v, spec.padded, n, Direction::Inverse);
    let s = T::one() / (T::usize(spec.padded) * grid.dt());
    v.truncate(grid.nodes() * n);
    v.iter_mut().for_each(|x| *x = x.scale(s));
    SpaceTimeField::from_spatial_spectrum(grid, v)
}

fn time_fft<T: Real>(data: &mut [C<T>], m: usize, n: usize, dir: Direction) {
    let mut planner = FftPlanner::new();
    let fft = match dir {
        Direction::Forward => planner.plan_fft_forward(m),
        Direction::Inverse => planner.plan_fft_inverse(m),
    };
    let mut line = vec![czero::<T>(); m];
    for i in 0..n {
        for j in 0..m {
            line[j] = data[j * n + i];
        }
        fft.process(&mut line);
        for j in 0..m {
            data[j * n + i] = line[j];
        }
    }
}
