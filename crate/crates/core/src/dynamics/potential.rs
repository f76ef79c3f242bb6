use crate::error::{param, Error, Result};
use crate::grid::{SpaceTimeField, SpaceTimeGrid};
use crate::real::{Real, C};
use crate::response::RadialSymbol;

/// Real potential `V(t_j, x_i)` on a space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTrajectory<T: Real> {
    pub grid: SpaceTimeGrid<T>,
    pub values: Vec<T>,
}

impl<T: Real> PotentialTrajectory<T> {
    pub fn new(grid: SpaceTimeGrid<T>, values: Vec<T>) -> Result<Self> {
        let expected = grid.nodes() * grid.spatial().len();
        if values.len() != expected {
            return Err(Error::Structural { expected, found: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid<T>) -> Self {
        let n = grid.nodes() * grid.spatial().len();
        Self { grid, values: vec![T::zero(); n] }
    }

    pub fn from_fn(grid: SpaceTimeGrid<T>, f: impl Fn(T, [T; 3]) -> T) -> Self {
        let sp = *grid.spatial();
        let values = (0..grid.nodes())
            .flat_map(|j| {
                let t = grid.time(j);
                (0..sp.len()).map(move |i| (t, i))
            })
            .map(|(t, i)| f(t, sp.position(i)))
            .collect();
        Self { grid, values }
    }

    /// Real part of a field whose imaginary part is below `1e-12` of its size.
    pub fn from_field(field: &SpaceTimeField<T>) -> Result<Self> {
        let scale = field.values.iter().fold(T::one(), |m, z| m.max(z.re.mag()));
        let im = field.max_imag();
        if im > T::lit(1e-12) * scale {
            return param(format!("potential must be real (imaginary part {:e})", im.to_f()));
        }
        Ok(Self { grid: field.grid, values: field.values.iter().map(|z| z.re).collect() })
    }

    /// `V = w₁ ∗ φ`, by multiplying the spatial spectrum with `ŵ₁(|k|)`.
    pub fn from_phi(phi: &SpaceTimeField<T>, w1: &RadialSymbol) -> Result<Self> {
        Self::from_field(&convolve(phi, w1)?)
    }

    /// `count` pulsating Gaussian bumps at random centres, scaled to `‖V‖ = size`.
    pub fn random_bumps<R: rand::Rng>(grid: SpaceTimeGrid<T>, rng: &mut R, count: usize, size: T) -> Self {
        let sp = *grid.spatial();
        let len = sp.length().to_f();
        let bumps: Vec<([f64; 3], f64, f64)> = (0..count)
            .map(|_| {
                let c = std::array::from_fn(|_| rng.random::<f64>() * len);
                (c, 0.5 + rng.random::<f64>(), 2.0 * rng.random::<f64>())
            })
            .collect();
        let v = Self::from_fn(grid, |t, x| {
            let t = t.to_f();
            let s: f64 = bumps
                .iter()
                .map(|(c, a, w)| {
                    let r2: f64 = (0..sp.dim())
                        .map(|i| {
                            let d = (x[i].to_f() - c[i]).rem_euclid(len);
                            let d = d.min(len - d);
                            d * d
                        })
                        .sum();
                    a * (1.0 + 0.5 * (w * t).cos()) * (-r2 / 8.0).exp()
                })
                .sum();
            T::lit(s)
        });
        let n = v.norm();
        if n > T::zero() {
            v.scaled(size / n)
        } else {
            v
        }
    }

    pub fn to_field(&self) -> SpaceTimeField<T> {
        SpaceTimeField { grid: self.grid, values: self.values.iter().map(|&v| C::new(v, T::zero())).collect() }
    }

    pub fn slice(&self, j: usize) -> &[T] {
        let n = self.grid.spatial().len();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| v * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == T::zero())
    }

    /// `‖V‖_{L²_t L^d_x}`.
    pub fn norm(&self) -> T {
        self.to_field().mixed_norm(self.grid.spatial().dim() as f64)
    }
}

/// Spatial convolution with a radial kernel given by its symbol.
pub fn convolve<T: Real>(f: &SpaceTimeField<T>, w: &RadialSymbol) -> Result<SpaceTimeField<T>> {
    let sp = *f.grid.spatial();
    let n = sp.len();
    let symbol: Vec<T> = (0..n).map(|k| w.eval(sp.k_abs(k))).collect();
    let mut spec = f.spatial_forward();
    for (i, z) in spec.iter_mut().enumerate() {
        *z = z.scale(symbol[i % n]);
    }
    SpaceTimeField::from_spatial_spectrum(f.grid, spec)
}

