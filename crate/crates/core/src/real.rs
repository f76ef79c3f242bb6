use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Scalar type for every numerical routine in the crate.
///
/// `RealField` brings the transcendental functions, `FftNum` the FFT
/// support. Both traits define `abs`, so use [`Real::mag`] instead.
pub trait Real:
    RealField + FftNum + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + 'static
{
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn to_f(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn mag(self) -> Self {
        <Self as ComplexField>::abs(self)
    }

    #[inline]
    fn usize(n: usize) -> Self {
        Self::from_usize(n).expect("index not representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    C::new(theta.cos(), theta.sin())
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}

#[inline]
pub fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

/// `⟨x⟩ = (1+x²)^{1/2}`.
#[inline]
pub fn japanese<T: Real>(x: T) -> T {
    (T::one() + x * x).sqrt()
}

/// Surface measure of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    // |S^k| = 2 π^{(k+1)/2} / Γ((k+1)/2)
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Gamma function for positive half-integers and reals via Lanczos.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_table() {
        let pi = std::f64::consts::PI;
        assert!((sphere_area(0) - 2.0).abs() < 1e-13);
        assert!((sphere_area(1) - 2.0 * pi).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * pi).abs() < 1e-12);
        assert!((sphere_area(3) - 2.0 * pi * pi).abs() < 1e-12);
    }

    #[test]
    fn generic_helpers() {
        assert_eq!(<f32 as Real>::lit(1.5), 1.5f32);
        assert_eq!((-2.0f64).mag(), 2.0);
        assert!((cabs(cis(0.3f64)) - 1.0).abs() < 1e-15);
    }
}
