//! Quadrature rules, interpolation and fitting helpers shared by the modules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::real::Real;

/// Gauss–Legendre nodes and weights on [-1, 1], memoised per order.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(legendre_rule(n));
    cache.lock().unwrap().insert(n, rule.clone());
    rule
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Nodes/weights of an `n`-point Gauss–Legendre rule mapped to [a, b].
pub fn gl_panel<T: Real>(a: T, b: T, n: usize) -> Vec<(T, T)> {
    let rule = gauss_legendre(n);
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    rule.0
        .iter()
        .zip(rule.1.iter())
        .map(|(&x, &w)| (mid + half * T::lit(x), half * T::lit(w)))
        .collect()
}

/// Gauss–Legendre on [a, b] after the endpoint-flattening change of variables
/// `x = a + (b-a)·φ(u)`, `φ'(u) = 140u³(1-u)³`. Integrable log or power
/// singularities at either endpoint are damped to `u³·(…)`.
pub fn smooth_panel<T: Real>(a: T, b: T, n: usize) -> Vec<(T, T)> {
    let rule = gauss_legendre(n);
    let len = b - a;
    rule.0
        .iter()
        .zip(rule.1.iter())
        .map(|(&x, &w)| {
            let u = 0.5 * (x + 1.0);
            let phi = u.powi(4) * (35.0 - 84.0 * u + 70.0 * u * u - 20.0 * u * u * u);
            let dphi = 140.0 * (u * (1.0 - u)).powi(3);
            (a + len * T::lit(phi), len * T::lit(0.5 * w * dphi))
        })
        .collect()
}

/// Smoothed panels over consecutive breakpoints (sorted, duplicates skipped).
pub fn smooth_panels<T: Real>(breaks: &[T], n: usize) -> Vec<(T, T)> {
    let mut out = Vec::with_capacity(breaks.len() * n);
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            out.extend(smooth_panel(w[0], w[1], n));
        }
    }
    out
}

/// Composite Gauss–Legendre with `panels` equal panels on [a, b].
pub fn composite_gl<T: Real>(a: T, b: T, panels: usize, n: usize) -> Vec<(T, T)> {
    let h = (b - a) / T::usize(panels);
    (0..panels)
        .flat_map(|p| gl_panel(a + h * T::usize(p), a + h * T::usize(p + 1), n))
        .collect()
}

/// Trapezoid weights for nodes 0..=j with spacing `dt`.
pub fn trapezoid_weight<T: Real>(i: usize, j: usize, dt: T) -> T {
    if j == 0 {
        T::zero()
    } else if i == 0 || i == j {
        dt / T::lit(2.0)
    } else {
        dt
    }
}

/// Natural cubic spline on a uniform grid starting at `x0`.
#[derive(Debug, Clone)]
pub struct UniformSpline<T> {
    x0: T,
    h: T,
    y: Vec<T>,
    m: Vec<T>,
}

impl<T: Real> UniformSpline<T> {
    pub fn new(x0: T, h: T, y: Vec<T>) -> Self {
        let n = y.len();
        assert!(n >= 3, "spline needs at least three samples");
        // second derivatives via the tridiagonal system with m_0 = m_{n-1} = 0
        let mut m = vec![T::zero(); n];
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let six = T::lit(6.0) / (h * h);
        for i in 1..n - 1 {
            let rhs = six * (y[i + 1] - y[i] * T::lit(2.0) + y[i - 1]);
            let denom = T::lit(4.0) - c[i - 1];
            c[i] = T::one() / denom;
            d[i] = (rhs - d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        Self { x0, h, y, m }
    }

    pub fn x_max(&self) -> T {
        self.x0 + self.h * T::usize(self.y.len() - 1)
    }

    pub fn eval(&self, x: T) -> T {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).max(T::zero());
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let t = s - T::usize(i);
        let u = T::one() - t;
        let h2 = self.h * self.h / T::lit(6.0);
        u * self.y[i]
            + t * self.y[i + 1]
            + h2 * ((u * u * u - u) * self.m[i] + (t * t * t - t) * self.m[i + 1])
    }

    pub fn derivative(&self, x: T) -> T {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).max(T::zero());
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let t = s - T::usize(i);
        let u = T::one() - t;
        let three = T::lit(3.0);
        (self.y[i + 1] - self.y[i]) / self.h
            + self.h / T::lit(6.0)
                * (-(three * u * u - T::one()) * self.m[i] + (three * t * t - T::one()) * self.m[i + 1])
    }
}

/// Least-squares line through (ln x, ln y): returns (slope, intercept, r²).
pub fn log_log_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}
