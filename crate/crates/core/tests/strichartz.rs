use std::f64::consts::PI;

use fermi_scatter::density::{random_hermitian, random_rank_one, sobolev_hs_norm, DensityMatrix, Mat};
use fermi_scatter::grid::{SpaceTimeField, SpaceTimeGrid, SpatialGrid};
use fermi_scatter::quad::gl_panel;
use fermi_scatter::real::{sphere_area, C};
use fermi_scatter::rng::seed_stream;
use fermi_scatter::strichartz::*;

fn p3(a0: f64, a1: f64, a2: f64) -> StrichartzParams {
    StrichartzParams::new(3, 0.5, a0, a1, a2)
}

#[test]
fn radial_moment_closed_forms() {
    // ∫ρ/(1+ρ²)² = 1/2, ∫1/(1+ρ²)² = π/4, ∫ρ/((1+ρ²)(4+ρ²)) = ln 4 / 6
    assert!((radial_moment(1, 1.0f64, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
    assert!((radial_moment(0, 1.0f64, 2.0, 1.0, 0.0) - PI / 4.0).abs() < 1e-12);
    assert!((radial_moment(1, 1.0f64, 1.0, 4.0, 1.0) - 4f64.ln() / 6.0).abs() < 1e-12);
    assert!(radial_moment(1, 1.0f64, 0.5, 2.0, 0.5).is_infinite());
}

#[test]
fn reduced_vanishes_for_negative_tau() {
    for tau in [-0.1, -1.0, -50.0] {
        for xi in [0.1, 1.0, 7.0] {
            assert_eq!(i_reduced(&p3(1.1, 1.1, 1.1), tau, xi).unwrap().exact, 0.0);
        }
    }
}

#[test]
fn reduced_below_surrogate() {
    let p = StrichartzParams::new(3, 0.45, 0.3, 0.9, 0.6);
    for tau in [0.0, 0.5, 3.0, 40.0] {
        for xi in [0.2f64, 1.0, 4.0, 30.0] {
            let r = i_reduced(&p, tau, xi).unwrap();
            let bound = 0.5 * xi.powf(2.0 * p.alpha_tilde - 1.0) * r.surrogate;
            assert!(r.exact <= bound * (1.0 + 1e-12), "τ={tau} ξ={xi}");
        }
    }
}

#[test]
fn reduced_one_dimensional_bounded() {
    let p = StrichartzParams::new(1, 0.5, 0.4, 0.7, 0.4);
    // ½⟨ξ⟩^{2α₀}/⟨ξ/2⟩^{2α₂} ≤ ½·4^{α₀} when α₀ ≤ α₂
    let bound = 0.5 * 4f64.powf(p.alpha0);
    let mut sup = 0.0f64;
    for i in 0..60 {
        let xi = 10f64.powf(-2.0 + i as f64 / 10.0);
        for c in [-2.0, 0.0, 0.5, 1.0, 2.0, 5.0] {
            sup = sup.max(i_reduced(&p, c * xi * xi, xi).unwrap().exact);
        }
    }
    assert!(sup > 0.0 && sup <= bound, "sup {sup} bound {bound}");
}

#[test]
fn reduced_matches_monte_carlo() {
    let p = p3(1.1, 1.1, 1.1);
    let exact = i_reduced(&p, 1.0, 1.0).unwrap().exact;
    let mut rng = seed_stream(11, 0);
    let mc = i_montecarlo(&p, 1.0, &[1.0, 0.0, 0.0], 400_000, 1e-3, &mut rng).unwrap();
    assert!(!mc.low_confidence);
    assert!((mc.value - exact).abs() < 0.02 * exact + 2.0 * mc.stderr, "{exact} vs {mc:?}");
    assert!((mc.value - exact).abs() < 0.02 * exact);
}

#[test]
fn monte_carlo_zero_for_negative_tau() {
    let mut rng = seed_stream(11, 1);
    let mc = i_montecarlo(&p3(1.1, 1.1, 1.1), -1.0, &[0.0, 1.0, 0.0], 20_000, 1e-3, &mut rng).unwrap();
    assert!(mc.value.abs() <= 2.0 * mc.stderr + 1e-300);
}

#[test]
fn monte_carlo_mollifier_converged() {
    let p = p3(1.1, 1.1, 1.1);
    let a = i_montecarlo(&p, 0.5, &[1.5, 0.0, 0.0], 200_000, 0.02, &mut seed_stream(3, 0)).unwrap();
    let b = i_montecarlo(&p, 0.5, &[1.5, 0.0, 0.0], 200_000, 0.01, &mut seed_stream(3, 0)).unwrap();
    assert!((a.value - b.value).abs() < 0.01 * b.value);
}

#[test]
fn monte_carlo_rejects_small_runs() {
    assert!(i_montecarlo(&p3(1.1, 1.1, 1.1), 1.0, &[1.0], 100, 1e-3, &mut seed_stream(0, 0)).is_err());
}

fn scan(p: &StrichartzParams) -> UniformBoundReport {
    let taus = [-4.0, 0.0, 0.5, 2.0, 10.0];
    let xis = [0.1, 0.5, 1.0, 3.0];
    uniform_bound_scan::<f64>(p, &taus, &xis).unwrap()
}

#[test]
fn uniform_scan_first_branch_flat() {
    let p = p3(0.2, 0.6, 0.6);
    assert!(p.in_regime());
    let r = scan(&p);
    println!("first branch slope {}", r.tail_slope);
    assert!(!r.growth, "slope {}", r.tail_slope);
    assert!(r.sup.is_finite());
}

#[test]
fn uniform_scan_borderline_branch_flat() {
    let p = p3(0.9, 1.0, 1.0);
    assert!(p.in_regime());
    assert!(!p3(1.0, 1.0, 1.0).in_regime());
    let r = scan(&p);
    println!("borderline slope {}", r.tail_slope);
    assert!(!r.growth, "slope {}", r.tail_slope);
}

#[test]
fn uniform_scan_third_branch_bounded() {
    let p = p3(1.1, 1.1, 1.1);
    let r = scan(&p);
    println!("third branch slope {}", r.tail_slope);
    // the profile approaches its limit like 1 - C·ξ^{-0.2}: bounded, not yet flat at ξ ≤ 10³
    let last = r.profile.last().unwrap().value;
    assert!(r.profile.iter().all(|q| q.value <= last * 1.0001));
    assert!(r.tail_slope > 0.0 && r.tail_slope < 0.15);
}

#[test]
fn uniform_scan_detects_over_regime() {
    for base in [p3(0.2, 0.6, 0.6), p3(0.9, 1.0, 1.0), p3(1.1, 1.1, 1.1)] {
        let p = StrichartzParams { alpha0: base.alpha0 + 0.3, ..base };
        assert!(!p.in_regime());
        let r = scan(&p);
        println!("over slope {}", r.tail_slope);
        assert!(r.growth && r.tail_slope >= 0.5, "slope {}", r.tail_slope);
    }
}

#[test]
fn dual_amplitude_zero_and_homogeneity() {
    let p = lowfreq_params(3, 0.4);
    let mut prof = lowfreq_profile(3, 4);
    let base = dual_lhs::<f64>(&prof, &p, DualQuadrature::default()).unwrap();
    prof.amplitude *= 2.0;
    let doubled = dual_lhs::<f64>(&prof, &p, DualQuadrature::default()).unwrap();
    assert!((doubled.lhs_sq - 4.0 * base.lhs_sq).abs() <= 1e-12 * doubled.lhs_sq);
    prof.amplitude = 0.0;
    assert_eq!(dual_lhs::<f64>(&prof, &p, DualQuadrature::default()).unwrap().lhs_sq, 0.0);
}

/// The untransformed definition in spherical coordinates around the origin:
/// ξ = r e₁, η = s(cos θ, sin θ ω), the box constraint on τ = r² − 2rs cos θ
/// cuts an interval out of cos θ.
fn lowfreq_direct(n: usize, p: &StrichartzParams) -> f64 {
    let nf = n as f64;
    let (big_r, eps) = (1.0 / nf, 1.0 / (nf * nf));
    let amp2 = nf.powi(5);
    let mut total = 0.0;
    for (u, wu) in gl_panel(0.0, 1.0, 40) {
        let r = big_r * u * u;
        let wr = wu * 2.0 * big_r * u * 4.0 * PI * r * r;
        let xi_w = r.powf(2.0 * p.alpha_tilde) * (1.0 + r * r).powf(p.alpha0);
        // cos θ ∈ [(r²−ε)/(2rs), (r²+ε)/(2rs)]; endpoints reach ±1 at these radii
        let mut cuts = [0.0, (r * r - eps).abs() / (2.0 * r), (r * r + eps) / (2.0 * r)];
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s_pts = Vec::new();
        for w in cuts.windows(2) {
            s_pts.extend(gl_panel(w[0], w[1], 40));
        }
        // tail in log s
        let s0 = cuts[2];
        for k in 0..60 {
            let (a, b) = ((s0.ln() + k as f64 * 0.5), (s0.ln() + (k + 1) as f64 * 0.5));
            s_pts.extend(gl_panel(a, b, 12).into_iter().map(|(l, w)| (l.exp(), w * l.exp())));
        }
        let mut inner = 0.0;
        for (s, ws) in s_pts {
            let lo = ((r * r - eps) / (2.0 * r * s)).max(-1.0);
            let hi = ((r * r + eps) / (2.0 * r * s)).min(1.0);
            if hi <= lo {
                continue;
            }
            for (c, wc) in gl_panel(lo, hi, 24) {
                let e2 = 1.0 + s * s;
                let x2 = 1.0 + r * r + s * s - 2.0 * r * s * c;
                inner += ws * wc * 2.0 * PI * s * s / (e2.powf(p.alpha1) * x2.powf(p.alpha2));
            }
        }
        total += wr * xi_w * inner;
    }
    amp2 * total
}

#[test]
fn dual_matches_direct_definition() {
    let p = lowfreq_params(3, 0.4);
    let v = dual_lhs::<f64>(&lowfreq_profile(3, 4), &p, DualQuadrature::default()).unwrap();
    let direct = lowfreq_direct(4, &p);
    println!("dual {} direct {}", v.lhs_sq, direct);
    assert!((v.lhs_sq - direct).abs() < 0.02 * direct);
    // ‖Ṽ_n‖² = n⁵ · 2/n² · (4π/3)/n³
    assert!((v.v_norm_sq - 8.0 * PI / 3.0).abs() < 1e-12);
}

const NS: [usize; 4] = [4, 8, 16, 32];

#[test]
fn lowfreq_rates() {
    for at in [0.3, 0.4, 0.45, 0.5] {
        let r = probe_lowfreq::<f64>(3, at, &NS).unwrap();
        println!("α̃={at}: slope {} pred {} r2 {}", r.slope, r.predicted, r.r2);
        assert!(r.pass, "{r:?}");
        // a flat profile has no trend for R² to measure
        if at < 0.5 {
            assert!(r.flags.is_empty(), "{r:?}");
        }
    }
    assert!(probe_lowfreq::<f64>(3, 0.4, &[4, 8]).is_err());
}

#[test]
fn highfreq_rates() {
    for p in [p3(0.2, 0.6, 0.6), p3(0.5, 0.6, 0.6), p3(0.5, 1.5, 0.3), p3(0.5, 0.3, 1.5)] {
        let r = probe_highfreq::<f64>(&p, &NS).unwrap();
        println!("{p:?}: slope {} pred {} r2 {}", r.slope, r.predicted, r.r2);
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn slope_report_json_keys() {
    let r = probe_lowfreq::<f64>(3, 0.4, &[4, 8, 16]).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for k in ["n", "value", "slope", "r2", "predicted", "pass"] {
        assert!(v.get(k).is_some(), "{k}");
    }
}

fn grid8() -> SpatialGrid<f64> {
    SpatialGrid::with_default_length(3, 8).unwrap()
}

#[test]
fn density_ratio_plane_wave_zero() {
    let g = grid8();
    let gamma = DensityMatrix::plane_wave(g, 37);
    let r = density_strichartz_ratio(&gamma, &p3(1.1, 1.1, 1.1), 8.0, 16).unwrap();
    assert!(r.abs() < 1e-14);
    assert!(density_strichartz_ratio(&DensityMatrix::zeros(g), &p3(1.1, 1.1, 1.1), 8.0, 16).is_err());
}

/// Independent route: densities from the position kernel of each evolved slice.
fn density_ratio_position(gamma: &DensityMatrix<f64>, p: &StrichartzParams, horizon: f64, nt: usize) -> f64 {
    use fermi_scatter::density::{density, free_conjugate};
    use fermi_scatter::grid::{transform, Direction};
    let g = gamma.grid;
    let dt = horizon / nt as f64;
    let mut acc = 0.0;
    for j in 0..=nt {
        let rho = transform(&density(&free_conjugate(gamma, dt * j as f64)), Direction::Forward).unwrap();
        let s: f64 = (0..g.len())
            .map(|q| {
                let k = g.k_abs(q);
                k.powf(2.0 * p.alpha_tilde) * (1.0 + k * k).powf(p.alpha0) * rho.values[q].norm_sqr()
            })
            .sum();
        acc += if j == 0 || j == nt { dt / 2.0 } else { dt } * s;
    }
    (acc / g.volume()).sqrt() / sobolev_hs_norm(gamma, p.alpha1, p.alpha2)
}

#[test]
fn density_ratio_matches_position_route() {
    let g = SpatialGrid::with_default_length(2, 8).unwrap();
    let p = StrichartzParams::new(2, 0.5, 0.3, 0.8, 0.8);
    let gamma = random_hermitian(g, &mut seed_stream(5, 0), |k: f64| (1.0 + k * k).powf(-1.0));
    let a = density_strichartz_ratio(&gamma, &p, 8.0, 20).unwrap();
    let b = density_ratio_position(&gamma, &p, 8.0, 20);
    assert!((a - b).abs() < 1e-10 * b, "{a} {b}");
}

fn ensemble(p: &StrichartzParams, members: u64, nt: usize, rank_one: bool) -> Vec<f64> {
    let g = grid8();
    (0..members)
        .map(|i| {
            let mut rng = seed_stream(2024, i);
            let env = |k: f64| (1.0 + k * k).powf(-1.0);
            let gamma = if rank_one { random_rank_one(g, &mut rng, env) } else { random_hermitian(g, &mut rng, env) };
            density_strichartz_ratio(&gamma, p, 8.0, nt).unwrap()
        })
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s[s.len() / 2]
}

#[test]
fn density_ratio_ensemble_stable() {
    for (p, rank_one) in [(p3(1.1, 1.1, 1.1), false), (p3(0.3, 1.5, 0.3), true)] {
        let coarse = ensemble(&p, 8, 16, rank_one);
        let fine = ensemble(&p, 8, 32, rank_one);
        let max_c = coarse.iter().cloned().fold(0.0, f64::max);
        let max_f = fine.iter().cloned().fold(0.0, f64::max);
        assert!(coarse.iter().all(|r| r.is_finite() && *r > 0.0));
        assert!(max_c <= 3.0 * median(&coarse));
        assert!((max_c - max_f).abs() < 0.1 * max_f, "{max_c} {max_f}");
    }
}

#[test]
fn smoothing_zero_potential_flagged() {
    let st = SpaceTimeGrid::new(SpatialGrid::with_default_length(1, 16).unwrap(), 2.0, 8).unwrap();
    let r = smoothing_ratio(&SpaceTimeField::zeros(st), 1.0, 1.0).unwrap();
    assert!(r.degenerate && r.ratio == 0.0);
}

#[test]
fn smoothing_single_slice_closed_form() {
    let sp = SpatialGrid::<f64>::with_default_length(2, 8).unwrap();
    let st = SpaceTimeGrid::new(sp, 4.0, 8).unwrap();
    let j = 3;
    let t = st.time(j);
    let v = SpaceTimeField::from_fn(st, |s: f64, x: [f64; 3]| {
        if (s - t).abs() < 1e-12 { C::new((-0.02 * (x[0] * x[0] + x[1] * x[1])).exp() + 0.3 * x[0].sin(), 0.0) } else { C::new(0.0, 0.0) }
    });
    let r = smoothing_ratio(&v, 0.7, 1.2).unwrap();
    // dt · ‖⟨∇⟩^{-α₁} V_j ⟨∇⟩^{-α₂}‖_{S²}; conjugation by the unitary free flow leaves it unchanged
    let slice = v.slice(j);
    let op = Mat::from_fn(sp.len(), sp.len(), |a, b| if a == b { slice[a] } else { C::new(0.0, 0.0) });
    let direct = st.dt() * sobolev_hs_norm(&DensityMatrix::from_operator(sp, op, true), -0.7, -1.2);
    let d = 2.0f64;
    let mixed = st.dt().sqrt() * {
        let dv = sp.volume_element();
        let q: f64 = 2.0 * d / (d + 1.0);
        (slice.iter().map(|z| z.norm().powf(q)).sum::<f64>() * dv).powf(1.0 / q)
    };
    assert!((r.numerator - direct).abs() < 1e-9 * direct, "{} {}", r.numerator, direct);
    assert!((r.ratio - direct / mixed).abs() < 1e-6 * r.ratio);
}

#[test]
fn smoothing_rejects_complex_potential() {
    let st = SpaceTimeGrid::new(SpatialGrid::with_default_length(1, 8).unwrap(), 1.0, 8).unwrap();
    let v = SpaceTimeField::from_fn(st, |_, _| C::new(0.0, 1.0));
    assert!(smoothing_ratio(&v, 1.0, 1.0).is_err());
}

#[test]
fn smoothing_ensemble_stable() {
    let sp = SpatialGrid::with_default_length(2, 8).unwrap();
    let ratio = |seed: u64, nt: usize| {
        use rand::Rng;
        let mut rng = seed_stream(77, seed);
        let (a, b, c): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let st = SpaceTimeGrid::new(sp, 4.0, nt).unwrap();
        let v = SpaceTimeField::from_fn(st, |t, x| {
            C::new((1.0 + a * (t * b).cos()) * (-0.01 * (1.0 + c) * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        smoothing_ratio(&v, 1.0, 1.0).unwrap().ratio
    };
    let coarse: Vec<f64> = (0..6).map(|s| ratio(s, 16)).collect();
    let fine: Vec<f64> = (0..6).map(|s| ratio(s, 32)).collect();
    let mc = coarse.iter().cloned().fold(0.0, f64::max);
    let mf = fine.iter().cloned().fold(0.0, f64::max);
    assert!((mc - mf).abs() < 0.1 * mf, "{mc} {mf}");
    assert!(sphere_area(1) > 0.0);
}
