use fermi_scatter::density::{free_conjugate, random_packets, sobolev_hs_norm, DensityMatrix, SobolevWeights};
use fermi_scatter::grid::{SpaceTimeField, SpaceTimeGrid, SpatialGrid};
use fermi_scatter::real::C;
use fermi_scatter::response::{gcheck_table, mf_spectral, Potential, RadialSymbol, ReferenceState};
use fermi_scatter::rng::seed_stream;
use fermi_scatter::solver::*;
use fermi_scatter::Error;
use rand::Rng;
use std::f64::consts::PI;

fn fd11() -> ReferenceState<f64> {
    ReferenceState::fermi_dirac(1.0, 1.0).unwrap()
}

fn potential() -> Potential {
    Potential {
        w1: RadialSymbol::Gaussian { a: 1.0, sigma: 0.5 },
        w2: RadialSymbol::VanishingOrigin { a: 1.0, sigma: 0.5 },
    }
}

fn weights() -> SobolevWeights {
    SobolevWeights { alpha: 1.1, beta_decay: 3.0, beta0: 0.5 }
}

/// d = 3, 4³ points on a box of side 8π, T = 4.
fn small_grid() -> SpaceTimeGrid<f64> {
    SpaceTimeGrid::new(SpatialGrid::new(3, 4, 8.0 * PI).unwrap(), 4.0, 16).unwrap()
}

fn config() -> SolverConfig<f64> {
    SolverConfig::new(fd11(), potential(), weights(), small_grid())
}

/// Smooth random real field: a few travelling Gaussian bumps.
fn random_phi(grid: SpaceTimeGrid<f64>, seed: u64, size: f64) -> SpaceTimeField<f64> {
    let mut rng = seed_stream(seed, 0);
    let len = grid.spatial().length();
    let bumps: Vec<([f64; 3], [f64; 3], f64)> = (0..3)
        .map(|_| {
            let c = [rng.random::<f64>() * len, rng.random::<f64>() * len, rng.random::<f64>() * len];
            let v = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            (c, v, rng.random::<f64>() * 2.0 - 1.0)
        })
        .collect();
    let f = SpaceTimeField::from_fn(grid, |t, x| {
        let s: f64 = bumps
            .iter()
            .map(|(c, v, a)| {
                let d2: f64 = (0..3)
                    .map(|i| {
                        let d = (x[i] - c[i] - v[i] * t).rem_euclid(len);
                        let d = d.min(len - d);
                        d * d
                    })
                    .sum();
                a * (-d2 / 40.0).exp() * (1.0 + 0.3 * (0.7 * t).cos())
            })
            .sum();
        C::new(s, 0.0)
    });
    let n = f.l2_norm();
    f.scaled(size / n)
}

fn rel(a: &SpaceTimeField<f64>, b: &SpaceTimeField<f64>) -> f64 {
    a.axpy(C::new(-1.0, 0.0), b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
}

fn packets(grid: SpatialGrid<f64>, seed: u64, size: f64) -> DensityMatrix<f64> {
    let q = random_packets(grid, &mut seed_stream(seed, 0), 2, 2.0);
    let s = sobolev_hs_norm(&q, weights().alpha, weights().alpha);
    q.scaled(size / s)
}

#[test]
fn apply_l_vanishes_on_zero_and_is_linear() {
    let g = small_grid();
    let k = ResponseKernel::lattice(&fd11(), &potential(), g);
    let zero = k.apply(&SpaceTimeField::zeros(g)).unwrap();
    assert!(zero.values.iter().all(|z| z.norm() == 0.0));
    let (a, b) = (random_phi(g, 1, 1.0), random_phi(g, 2, 1.0));
    let (la, lb) = (k.apply(&a).unwrap(), k.apply(&b).unwrap());
    let (x, y) = (C::new(0.7, -0.2), C::new(-1.3, 0.4));
    let mix = SpaceTimeField::zeros(g).axpy(x, &a).unwrap().axpy(y, &b).unwrap();
    let lhs = k.apply(&mix).unwrap();
    let rhs = SpaceTimeField::zeros(g).axpy(x, &la).unwrap().axpy(y, &lb).unwrap();
    assert!(rel(&lhs, &rhs) < 1e-12, "{}", rel(&lhs, &rhs));
}

/// `Lφ = −w₂ ∗ ρ[e^{itΔ}(W⁽¹⁾γ_f + γ_fW⁽¹⁾*)e^{-itΔ}]`, the first-order part of
/// the density response, evaluated through the wave series.
#[test]
fn lattice_kernel_is_the_first_order_density_response() {
    let g = small_grid();
    let phi = random_phi(g, 3, 1.0);
    let l = apply_l(&phi, &fd11(), &potential()).unwrap();
    let a10 = apply_a(&phi, 1, 0, &fd11(), &potential()).unwrap();
    let a01 = apply_a(&phi, 0, 1, &fd11(), &potential()).unwrap();
    let first = a10.axpy(C::new(1.0, 0.0), &a01).unwrap().scaled(-1.0);
    assert!(rel(&l, &first) < 1e-10, "{}", rel(&l, &first));
    assert!(l.max_imag() < 1e-12 * l.l2_norm());
}

/// On a fine 1-d lattice the grid kernel is a Riemann sum for the continuum
/// kernel `2 sin(u|q|²) ǧ(2u|q|)`.
#[test]
fn lattice_kernel_approaches_the_continuum_kernel() {
    let sp = SpatialGrid::new(1, 256, 16.0 * PI).unwrap();
    let g = SpaceTimeGrid::new(sp, 4.0, 32).unwrap();
    let table = gcheck_table(&fd11(), 1, 130.0, 26000).unwrap();
    let pot = potential();
    let lat = ResponseKernel::lattice(&fd11(), &pot, g);
    let cont = ResponseKernel::continuum(&table, &pot, g).unwrap();
    let lags = g.nodes();
    let mut worst = 0.0f64;
    for q in [1usize, 2, 4, 8, 16] {
        for u in 0..lags {
            let (a, b) = (lat.values[q * lags + u], cont.values[q * lags + u]);
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn continuum_kernel_needs_table_reach() {
    let g = small_grid();
    let table = gcheck_table(&fd11(), 3, 2.0, 400).unwrap();
    assert!(matches!(ResponseKernel::continuum(&table, &potential(), g), Err(Error::Range { .. })));
}

/// A single space-time mode `e^{iωt}e^{ik·x}`: after the kernel has decayed the
/// response is `ŵ(k) m_f(ω, |k|)` times the input.
#[test]
fn single_mode_response_matches_the_multiplier() {
    let sp = SpatialGrid::new(3, 4, 8.0 * PI).unwrap();
    let g = SpaceTimeGrid::new(sp, 24.0, 1200).unwrap();
    let table = gcheck_table(&fd11(), 3, 80.0, 8000).unwrap();
    let pot = potential();
    let kernel = ResponseKernel::continuum(&table, &pot, g).unwrap();
    let mode = sp.flat_index([2, 0, 0]);
    let kf = sp.frequency(mode);
    let k_abs = sp.k_abs(mode);
    for omega in [-1.0, 0.3, 2.0] {
        let phi = SpaceTimeField::from_fn(g, |t, x| {
            let ph = omega * t + kf[0] * x[0] + kf[1] * x[1] + kf[2] * x[2];
            C::new(ph.cos(), ph.sin())
        });
        let out = kernel.apply(&phi).unwrap();
        let j = g.nt();
        let i = 5;
        let ratio = out.values[j * sp.len() + i] / phi.values[j * sp.len() + i];
        let expected = mf_spectral(&fd11(), 3, omega, k_abs, 48).unwrap() * pot.w_hat(k_abs);
        let err = (ratio - expected).norm() / expected.norm();
        assert!(err < 0.05, "ω = {omega}: {ratio} vs {expected} ({err})");
    }
}

#[test]
fn causal_solve_inverts_one_plus_l() {
    let g = small_grid();
    let k = ResponseKernel::lattice(&fd11(), &potential(), g);
    let zero = k.solve(&SpaceTimeField::zeros(g)).unwrap();
    assert!(zero.values.iter().all(|z| z.norm() == 0.0));
    for seed in 0..4 {
        let mut rng = seed_stream(40 + seed, 0);
        let values = (0..g.nodes() * g.spatial().len()).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let psi = SpaceTimeField::new(g, values).unwrap();
        let phi = k.solve(&psi).unwrap();
        let back = phi.axpy(C::new(1.0, 0.0), &k.apply(&phi).unwrap()).unwrap();
        assert!(rel(&back, &psi) < 1e-10, "{}", rel(&back, &psi));
    }
    let none = Potential { w1: RadialSymbol::zero(), ..potential() };
    let psi = random_phi(g, 5, 1.0);
    assert_eq!(solve_one_plus_l(&psi, &fd11(), &none).unwrap(), psi);
}

#[test]
fn a_terms_vanish_scale_and_are_real_on_the_diagonal() {
    let g = small_grid();
    let zero = SpaceTimeField::zeros(g);
    for (m, n) in [(1, 1), (1, 2), (2, 2)] {
        let a = apply_a(&zero, m, n, &fd11(), &potential()).unwrap();
        assert!(a.values.iter().all(|z| z.norm() == 0.0));
    }
    let phi = random_phi(g, 6, 0.3);
    let lambda = 1.7;
    for (m, n) in [(1, 1), (2, 1), (1, 3), (2, 2)] {
        let a = apply_a(&phi, m, n, &fd11(), &potential()).unwrap();
        let b = apply_a(&phi.scaled(lambda), m, n, &fd11(), &potential()).unwrap();
        let scaled = a.scaled(lambda.powi((m + n) as i32));
        assert!(rel(&b, &scaled) < 1e-10, "({m},{n}): {}", rel(&b, &scaled));
        if m == n {
            assert!(a.max_imag() < 1e-10 * a.l2_norm(), "({m},{n}) imaginary part {}", a.max_imag());
        }
    }
}

#[test]
fn b_reduces_to_free_flow_and_is_lipschitz_linear_in_q0() {
    let g = small_grid();
    let sp = *g.spatial();
    let pot = potential();
    let zero = SpaceTimeField::zeros(g);
    let q0 = packets(sp, 7, 1e-2);
    let nothing = apply_b(&random_phi(g, 8, 0.1), &DensityMatrix::zeros(sp), &pot, 2).unwrap();
    assert!(nothing.values.iter().all(|z| z.norm() == 0.0));

    // φ = 0: w₂ ∗ ρ[e^{itΔ}Q0e^{-itΔ}]
    let free = apply_b(&zero, &q0, &pot, 1).unwrap();
    let mut rho = Vec::new();
    for j in 0..g.nodes() {
        rho.extend(free_conjugate(&q0, g.time(j)).kernel.diagonal().iter().copied());
    }
    let oracle = fermi_scatter::dynamics::convolve(&SpaceTimeField::new(g, rho).unwrap(), &pot.w2).unwrap();
    assert!(rel(&free, &oracle) < 1e-12, "{}", rel(&free, &oracle));
    let series = apply_b_series(&zero, &q0, &pot, 6).unwrap();
    assert!(rel(&series, &oracle) < 1e-12);

    // splitting and truncated series agree for a small potential
    let phi = random_phi(g, 9, 0.05);
    let split = apply_b(&phi, &q0, &pot, 8).unwrap();
    let series = apply_b_series(&phi, &q0, &pot, 6).unwrap();
    assert!(rel(&series, &split) < 1e-3, "{}", rel(&series, &split));

    // Lipschitz constants over an ensemble; B is linear in Q0, so K doubles with it
    let lip = |q: &DensityMatrix<f64>| {
        (0..4)
            .map(|s| {
                let (a, b) = (random_phi(g, 100 + s, 0.05), random_phi(g, 200 + s, 0.05));
                let da = apply_b_series(&a, q, &pot, 6).unwrap();
                let db = apply_b_series(&b, q, &pot, 6).unwrap();
                da.axpy(C::new(-1.0, 0.0), &db).unwrap().l2_norm() / a.axpy(C::new(-1.0, 0.0), &b).unwrap().l2_norm()
            })
            .collect::<Vec<f64>>()
    };
    let k1 = lip(&q0);
    let k2 = lip(&q0.scaled(2.0));
    for (a, b) in k1.iter().zip(&k2) {
        assert!(a.is_finite() && *a > 0.0);
        assert!((b / a - 2.0).abs() < 1e-8, "{a} {b}");
    }
}

#[test]
fn gamma_vanishes_without_data() {
    let cfg = config();
    let sp = *cfg.grid.spatial();
    let out = gamma_map(&SpaceTimeField::zeros(cfg.grid), &DensityMatrix::zeros(sp), &cfg).unwrap();
    assert!(out.values.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn series_pairs_cover_the_expansion() {
    let p = series_pairs(4);
    assert_eq!(p.len(), 12);
    assert!(p.iter().all(|&(m, n)| (2..=4).contains(&(m + n))));
    assert!(p.contains(&(0, 2)) && p.contains(&(4, 0)) && !p.contains(&(1, 0)));
}

/// Ball invariance: with `R = 2‖Γ(0)‖`, random `φ` in the ball map into it.
#[test]
fn gamma_maps_the_ball_into_itself() {
    let cfg = config();
    let q0 = packets(*cfg.grid.spatial(), 10, 1e-2);
    let map = GammaMap::new(&q0, &cfg).unwrap();
    let r = 2.0 * map.eval(&SpaceTimeField::zeros(cfg.grid)).unwrap().value.l2_norm();
    assert!(r > 0.0);
    for s in 0..4 {
        let phi = random_phi(cfg.grid, 300 + s, r * (0.25 + 0.25 * s as f64));
        let out = map.eval(&phi).unwrap();
        assert!(out.value.l2_norm() <= r, "‖Γ(φ)‖ = {} > R = {r}", out.value.l2_norm());
        assert!(out.imag_residual < REALNESS_TOLERANCE);
    }
}

#[test]
fn truncation_order_is_converged_for_small_phi() {
    let cfg = config();
    let q0 = packets(*cfg.grid.spatial(), 11, 1e-2);
    let phi = random_phi(cfg.grid, 12, 0.1);
    let a = gamma_map(&phi, &q0, &cfg).unwrap();
    let mut more = cfg.clone();
    more.series_order += 2;
    let b = gamma_map(&phi, &q0, &more).unwrap();
    assert!(rel(&a, &b) < 1e-4, "{}", rel(&a, &b));
}

#[test]
fn picard_trivial_data() {
    let cfg = config();
    let rec = picard_solve(&DensityMatrix::zeros(*cfg.grid.spatial()), &cfg).unwrap();
    assert_eq!(rec.iterates.len(), 1);
    assert!(rec.converged && rec.phi.l2_norm() == 0.0);
    let rep = postsolve_verify(&rec, &cfg, false).unwrap();
    assert_eq!(rep.residual, 0.0);
    assert_eq!(rep.global_bound, 0.0);
    assert!(rep.scattering.rows.iter().all(|r| r.s == 0.0));
}

#[test]
fn picard_small_data_converges_and_scales_linearly() {
    let cfg = config();
    let sp = *cfg.grid.spatial();
    let rec = picard_solve(&packets(sp, 13, 1e-2), &cfg).unwrap();
    assert!(rec.converged && rec.audit.pass);
    assert!(rec.iterates.len() <= 15);
    assert!(rec.max_ratio().unwrap() <= 0.5, "{:?}", rec.iterates);
    let rep = postsolve_verify(&rec, &cfg, false).unwrap();
    assert!(rep.residual < RESIDUAL_TARGET, "{}", rep.residual);
    let chain = rep.chain.unwrap();
    assert!(chain.consistent && chain.lhs > 0.0, "{chain:?}");

    let doubled = picard_solve(&packets(sp, 13, 2e-2), &cfg).unwrap();
    let growth = doubled.phi.l2_norm() / rec.phi.l2_norm();
    assert!((growth / 2.0 - 1.0).abs() < 0.2, "{growth}");
}

#[test]
fn picard_reports_divergence_for_large_data() {
    let mut cfg = config();
    cfg.override_audit = true;
    cfg.potential.w1 = RadialSymbol::Gaussian { a: 30.0, sigma: 0.5 };
    cfg.max_iter = 20;
    // the same coupling contracts for moderate data ...
    let rec = picard_solve(&packets(*cfg.grid.spatial(), 14, 10.0), &cfg).unwrap();
    assert!(rec.converged && rec.max_ratio().unwrap() < 1.0);
    // ... and blows up for large data
    match picard_solve(&packets(*cfg.grid.spatial(), 14, 100.0), &cfg) {
        Err(Error::Divergence { consecutive, last_ratio }) => assert!(consecutive >= 1 && last_ratio > 1.0),
        other => panic!("expected divergence, got {:?}", other.map(|r| r.iterates)),
    }
}

#[test]
fn audit_failure_blocks_unless_overridden() {
    let mut cfg = config();
    cfg.potential.w2 = RadialSymbol::Gaussian { a: 1.0, sigma: 0.5 };
    let q0 = DensityMatrix::zeros(*cfg.grid.spatial());
    assert!(matches!(picard_solve(&q0, &cfg), Err(Error::Parameter(_))));
    cfg.override_audit = true;
    let rec = picard_solve(&q0, &cfg).unwrap();
    assert!(rec.audit.overridden && !rec.audit.failing.is_empty());
    assert!(rec.warnings.iter().any(|w| w.contains("overridden")));
}

#[test]
fn summary_has_artifact_keys() {
    let cfg = config();
    let rec = picard_solve(&DensityMatrix::zeros(*cfg.grid.spatial()), &cfg).unwrap();
    let rep = postsolve_verify(&rec, &cfg, false).unwrap();
    let v = serde_json::to_value(SolveSummary::new(&rec, &rep, &cfg)).unwrap();
    for key in ["iterates", "residual", "global_bound", "scattering", "config_echo"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["config_echo"]["series_order"], 4);
    assert_eq!(v["iterates"][0]["k"], 1);
}
