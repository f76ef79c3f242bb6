use fermi_scatter::density::{random_hermitian, schatten_norm, sobolev_hs_norm};
use fermi_scatter::grid::{SpaceTimeGrid, SpatialGrid};
use fermi_scatter::response::RadialSymbol;
use fermi_scatter::rng::seed_stream;
use fermi_scatter::solver::series_pairs;
use proptest::prelude::*;
use rand::RngCore;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flat_index_round_trips(dim in 1usize..=3, log_n in 2u32..=4, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let g = SpatialGrid::<f64>::new(dim, n, 10.0).unwrap();
        let k = (seed as usize) % g.len();
        prop_assert_eq!(g.flat_index(g.multi_index(k)), k);
        let q = (seed.rotate_left(17) as usize) % g.len();
        // k ⊖ q ⊕ q = k on the wave-number torus
        let d = g.sub(k, q);
        let (wd, wq, wk) = (g.wave_numbers(d), g.wave_numbers(q), g.wave_numbers(k));
        for a in 0..dim {
            prop_assert_eq!((wd[a] + wq[a] - wk[a]).rem_euclid(n as i64), 0);
        }
    }

    #[test]
    fn schatten_and_sobolev_norms_are_homogeneous(seed in any::<u64>(), s in -3.0f64..3.0, p in 1.0f64..8.0) {
        let g = SpatialGrid::<f64>::new(1, 8, 12.0).unwrap();
        let gamma = random_hermitian(g, &mut seed_stream(seed, 0), |k: f64| (1.0 + k * k).recip());
        let scaled = gamma.scaled(s);
        let a = schatten_norm(&gamma, p).unwrap();
        let b = schatten_norm(&scaled, p).unwrap();
        prop_assert!((b - s.abs() * a).abs() <= 1e-10 * a.max(1e-300));
        let h = sobolev_hs_norm(&gamma, 1.1, 0.7);
        prop_assert!((sobolev_hs_norm(&scaled, 1.1, 0.7) - s.abs() * h).abs() <= 1e-10 * h);
    }

    #[test]
    fn seed_streams_are_reproducible(master in any::<u64>(), index in 0u64..1000) {
        let mut a = seed_stream(master, index);
        let mut b = seed_stream(master, index);
        let xa: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        prop_assert_eq!(&xa, &xb);
        prop_assert_ne!(xa[0], seed_stream(master, index + 1).next_u64());
    }

    #[test]
    fn series_pairs_are_the_lattice_triangle(order in 2usize..9) {
        let p = series_pairs(order);
        prop_assert_eq!(p.len(), (order + 1) * (order + 2) / 2 - 3);
        prop_assert!(p.iter().all(|&(m, n)| (2..=order).contains(&(m + n))));
    }

    #[test]
    fn symbols_decay_beyond_their_extent(a in 0.1f64..10.0, sigma in 0.05f64..4.0) {
        for s in [RadialSymbol::Gaussian { a, sigma }, RadialSymbol::VanishingOrigin { a, sigma }] {
            let e = s.extent();
            prop_assert!(s.eval(e).abs() <= 1e-16 * a);
            prop_assert!(s.eval(0.0f64) >= 0.0);
        }
    }

    #[test]
    fn time_grids_extend_by_whole_steps(nt in 8usize..64, t in 0.5f64..20.0, f in 1usize..4) {
        let g = SpaceTimeGrid::new(SpatialGrid::<f64>::new(1, 4, 5.0).unwrap(), t, nt).unwrap();
        let e = g.extended(f);
        prop_assert_eq!(e.nt(), f * nt);
        prop_assert!((e.dt() - g.dt()).abs() <= 1e-14 * g.dt());
    }
}
