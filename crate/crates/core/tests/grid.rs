use fermi_scatter::grid::*;
use fermi_scatter::real::{cis, C};
use fermi_scatter::rng::seed_stream;
use rand::Rng;

fn random_field(grid: SpatialGrid<f64>, seed: u64) -> Field<f64> {
    let mut r = seed_stream(seed, 0);
    let values = (0..grid.len()).map(|_| C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    Field::new(grid, values).unwrap()
}

#[test]
fn constant_field_has_single_mode() {
    let g = SpatialGrid::<f64>::new(2, 8, 3.0).unwrap();
    let f = Field::from_fn(g, |_| C::new(1.0, 0.0));
    let h = transform(&f, Direction::Forward).unwrap();
    assert!((h.values[0].re - g.volume()).abs() < 1e-12);
    assert!(h.values.iter().skip(1).all(|v| v.norm() < 1e-12));
}

#[test]
fn round_trip_all_dimensions() {
    for (d, n) in [(1, 16), (2, 8), (3, 4)] {
        let g = SpatialGrid::<f64>::new(d, n, 5.0).unwrap();
        let f = random_field(g, d as u64);
        let back = transform(&transform(&f, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
        let err = f.values.iter().zip(&back.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "d={d} err={err}");
    }
}

#[test]
fn forward_matches_direct_sum_and_parseval() {
    for d in 1..=3 {
        let g = SpatialGrid::<f64>::new(d, 4, 2.5).unwrap();
        let f = random_field(g, 10 + d as u64);
        let h = transform(&f, Direction::Forward).unwrap();
        for k in 0..g.len() {
            let kv = g.frequency(k);
            let mut s = C::new(0.0, 0.0);
            for (j, v) in f.values.iter().enumerate() {
                let x = g.position(j);
                s += v * cis(-(kv[0] * x[0] + kv[1] * x[1] + kv[2] * x[2]));
            }
            s *= g.volume_element();
            assert!((s - h.values[k]).norm() < 1e-12 * (1.0 + s.norm()));
        }
        let lhs: f64 = f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.volume_element();
        let rhs: f64 = h.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / g.volume();
        assert!((lhs - rhs).abs() < 1e-12 * lhs);
    }
}

#[test]
fn lattice_order_and_symmetry() {
    let g = SpatialGrid::<f64>::new(1, 4, std::f64::consts::TAU).unwrap();
    let k: Vec<f64> = freq_lattice(&g).into_iter().map(|v| v[0]).collect();
    assert_eq!(k, vec![0.0, 1.0, -2.0, -1.0]);
    let g2 = SpatialGrid::<f64>::new(2, 4, std::f64::consts::TAU).unwrap();
    let lat = freq_lattice(&g2);
    assert_eq!(lat.len(), 16);
    assert!(lat.iter().all(|v| v.iter().all(|c| [-2.0, -1.0, 0.0, 1.0].contains(c))));
    // closed under negation except for the unpaired mode
    for (i, v) in lat.iter().enumerate() {
        let neg: Vec<f64> = v.iter().map(|c| -c).collect();
        assert_eq!(lat.contains(&neg), !g2.is_extreme(i));
    }
}

#[test]
fn lattice_diagonalises_laplacian() {
    // second difference of a plane wave vs. spectral symbol: forward of the
    // spectrally computed Laplacian is -|k|² times forward
    let g = SpatialGrid::<f64>::new(2, 8, 4.0).unwrap();
    let f = random_field(g, 3);
    let mut h = transform(&f, Direction::Forward).unwrap();
    for (k, v) in h.values.iter_mut().enumerate() {
        *v *= -g.k2(k);
    }
    let lap = transform(&h, Direction::Inverse).unwrap();
    // compare with direct synthesis of -|k|² e^{ikx}
    let fh = transform(&f, Direction::Forward).unwrap();
    for j in [0usize, 5, 17, 63] {
        let x = g.position(j);
        let mut s = C::new(0.0, 0.0);
        for k in 0..g.len() {
            let kv = g.frequency(k);
            s += fh.values[k] * (-g.k2(k)) * cis(kv[0] * x[0] + kv[1] * x[1]);
        }
        s /= g.volume();
        assert!((s - lap.values[j]).norm() < 1e-10);
    }
}

#[test]
fn size_mismatch_is_structural() {
    let g = SpatialGrid::<f64>::new(1, 8, 1.0).unwrap();
    assert!(matches!(Field::new(g, vec![C::new(0.0, 0.0); 7]), Err(fermi_scatter::Error::Structural { .. })));
}

#[test]
fn transforms_are_bitwise_deterministic() {
    let g = SpatialGrid::<f64>::new(3, 8, 7.0).unwrap();
    let f = random_field(g, 99);
    let a = transform(&f, Direction::Forward).unwrap();
    let b = transform(&f, Direction::Forward).unwrap();
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}

fn st_grid() -> SpaceTimeGrid<f64> {
    SpaceTimeGrid::new(SpatialGrid::<f64>::new(1, 4, 3.0).unwrap(), 2.0, 8).unwrap()
}

#[test]
fn st_zero_and_round_trip() {
    let g = st_grid();
    let z = SpaceTimeField::zeros(g);
    assert!(st_forward(&z).values.iter().all(|v| v.norm() == 0.0));
    let mut r = seed_stream(5, 0);
    let vals = (0..g.nodes() * 4).map(|_| C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
    let f = SpaceTimeField::new(g, vals).unwrap();
    let spec = st_forward(&f);
    assert_eq!(spec.padded, 2 * g.nodes());
    // direct double sum over the padded time lattice
    let sp = *g.spatial();
    for m in [0usize, 3, 11] {
        for k in 0..4 {
            let tau = spec.time_frequency(m);
            let kv = sp.frequency(k)[0];
            let mut s = C::new(0.0, 0.0);
            for j in 0..g.nodes() {
                for x in 0..4 {
                    s += f.slice(j)[x] * cis(-(tau * g.time(j) + kv * sp.position(x)[0]));
                }
            }
            s *= g.dt() * sp.volume_element();
            assert!((s - spec.values[m * 4 + k]).norm() < 1e-12);
        }
    }
    let back = st_inverse(&spec).unwrap();
    let err = f.values.iter().zip(&back.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-12);
}

#[test]
fn st_plane_wave_concentrates_on_one_mode() {
    let g = st_grid();
    let sp = *g.spatial();
    let k1 = sp.frequency(1)[0];
    // time frequency on the padded lattice
    let tau = std::f64::consts::TAU * 3.0 / (18.0 * g.dt());
    let f = SpaceTimeField::from_fn(g, |t, x| cis(tau * t + k1 * x[0]));
    let spec = st_forward(&f);
    let mut best = (0, 0.0);
    for (i, v) in spec.values.iter().enumerate() {
        let (m, k) = (i / 4, i % 4);
        if k != 1 {
            assert!(v.norm() < 1e-12, "leak into spatial mode {k}");
        }
        if v.norm() > best.1 {
            best = (m, v.norm());
        }
    }
    assert_eq!(best.0, 3);
}
