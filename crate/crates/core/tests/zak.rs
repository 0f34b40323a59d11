mod common;

use common::*;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylzak::scalar::{cis_pi, sinc};
use weylzak::*;

fn indicator_kernel(per_unit: usize, m: usize, h: usize) -> SampledKernel<f64> {
    let g = materialize::<f64>(&GeneratorSpec::indicator()).unwrap();
    weyl_kernel(&g, &KernelWindow::standard(m, h, per_unit, (true, false))).unwrap()
}

fn exp_kernel(per_unit: usize, m: usize) -> SampledKernel<f64> {
    let g = materialize::<f64>(&GeneratorSpec::exp_kernel()).unwrap();
    weyl_kernel(&g, &KernelWindow::for_generator(m, 2, per_unit, &g)).unwrap()
}

fn indicator_zak_closed_form(xi: f64, xp: f64, eta: f64) -> C {
    let m = (eta - xi).floor();
    let s = xi + m + eta;
    cis_pi::<f64>(s / 2.0) * sinc(s / 2.0) * cis_pi::<f64>(-2.0 * m * xp)
}

#[test]
fn indicator_matches_closed_form() {
    let k = indicator_kernel(16, 9, 8);
    for opts in [ZakOptions::new(9), ZakOptions::new(9).direct()] {
        let z = zak_forward(&k, &opts).unwrap();
        assert_eq!(z.n_xi_prime, 32);
        let mut err = 0.0f64;
        for i in 0..z.xi.len {
            for j in 0..z.n_xi_prime {
                for e in 0..z.eta.len {
                    let c = indicator_zak_closed_form(z.xi.node_f64(i), z.xi_prime(j), z.eta.node_f64(e));
                    err = err.max((z.at(i, j, e) - c).norm());
                }
            }
        }
        assert!(err < 1e-9, "{err:e}");
    }
}

#[test]
fn exp_kernel_zak_is_the_kernel() {
    let k = exp_kernel(16, 8);
    let z = zak_forward(&k, &ZakOptions::new(8)).unwrap();
    for i in 0..z.xi.len {
        let gi = k.xi.local(z.xi.global(i)).unwrap();
        for j in 0..z.n_xi_prime {
            for e in 0..z.eta.len {
                assert!((z.at(i, j, e) - k.get(gi, e)).norm() < 1e-14);
            }
        }
    }
    assert!(z.tail.within_tolerance);
    assert_eq!(z.tail.discarded_fraction, 0.0);
}

#[test]
fn zero_kernel_and_window_errors() {
    let k = exp_kernel(8, 3);
    let zero = SampledKernel::<f64>::from_rows(k.xi, k.eta, vec![Default::default(); k.xi.len], k.path);
    assert_eq!(zak_forward(&zero, &ZakOptions::new(3)).unwrap().norm(), 0.0);
    assert_eq!(zak_pi_h_forward(&zero, &ZakOptions::new(3)).unwrap().norm(), 0.0);
    assert!(matches!(zak_forward(&k, &ZakOptions::new(5)), Err(Error::WindowTooSmall(_))));
    assert!(matches!(zak_forward(&k, &ZakOptions::new(3).with_n_xi_prime(4)), Err(Error::WindowTooSmall(_))));
}

#[test]
fn fft_and_direct_paths_agree() {
    let k = indicator_kernel(8, 5, 6);
    let a = zak_forward(&k, &ZakOptions::new(5)).unwrap();
    let b = zak_forward(&k, &ZakOptions::new(5).direct()).unwrap();
    assert!(max_diff(&a.values, &b.values) < 1e-13);
    let a = zak_pi_h_forward(&k, &ZakOptions::new(5)).unwrap();
    let b = zak_pi_h_forward(&k, &ZakOptions::new(5).direct()).unwrap();
    assert!(max_diff(&a.values, &b.values) < 1e-13);
    let ia = zak::zak_inverse_with(&a, SumPath::Fft);
    let ib = zak::zak_inverse_with(&a, SumPath::Direct);
    assert!(max_diff(&ia.to_dense(), &ib.to_dense()) < 1e-13);
}

#[test]
fn inverse_round_trip_on_indicator() {
    let m = 9;
    let k = indicator_kernel(16, m, 8);
    let z = zak_forward(&k, &ZakOptions::new(m)).unwrap();
    let back = zak_inverse(&z);
    let n = 16i64;
    let mut err = 0.0f64;
    for i in 0..back.xi.len {
        let g = back.xi.global(i);
        let inside = g >= -(m as i64) * n && g < (m as i64 + 1) * n;
        for e in 0..back.eta.len {
            let want = if inside { k.get_global(g, back.eta.global(e)) } else { Complex::new(0.0, 0.0) };
            err = err.max((back.get(i, e) - want).norm());
        }
    }
    assert!(err < 1e-12, "{err:e}");
}

#[test]
fn constant_in_xi_prime_inverts_to_one_slab() {
    let eta = Axis::window(-1, 1, 4, false);
    let xi = Axis { per_unit: 4, first: 0, len: 4, half_offset: true };
    let values: Vec<C> = (0..4)
        .flat_map(|i| (0..8).flat_map(move |_| (0..8).map(move |e| Complex::new((i * 8 + e) as f64, 1.0))))
        .collect();
    let z = ZakField { xi, n_xi_prime: 8, eta, lattice: ZakLattice::Full, truncation: 3, values, tail: Default::default() };
    let k = zak_inverse(&z);
    for i in 0..k.xi.len {
        let slab = k.xi.global(i).div_euclid(4);
        let mass = k.rows[i].mass();
        if slab == 0 {
            assert!(mass > 0.0);
        } else {
            assert!(mass < 1e-24, "slab {slab}: {mass}");
        }
    }
}

#[test]
fn translate_law_matches_kernel_translate_path() {
    let m = 8;
    let k = exp_kernel(16, m);
    let z = zak_forward(&k, &ZakOptions::new(m)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = planar(rng.gen_range(-5..=5), rng.gen_range(-5..=5));
        let a = zak_forward(&kernel_twisted_translate(&k, &p).unwrap(), &ZakOptions::new(m)).unwrap();
        let b = zak_translate(&z, &p).unwrap();
        assert!(max_diff(&a.values, &b.values) < 1e-9, "{p:?}");
        for (x, y) in b.values.iter().zip(&z.values) {
            assert!((x.norm() - y.norm()).abs() < 1e-13);
        }
    }
    let id = zak_translate(&z, &planar(0, 0)).unwrap();
    assert_eq!(id.values, z.values);
}

#[test]
fn half_lattice_translate_law() {
    let m = 8;
    let k = exp_kernel(16, m);
    let z = zak_pi_h_forward(&k, &ZakOptions::new(m)).unwrap();
    assert_eq!(z.xi.len, 8);
    for kk in -2..=2 {
        for l in -2..=2 {
            let p = planar(2 * kk, l);
            let a = zak_pi_h_forward(&kernel_twisted_translate(&k, &p).unwrap(), &ZakOptions::new(m)).unwrap();
            let b = zak_pi_h_translate(&z, &p).unwrap();
            assert!(max_diff(&a.values, &b.values) < 1e-9, "{p:?}");
        }
    }
    assert!(zak_pi_h_translate(&z, &planar(1, 0)).is_err());
    assert!(zak_translate(&z, &planar(2, 0)).is_err());
}

#[test]
fn isometry_on_registry_generators() {
    let k = exp_kernel(64, 9);
    let z = zak_forward(&k, &ZakOptions::new(9)).unwrap();
    assert!((z.norm() - hs_norm(&k)).abs() < 1e-5);
    let zh = zak_pi_h_forward(&k, &ZakOptions::new(9)).unwrap();
    assert!((zh.norm() - hs_norm(&k)).abs() < 1e-5);
    let k = indicator_kernel(64, 9, 8);
    let z = zak_forward(&k, &ZakOptions::new(9)).unwrap();
    let hs = hs_norm(&k);
    assert!((z.norm() - hs).abs() < 1e-5 + z.tail.discarded_fraction * hs);
    assert!(!z.tail.within_tolerance, "indicator tail must be reported at the default window");
}

/// The half-lattice field of the indicator, integrated over `eta`, through the fibre route.
#[test]
fn half_lattice_isometry_on_indicator() {
    let r = 1 << 14;
    let k = indicator_kernel(2, r, r / 2 + 1);
    let b = bracket_fibers(&k, &k, r, 8, ZakLattice::Half).unwrap();
    let norm = bracket_fourier_coeff(&b, &planar(0, 0)).unwrap().re.sqrt();
    assert!((norm - 1.0).abs() < 1e-5, "{}", norm - 1.0);
}

#[test]
fn quasi_periodicity_in_xi() {
    let m = 6;
    let k = exp_kernel(8, m);
    let z = zak_forward(&k, &ZakOptions::new(m)).unwrap();
    // K'(xi, eta) = K(xi + 1, eta)
    let shifted = SampledKernel {
        xi: Axis { first: k.xi.first - 8, ..k.xi },
        eta: k.eta,
        rows: k.rows.clone(),
        path: k.path,
        unknown_rows: 0,
    };
    let z1 = zak_forward(&shifted, &ZakOptions::new(m)).unwrap();
    for i in 0..z.xi.len {
        for j in 0..z.n_xi_prime {
            let ph = cis_pi::<f64>(2.0 * z.xi_prime(j));
            for e in 0..z.eta.len {
                assert!((z1.at(i, j, e) - ph * z.at(i, j, e)).norm() < 1e-12);
            }
        }
    }
}

#[test]
fn xi_prime_wraps_around() {
    let m = 4;
    let k = indicator_kernel(4, m, 3);
    let z = zak_forward(&k, &ZakOptions::new(m)).unwrap();
    // direct sum at xi' = 1 equals the stored xi' = 0 column
    for i in 0..z.xi.len {
        for e in 0..z.eta.len {
            let mut acc = Complex::new(0.0, 0.0);
            for mm in -(m as i64)..=m as i64 {
                acc += k.get_global(z.xi.global(i) + 4 * mm, z.eta.global(e)) * cis_pi::<f64>(-2.0 * mm as f64);
            }
            assert!((acc - z.at(i, 0, e)).norm() < 1e-13);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inverse_is_exact_for_any_field(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eta = Axis::window(-1, 1, 2, false);
        let xi = Axis { per_unit: 4, first: 0, len: 4, half_offset: true };
        let values: Vec<C> = (0..4 * 8 * eta.len).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let z = ZakField { xi, n_xi_prime: 8, eta, lattice: ZakLattice::Full, truncation: 3, values, tail: Default::default() };
        let k = zak_inverse(&z);
        // the inverse kernel holds every mode, so a forward sum over all of them returns the field
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in 0..8 {
                for e in 0..eta.len {
                    let mut acc = Complex::new(0.0, 0.0);
                    for mm in -4i64..4 {
                        acc += k.get_global(i as i64 + 4 * mm, eta.global(e)) * cis_pi::<f64>(-2.0 * (mm * j as i64) as f64 / 8.0);
                    }
                    err = err.max((acc - z.at(i, j, e)).norm());
                }
            }
        }
        prop_assert!(err < 1e-12);
        prop_assert!((k.norm_sqr() - z.norm() * z.norm()).abs() < 1e-12);
    }

    #[test]
    fn translate_law_random_points(k in -6i64..=6, l in -6i64..=6) {
        let ker = exp_kernel(8, 8);
        let z = zak_forward(&ker, &ZakOptions::new(8)).unwrap();
        let p = planar(k, l);
        let a = zak_forward(&kernel_twisted_translate(&ker, &p).unwrap(), &ZakOptions::new(8)).unwrap();
        let b = zak_translate(&z, &p).unwrap();
        prop_assert!(max_diff(&a.values, &b.values) < 1e-9);
    }
}
