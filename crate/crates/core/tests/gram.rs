mod common;

use common::*;
use num_complex::Complex;
use proptest::prelude::*;
use weylzak::*;

fn phi2_gram(r: i64) -> (GramMatrix, Pipeline) {
    let p = pipeline(&GeneratorSpec::exp_kernel_squared());
    let g = gram_matrix_kernel(&p.kernel.padded_xi(r + 1), r).unwrap();
    (g, p)
}

#[test]
fn indicator_gram_is_identity() {
    let g = gram_matrix(&indicator_grid(16, 3), 2).unwrap();
    assert_eq!(g.dim(), 25);
    assert!(g.max_offdiag() < 1e-12);
    for a in 0..g.dim() {
        assert!((g.at(a, a) - 1.0).norm() < 1e-12);
    }
    assert_eq!(gram_bounds(&g).unwrap(), (g.at(0, 0).re.min(1.0), g.at(0, 0).re.max(1.0)));
}

#[test]
fn box_beyond_padding_is_an_error() {
    assert!(matches!(gram_matrix(&indicator_grid(16, 1), 2), Err(Error::WindowTooSmall(_))));
    let p = pipeline_at(&GeneratorSpec::exp_kernel(), 16, 4, 3);
    // support [0, 1] in xi leaves the window [-5, 6) under a shift by 6
    assert!(gram_matrix_kernel(&p.kernel, 3).is_ok());
    assert!(matches!(gram_matrix_kernel(&p.kernel, 6), Err(Error::WindowTooSmall(_))));
}

#[test]
fn diagonal_is_the_squared_norm() {
    let (g, p) = phi2_gram(2);
    let n2 = p.kernel.norm_sqr();
    for a in 0..g.dim() {
        assert!((g.at(a, a).re - n2).abs() < 1e-12 * n2);
    }
    let f = indicator_grid(8, 3);
    let gf = gram_matrix(&f, 2).unwrap();
    for a in 0..gf.dim() {
        assert!((gf.at(a, a).re - f.norm_sqr()).abs() < 1e-12);
    }
}

#[test]
fn toeplitz_structure() {
    let (g, _) = phi2_gram(2);
    let mut checked = 0;
    for a in 0..g.dim() {
        for b in 0..g.dim() {
            if let Some(want) = toeplitz_entry(&g, a, b) {
                assert!((g.at(a, b) - want).norm() < 1e-10, "{a} {b}");
                checked += 1;
            }
        }
    }
    assert!(checked > g.dim());
}

#[test]
fn hermitian_psd_and_monotone_sections() {
    let (g, _) = phi2_gram(3);
    for a in 0..g.dim() {
        for b in 0..g.dim() {
            assert_eq!(g.at(a, b), g.at(b, a).conj());
        }
    }
    let trace = finite_section_trace(&g).unwrap();
    assert_eq!(trace.len(), 4);
    for w in trace.windows(2) {
        assert!(w[1].lower <= w[0].lower + 1e-12 && w[1].upper >= w[0].upper - 1e-12);
    }
    let last = trace.last().unwrap();
    assert!(last.lower >= 1.0 - 0.05 && last.upper <= 2f64.exp() + 0.05, "{last:?}");
}

#[test]
fn identity_gram_bounds() {
    let pts = lattice_box(1, 1);
    let n = pts.len();
    let entries = (0..n * n).map(|t| if t / n == t % n { Complex::new(1.0, 0.0) } else { Complex::new(0.0, 0.0) }).collect();
    let g = GramMatrix { points: pts, radius: 1, entries, provenance: "identity".into() };
    let (a, b) = gram_bounds(&g).unwrap();
    assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
}

#[test]
fn non_psd_is_corrupted() {
    let pts = lattice_box(1, 1);
    let n = pts.len();
    let entries = (0..n * n).map(|t| if t / n == t % n { Complex::new(if t == 0 { -1.0 } else { 1.0 }, 0.0) } else { Complex::new(0.0, 0.0) }).collect();
    let g = GramMatrix { points: pts, radius: 1, entries, provenance: "corrupt".into() };
    assert!(matches!(gram_bounds(&g), Err(Error::CorruptedGram { .. })));
}

#[test]
fn zero_band_generator_has_a_near_singular_gram() {
    let p = pipeline(&GeneratorSpec::exp_kernel_squared());
    let z = zero_xi_prime_band(&p.zak, 0.25, 0.5);
    let k = zak_inverse(&z);
    let r = 3;
    let g = gram_matrix_kernel(&k.padded_xi(r + 1), r).unwrap();
    let trace = finite_section_trace(&g).unwrap();
    let (a, b) = (trace[3].lower, trace[3].upper);
    assert!(a < 0.05 * b, "{a} {b}");
    // the healthy generator stays well conditioned at the same radius
    let (h, _) = phi2_gram(r);
    let (ha, hb) = gram_bounds(&h).unwrap();
    assert!(ha > 0.1 * hb);
}

#[test]
fn cross_validation_passes_for_exp_kernels() {
    for spec in [GeneratorSpec::exp_kernel(), GeneratorSpec::exp_kernel_squared()] {
        let p = pipeline(&spec);
        let g = gram_matrix_kernel(&p.kernel.padded_xi(4), 3).unwrap();
        let cv = cross_validate(&g, &p.bracket, 1e-4).unwrap();
        assert!(cv.pass, "{cv:?}");
        assert!(cv.max_deviation < 1e-10);
    }
}

#[test]
fn cross_validation_for_the_indicator() {
    let g = materialize::<f64>(&GeneratorSpec::indicator()).unwrap();
    let m = 4096;
    let k = weyl_kernel(&g, &KernelWindow::standard(m, m, 16, (true, false))).unwrap();
    let b = bracket_fibers(&k, &k, m, 64, ZakLattice::Full).unwrap();
    let gm = gram_matrix(&indicator_grid(16, 4), 3).unwrap();
    let cv = cross_validate(&gm, &b, 1e-4).unwrap();
    assert!(cv.pass, "{cv:?}");
}

#[test]
fn zero_generator_gives_zero_on_both_sides() {
    let ax = Axis::window(-3, 4, 8, true);
    let f = Grid2n::<f64>::zeros(ax, ax);
    let g = gram_matrix(&f, 2).unwrap();
    assert_eq!(g.frobenius(), 0.0);
    let p = pipeline_at(&GeneratorSpec::exp_kernel(), 16, 4, 3);
    let zero = BracketTable { values: vec![Complex::new(0.0, 0.0); p.bracket.values.len()], ..p.bracket.clone() };
    let cv = cross_validate(&g, &zero, 1e-12).unwrap();
    assert_eq!(cv.max_deviation, 0.0);
    assert!(cv.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_function_gram_is_hermitian_psd_toeplitz(seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ax = Axis::window(-2, 3, 4, true);
        let mut f = Grid2n::<f64>::zeros(ax, ax);
        for i in 0..ax.len {
            for j in 0..ax.len {
                let (x, y) = (ax.node_f64(i), ax.node_f64(j));
                if (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y) {
                    f.values[i * ax.len + j] = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        let g = gram_matrix(&f, 1).unwrap();
        prop_assert!(gram_bounds(&g).is_ok());
        for a in 0..g.dim() {
            for b in 0..g.dim() {
                prop_assert!((g.at(a, b) - g.at(b, a).conj()).norm() < 1e-14);
                if let Some(want) = toeplitz_entry(&g, a, b) {
                    prop_assert!((g.at(a, b) - want).norm() < 1e-12);
                }
            }
        }
    }
}
