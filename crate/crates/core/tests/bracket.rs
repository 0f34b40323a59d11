mod common;

use common::*;
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weylzak::*;

fn small(spec: &GeneratorSpec) -> Pipeline {
    pipeline_at(spec, 16, 4, 3)
}

fn random_zak(seed: u64, like: &ZakField<f64>) -> ZakField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ZakField {
        values: (0..like.values.len()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        ..like.clone()
    }
}

#[test]
fn indicator_bracket_is_one_on_a_wide_window() {
    let g = materialize::<f64>(&GeneratorSpec::indicator()).unwrap();
    let m = 512;
    let k = weyl_kernel(&g, &KernelWindow::standard(m, m, 16, (true, false))).unwrap();
    let b = bracket_fibers(&k, &k, m, 32, ZakLattice::Full).unwrap();
    assert!(b.self_bracket);
    let dev = b.values.iter().map(|z| (z.re - 1.0).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-3, "{dev:e}");
}

#[test]
fn default_window_bracket_reports_its_truncation() {
    // the sinc^2 tail beyond |eta| = 8 costs about 1/(pi^2 H)
    let p = pipeline(&GeneratorSpec::indicator());
    let s = p.bracket.summary(0.0);
    assert!(s.max <= 1.0 + 1e-12);
    assert!(s.min > 1.0 - 0.03 && s.min < 1.0 - 1e-3);
}

#[test]
fn fibre_route_equals_zak_route() {
    for spec in [GeneratorSpec::indicator(), GeneratorSpec::exp_kernel_squared()] {
        let p = small(&spec);
        let f = bracket_fibers(&p.kernel, &p.kernel, 4, p.zak.n_xi_prime, ZakLattice::Full).unwrap();
        assert!(max_diff(&f.values, &p.bracket.values) < 1e-12);
        assert!((f.input_norms.0 - p.bracket.input_norms.0).abs() < 1e-12);
        let zh = zak_pi_h_forward(&p.kernel, &ZakOptions::new(4)).unwrap();
        let bh = bracket(&zh, &zh).unwrap();
        let fh = bracket_fibers(&p.kernel, &p.kernel, 4, zh.n_xi_prime, ZakLattice::Half).unwrap();
        assert!(max_diff(&fh.values, &bh.values) < 1e-12);
    }
    // cross bracket of two different kernels
    let a = small(&GeneratorSpec::indicator());
    let t = kernel_twisted_translate(&a.kernel, &planar(1, 2)).unwrap();
    let zt = zak_forward(&t, &ZakOptions::new(4)).unwrap();
    let via_zak = bracket(&a.zak, &zt).unwrap();
    let via_fibres = bracket_fibers(&a.kernel, &t, 4, a.zak.n_xi_prime, ZakLattice::Full).unwrap();
    assert!(max_diff(&via_zak.values, &via_fibres.values) < 1e-12);
}

#[test]
fn phi2_bracket_within_one_and_e_squared() {
    let p = pipeline(&GeneratorSpec::exp_kernel_squared());
    let s = p.bracket.summary(0.0);
    assert!(s.min >= 1.0 && s.max <= 2f64.exp(), "{s:?}");
    // independent oracle at a node: int_0^1 ((e^{xi+eta} - 1)/(xi+eta))^2 d eta
    let i = 5;
    let xi = p.bracket.xi.node_f64(i);
    let want = simpson(|e| phi2_kernel(xi, e.min(1.0 - 1e-15)).powi(2), 0.0, 1.0, 2000);
    assert!((p.bracket.at(i, 3).re - want).abs() < 5e-4, "{} vs {want}", p.bracket.at(i, 3).re);
}

#[test]
fn zero_partner_gives_zero_table() {
    let p = small(&GeneratorSpec::exp_kernel());
    let zero = ZakField { values: vec![Complex::new(0.0, 0.0); p.zak.values.len()], ..p.zak.clone() };
    let b = bracket(&p.zak, &zero).unwrap();
    assert_eq!(b.max_abs(), 0.0);
    assert!(orthogonality_test(&b, 1e-12));
    assert!(!orthogonality_test(&p.bracket, 1e-6));
}

#[test]
fn grid_mismatch_is_an_error() {
    let a = small(&GeneratorSpec::exp_kernel());
    let b = pipeline_at(&GeneratorSpec::exp_kernel(), 8, 4, 3);
    assert!(matches!(bracket(&a.zak, &b.zak), Err(Error::GridMismatch(_))));
}

#[test]
fn fourier_coefficient_examples() {
    let g = materialize::<f64>(&GeneratorSpec::indicator()).unwrap();
    let m = 1024;
    let k = weyl_kernel(&g, &KernelWindow::standard(m, m, 16, (true, false))).unwrap();
    let b = bracket_fibers(&k, &k, m, 32, ZakLattice::Full).unwrap();
    assert!((bracket_fourier_coeff(&b, &planar(0, 0)).unwrap() - 1.0).norm() < 1e-4);
    assert!(bracket_fourier_coeff(&b, &planar(1, 1)).unwrap().norm() < 1e-4);
    let one = BracketTable { values: vec![Complex::new(1.0, 0.0); b.values.len()], ..b.clone() };
    for (kk, l) in [(1, 0), (0, 1), (-3, 2), (5, -7)] {
        assert!(bracket_fourier_coeff(&one, &planar(kk, l)).unwrap().norm() < 1e-14);
    }
    assert!(matches!(bracket_fourier_coeff(&one, &planar(8, 0)), Err(Error::AboveNyquist { .. })));
    assert!(matches!(bracket_fourier_coeff(&one, &planar(0, 16)), Err(Error::AboveNyquist { .. })));
}

#[test]
fn translate_identities() {
    let a = small(&GeneratorSpec::exp_kernel());
    let b2 = small(&GeneratorSpec::exp_kernel_squared());
    let cross = bracket(&a.zak, &b2.zak).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let p = planar(rng.gen_range(-4..=4), rng.gen_range(-4..=4));
        let left = bracket_translate_left(&cross, &p).unwrap();
        let direct = bracket(&zak_translate(&a.zak, &p).unwrap(), &b2.zak).unwrap();
        assert!(max_diff(&left.values, &direct.values) < 1e-9, "left {p:?}");
        let right = bracket_translate_right(&cross, &p).unwrap();
        let direct = bracket(&a.zak, &zak_translate(&b2.zak, &p).unwrap()).unwrap();
        assert!(max_diff(&right.values, &direct.values) < 1e-9, "right {p:?}");
        // e^{-2 pi i k l} = 1, so a right shift by p is a left shift by -p
        let lneg = bracket_translate_left(&cross, &p.neg()).unwrap();
        assert!(max_diff(&right.values, &lneg.values) < 1e-12);
        for (x, y) in left.values.iter().zip(&cross.values) {
            assert!((x.norm() - y.norm()).abs() < 1e-13);
        }
    }
    let id = bracket_translate_left(&cross, &planar(0, 0)).unwrap();
    assert!(max_diff(&id.values, &cross.values) < 1e-15);
    let id = bracket_translate_right(&cross, &planar(0, 0)).unwrap();
    assert!(max_diff(&id.values, &cross.values) < 1e-15);
}

#[test]
fn indicator_against_its_translate_is_not_orthogonal() {
    let a = small(&GeneratorSpec::indicator());
    let zt = zak_translate(&a.zak, &planar(1, 0)).unwrap();
    let b = bracket(&a.zak, &zt).unwrap();
    assert!(!orthogonality_test(&b, 1e-3));
    for (x, y) in b.values.iter().zip(&a.bracket.values) {
        assert!((x.norm() - y.re).abs() < 1e-12);
    }
}

#[test]
fn cauchy_schwarz_l1_hermitian_sesquilinear() {
    let a = small(&GeneratorSpec::exp_kernel());
    let z1 = random_zak(1, &a.zak);
    let z2 = random_zak(2, &a.zak);
    let z3 = random_zak(3, &a.zak);
    let b12 = bracket(&z1, &z2).unwrap();
    let b11 = bracket(&z1, &z1).unwrap();
    let b22 = bracket(&z2, &z2).unwrap();
    for t in 0..b12.values.len() {
        assert!(b11.values[t].re * b22.values[t].re - b12.values[t].norm_sqr() >= -1e-10);
    }
    assert!(b12.l1_norm() <= z1.norm() * z2.norm() + 1e-5);
    let b21 = bracket(&z2, &z1).unwrap();
    let conj: Vec<C> = b21.values.iter().map(|z| z.conj()).collect();
    assert!(max_diff(&b12.values, &conj) < 1e-14);
    let (ca, cb) = (Complex::new(0.3, -1.2), Complex::new(-0.7, 0.4));
    let mix = ZakField {
        values: z1.values.iter().zip(&z3.values).map(|(x, y)| ca * x + cb * y).collect(),
        ..z1.clone()
    };
    let lhs = bracket(&mix, &z2).unwrap();
    let b32 = bracket(&z3, &z2).unwrap();
    let rhs: Vec<C> = b12.values.iter().zip(&b32.values).map(|(x, y)| ca * x + cb * y).collect();
    assert!(max_diff(&lhs.values, &rhs) < 1e-12);
}

#[test]
fn self_bracket_with_imaginary_part_is_rejected() {
    let a = small(&GeneratorSpec::exp_kernel());
    let err = weylzak::frame_bounds(&BracketTable { values: a.bracket.values.iter().map(|z| z + Complex::new(0.0, 1e-3)).collect(), ..a.bracket.clone() }, 1e-8);
    assert!(matches!(err, Err(Error::NonRealSelfBracket { .. })));
}

#[test]
fn summary_fields() {
    let p = small(&GeneratorSpec::exp_kernel_squared());
    let s = p.bracket.summary(2.0);
    assert!(s.min < s.max);
    assert!(s.argmin[0] < s.argmax[0]);
    assert!(s.below_fraction > 0.0 && s.below_fraction < 1.0);
    assert!((s.l1 - p.bracket.l1_norm()).abs() < 1e-15);
}

#[test]
fn separable_bracket_factors() {
    let e = small(&GeneratorSpec::exp_kernel_squared());
    let i = small(&GeneratorSpec::indicator());
    let sb = SeparableBracket { factors: vec![e.bracket.clone(), i.bracket.clone()] };
    let (lo, hi) = sb.min_max();
    let (el, eh) = (e.bracket.summary(0.0).min, e.bracket.summary(0.0).max);
    let (il, ih) = (i.bracket.summary(0.0).min, i.bracket.summary(0.0).max);
    assert!((lo - el * il).abs() < 1e-14 && (hi - eh * ih).abs() < 1e-14);
    let p = LatticePoint::new(vec![1, 0], vec![0, 2]).unwrap();
    let c = sb.fourier_coeff(&p).unwrap();
    let want = bracket_fourier_coeff(&e.bracket, &planar(1, 0)).unwrap() * bracket_fourier_coeff(&i.bracket, &planar(0, 2)).unwrap();
    assert!((c - want).norm() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parseval_bridge(seed in any::<u64>()) {
        let a = small(&GeneratorSpec::exp_kernel());
        let z = random_zak(seed, &a.zak);
        let b = bracket(&z, &z).unwrap();
        let mut s = 0.0;
        for p in lattice_box(3, 1) {
            s += bracket_fourier_coeff(&b, &p).unwrap().norm_sqr();
        }
        prop_assert!(s <= b.l2_norm().powi(2) * (1.0 + 1e-12));
    }

    #[test]
    fn coefficient_reproduces_translate_inner_product(k in -3i64..=3, l in -3i64..=3) {
        let a = small(&GeneratorSpec::exp_kernel());
        let p = planar(k, l);
        let c = bracket_fourier_coeff(&a.bracket, &p).unwrap();
        let zt = zak_translate(&a.zak, &p).unwrap();
        // <phi, T_p phi> as a plain Zak-domain inner product
        let ip: C = a.zak.values.iter().zip(&zt.values).map(|(x, y)| x * y.conj()).sum::<C>() * a.zak.cell();
        prop_assert!((c - ip).norm() < 1e-12);
    }
}
