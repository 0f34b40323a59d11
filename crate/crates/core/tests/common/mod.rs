#![allow(dead_code)]

use num_complex::Complex;
use weylzak::*;

pub type C = Complex<f64>;

pub fn planar(k: i64, l: i64) -> LatticePoint {
    LatticePoint::planar(k, l)
}

/// `chi_[0,1)^2` on `[-pad, 1 + pad)^2`, node offsets chosen so the jumps sit on cell edges.
pub fn indicator_grid(per_unit: usize, pad: i64) -> Grid2n<f64> {
    let ax = Axis::window(-pad, 1 + pad, per_unit, true);
    Grid2n::from_fn(ax, ax, |x, y| ClosedForm::IndicatorBox.function(x, y).unwrap())
}

/// `||phi||^2 = int int e^{2 xi eta}` over the unit square, by its power series.
pub fn exp_norm_sqr() -> f64 {
    let mut s = 0.0;
    let mut term = 1.0; // 2^n / n!
    for n in 0..60 {
        s += term / ((n + 1) as f64).powi(2);
        term *= 2.0 / (n + 1) as f64;
    }
    s
}

/// Closed form of the squared exponential kernel on the unit square.
pub fn phi2_kernel(xi: f64, eta: f64) -> f64 {
    if !(0.0..1.0).contains(&xi) || !(0.0..1.0).contains(&eta) {
        return 0.0;
    }
    let s = xi + eta;
    if s.abs() < 1e-12 {
        1.0
    } else {
        (s.exp() - 1.0) / s
    }
}

/// Gauss-Legendre-free reference: composite Simpson on `[a, b]`.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub struct Pipeline {
    pub generator: Generator<f64>,
    pub kernel: SampledKernel<f64>,
    pub zak: ZakField<f64>,
    pub bracket: BracketTable<f64>,
}

/// Kernel, Zak field and self-bracket at the default resolution.
pub fn pipeline(spec: &GeneratorSpec) -> Pipeline {
    pipeline_at(spec, 64, 9, 8)
}

pub fn pipeline_at(spec: &GeneratorSpec, per_unit: usize, m: usize, h: usize) -> Pipeline {
    let generator = materialize::<f64>(spec).unwrap();
    let w = KernelWindow::for_generator(m, h, per_unit, &generator);
    let kernel = weyl_kernel(&generator, &w).unwrap();
    let zak = zak_forward(&kernel, &ZakOptions::new(m)).unwrap();
    let bracket = bracket(&zak, &zak).unwrap();
    Pipeline { generator, kernel, zak, bracket }
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
