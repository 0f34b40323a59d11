use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::kernel::SampledKernel;
use crate::lattice::LatticePoint;
use crate::scalar::{cis_pi, Real};
use crate::zak::{ZakField, ZakLattice};

/// Imaginary parts of a self-bracket below this (relative to its maximum) are zeroed.
pub const REAL_CLAMP: f64 = 1e-10;

/// `[phi, psi](xi, xi')` on the torus grid.
#[derive(Clone, Debug)]
pub struct BracketTable<T> {
    pub xi: Axis,
    pub n_xi_prime: usize,
    pub lattice: ZakLattice,
    /// `values[i * n_xi_prime + j]`.
    pub values: Vec<Complex<T>>,
    /// Computed as `[phi, phi]`; values are then real and nonnegative.
    pub self_bracket: bool,
    /// `(||phi||, ||psi||)` of the inputs as sampled.
    pub input_norms: (f64, f64),
    /// `eta` grid the quadrature ran over.
    pub eta: Axis,
}

impl<T: Real> BracketTable<T> {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.n_xi_prime + j]
    }

    pub fn xi_prime(&self, j: usize) -> f64 {
        j as f64 / self.n_xi_prime as f64
    }

    /// Torus cell measure.
    pub fn cell(&self) -> f64 {
        1.0 / (self.xi.per_unit * self.n_xi_prime) as f64
    }

    /// Real parts as f64 (the self-bracket values).
    pub fn real_f64(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re.as_f64()).collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm().as_f64()).sum::<f64>() * self.cell()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|z| z.norm_sqr().as_f64()).sum::<f64>() * self.cell()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm().as_f64()))
    }

    /// Same table with each value replaced.
    pub fn map(&self, f: impl Fn(usize, usize, Complex<T>) -> Complex<T> + Sync) -> BracketTable<T> {
        let nj = self.n_xi_prime;
        let values = self.values.par_iter().enumerate().map(|(ij, z)| f(ij / nj, ij % nj, *z)).collect();
        BracketTable { values, self_bracket: false, ..self.meta() }
    }

    pub(crate) fn meta(&self) -> BracketTable<T> {
        BracketTable {
            xi: self.xi,
            n_xi_prime: self.n_xi_prime,
            lattice: self.lattice,
            values: vec![],
            self_bracket: self.self_bracket,
            input_norms: self.input_norms,
            eta: self.eta,
        }
    }

    pub fn summary(&self, threshold: f64) -> BracketSummary {
        let vals: Vec<f64> = if self.self_bracket {
            self.real_f64()
        } else {
            self.values.iter().map(|z| z.norm().as_f64()).collect()
        };
        let (mut imin, mut imax) = (0, 0);
        for (t, v) in vals.iter().enumerate() {
            if *v < vals[imin] {
                imin = t;
            }
            if *v > vals[imax] {
                imax = t;
            }
        }
        let nj = self.n_xi_prime;
        let at = |t: usize| [self.xi.node_f64(t / nj), self.xi_prime(t % nj)];
        let below = vals.iter().filter(|v| **v <= threshold).count();
        BracketSummary {
            min: vals[imin],
            max: vals[imax],
            argmin: at(imin),
            argmax: at(imax),
            l1: self.l1_norm(),
            threshold,
            below_fraction: below as f64 / vals.len() as f64,
        }
    }

    fn same_torus(&self, xi: &Axis, nxp: usize, lattice: ZakLattice) -> bool {
        self.xi == *xi && self.n_xi_prime == nxp && self.lattice == lattice
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketSummary {
    pub min: f64,
    pub max: f64,
    /// `(xi, xi')` of the minimum.
    pub argmin: [f64; 2],
    pub argmax: [f64; 2],
    pub l1: f64,
    pub threshold: f64,
    pub below_fraction: f64,
}

/// `[phi, psi] = int Z1 conj(Z2) d eta` by the midpoint rule on the shared `eta` grid.
///
/// Passing the same field twice yields a real-clamped self-bracket.
pub fn bracket<T: Real>(z1: &ZakField<T>, z2: &ZakField<T>) -> Result<BracketTable<T>> {
    if !z1.same_grid(z2) {
        return Err(Error::GridMismatch("bracket of Zak fields on different grids".into()));
    }
    let ne = z1.eta.len;
    let h: T = z1.eta.step();
    let values: Vec<Complex<T>> = z1
        .values
        .par_chunks(ne)
        .zip(z2.values.par_chunks(ne))
        .map(|(a, b)| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (x, y) in a.iter().zip(b) {
                acc = acc + x * y.conj();
            }
            acc * h
        })
        .collect();
    let is_self = std::ptr::eq(z1, z2);
    let table = BracketTable {
        xi: z1.xi,
        n_xi_prime: z1.n_xi_prime,
        lattice: z1.lattice,
        values,
        self_bracket: false,
        input_norms: (z1.norm().as_f64(), z2.norm().as_f64()),
        eta: z1.eta,
    };
    if is_self {
        real_clamp(table)
    } else {
        Ok(table)
    }
}

fn real_clamp<T: Real>(mut b: BracketTable<T>) -> Result<BracketTable<T>> {
    let scale = b.max_abs().max(f64::MIN_POSITIVE);
    let imag = b.values.iter().fold(0.0f64, |m, z| m.max(z.im.as_f64().abs()));
    if imag > REAL_CLAMP * scale.max(1.0) {
        return Err(Error::NonRealSelfBracket { imag, tolerance: REAL_CLAMP });
    }
    for z in &mut b.values {
        *z = Complex::new(z.re.max(T::zero()), T::zero());
    }
    b.self_bracket = true;
    Ok(b)
}

/// Bracket straight from kernels, without materialising the Zak fields.
///
/// Expands `|sum_m K(xi + m, .)|^2` into fibre correlations
/// `c_d(xi) = sum_m <K1(xi + m + d, .), K2(xi + m, .)>` and sums
/// `sum_d c_d e^{-2 pi i d xi'}`. Algebraically identical to [`bracket`] of
/// the two truncated Zak fields, but linear in the number of overlapping rows,
/// so wide `eta` windows stay cheap.
pub fn bracket_fibers<T: Real>(
    k1: &SampledKernel<T>,
    k2: &SampledKernel<T>,
    truncation: usize,
    n_xi_prime: usize,
    lattice: ZakLattice,
) -> Result<BracketTable<T>> {
    k1.xi.check_aligned(&k2.xi, "bracket xi axes")?;
    k1.eta.check_aligned(&k2.eta, "bracket eta axes")?;
    let n = k1.xi.per_unit;
    let shift = match lattice {
        ZakLattice::Full => n,
        ZakLattice::Half => {
            if n % 2 != 0 {
                return Err(Error::GridMismatch("half-lattice bracket needs even steps per unit".into()));
            }
            n / 2
        }
    } as i64;
    let m = truncation as i64;
    for k in [k1, k2] {
        if k.xi.first > -m * shift || k.xi.end() < (m + 1) * shift {
            return Err(Error::WindowTooSmall("kernel xi window does not cover the lattice range".into()));
        }
    }
    let torus = Axis { per_unit: n, first: 0, len: shift as usize, half_offset: k1.xi.half_offset };
    let h: T = k1.eta.step();
    let nxp = n_xi_prime;
    let fft = FftPlanner::<T>::new().plan_fft_forward(nxp);
    let values: Vec<Complex<T>> = (0..torus.len)
        .into_par_iter()
        .flat_map_iter(|i| {
            // (m, band start, band end) in global eta indices
            let bands = |k: &SampledKernel<T>| -> Vec<(i64, i64, i64)> {
                (-m..=m)
                    .filter_map(|mm| {
                        let r = &k.rows[(i as i64 + mm * shift - k.xi.first) as usize];
                        (!r.values.is_empty())
                            .then(|| (mm, k.eta.global(r.start), k.eta.global(r.end() - 1) + 1))
                    })
                    .collect()
            };
            let b1 = bands(k1);
            let mut b2 = bands(k2);
            b2.sort_by_key(|t| t.1);
            let width = b2.iter().map(|t| t.2 - t.1).max().unwrap_or(0);
            let mut folded = vec![Complex::new(T::zero(), T::zero()); nxp];
            for &(m1, s1, e1) in &b1 {
                let from = b2.partition_point(|t| t.1 <= s1 - width);
                let to = b2.partition_point(|t| t.1 < e1);
                let r1 = &k1.rows[(i as i64 + m1 * shift - k1.xi.first) as usize];
                for &(m2, s2, e2) in &b2[from..to] {
                    if e2 <= s1 {
                        continue;
                    }
                    let r2 = &k2.rows[(i as i64 + m2 * shift - k2.xi.first) as usize];
                    let (lo, hi) = (s1.max(s2), e1.min(e2));
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for g in lo..hi {
                        acc = acc + r1.values[(g - s1) as usize] * r2.values[(g - s2) as usize].conj();
                    }
                    let slot = (m1 - m2).rem_euclid(nxp as i64) as usize;
                    folded[slot] = folded[slot] + acc * h;
                }
            }
            fft.process(&mut folded);
            folded
        })
        .collect();
    let norm = |k: &SampledKernel<T>| -> f64 {
        let lo = -m * shift;
        let hi = (m + 1) * shift;
        let s: f64 = k
            .rows
            .iter()
            .enumerate()
            .filter(|(r, _)| (lo..hi).contains(&k.xi.global(*r)))
            .map(|(_, r)| r.mass().as_f64())
            .sum();
        (s * k.cell_area().as_f64()).sqrt()
    };
    let table = BracketTable {
        xi: torus,
        n_xi_prime: nxp,
        lattice,
        values,
        self_bracket: false,
        input_norms: (norm(k1), norm(k2)),
        eta: k1.eta,
    };
    if std::ptr::eq(k1, k2) {
        real_clamp(table)
    } else {
        Ok(table)
    }
}

/// `<phi, T_p psi> = int int [phi, psi] e^{-2 pi i (k xi + l xi')} e^{-pi i k l}`.
///
/// On a half-lattice table `p = (2k', l)` and the integral runs over `[0, 1/2) x [0, 1)`
/// against `e^{-2 pi i xi 2k'} e^{-4 pi i l xi'}`.
pub fn bracket_fourier_coeff<T: Real>(b: &BracketTable<T>, p: &LatticePoint) -> Result<Complex<f64>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    let (k, l) = (p.k[0], p.l[0]);
    let n = b.xi.per_unit as i64;
    let nxp = b.n_xi_prime as i64;
    let (ok, lf) = match b.lattice {
        ZakLattice::Full => (2 * k.abs() < n && 2 * l.abs() < nxp, 1.0),
        ZakLattice::Half => {
            if k % 2 != 0 {
                return Err(Error::InvalidInput("half-lattice coefficients need even k".into()));
            }
            (2 * k.abs() < n && 4 * l.abs() < nxp, 2.0)
        }
    };
    if !ok {
        return Err(Error::AboveNyquist { k, l });
    }
    let kl = if b.lattice == ZakLattice::Full { (k * l) as f64 } else { 0.0 };
    let mut acc = Complex::new(0.0, 0.0);
    // separable phases: sum over xi' first
    let col: Vec<Complex<f64>> = (0..b.n_xi_prime).map(|j| cis_pi::<f64>(-2.0 * lf * l as f64 * b.xi_prime(j))).collect();
    for i in 0..b.xi.len {
        let mut row = Complex::new(0.0, 0.0);
        for (j, c) in col.iter().enumerate() {
            let z = b.at(i, j);
            row += Complex::new(z.re.as_f64(), z.im.as_f64()) * c;
        }
        acc += row * cis_pi::<f64>(-2.0 * k as f64 * b.xi.node_f64(i));
    }
    Ok(acc * cis_pi::<f64>(-kl) * b.cell())
}

/// `[T_p phi, psi] = e^{2 pi i (k xi + l xi')} e^{-pi i k l} [phi, psi]`.
pub fn bracket_translate_left<T: Real>(b: &BracketTable<T>, p: &LatticePoint) -> Result<BracketTable<T>> {
    translate(b, p, 1.0)
}

/// `[phi, T_p psi] = e^{-2 pi i (k xi + l xi')} e^{-pi i k l} [phi, psi]`.
pub fn bracket_translate_right<T: Real>(b: &BracketTable<T>, p: &LatticePoint) -> Result<BracketTable<T>> {
    translate(b, p, -1.0)
}

fn translate<T: Real>(b: &BracketTable<T>, p: &LatticePoint, sign: f64) -> Result<BracketTable<T>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    if b.lattice != ZakLattice::Full {
        return Err(Error::InvalidInput("bracket translation laws are stated for the full lattice".into()));
    }
    let (k, l) = (p.k[0] as f64, p.l[0] as f64);
    let kl = (p.k[0] * p.l[0]) as f64;
    let nxp = b.n_xi_prime as f64;
    Ok(b.map(|i, j, z| z * cis_pi::<T>(sign * 2.0 * (k * b.xi.node_f64(i) + l * j as f64 / nxp) - kl)))
}

/// True when `max |B| <= tol * ||phi|| ||psi||`.
pub fn orthogonality_test<T: Real>(b: &BracketTable<T>, tol: f64) -> bool {
    b.max_abs() <= tol * b.input_norms.0 * b.input_norms.1
}

/// Check that two tables share a torus grid.
pub fn check_same_torus<T: Real>(a: &BracketTable<T>, b: &BracketTable<T>) -> Result<()> {
    if a.same_torus(&b.xi, b.n_xi_prime, b.lattice) {
        Ok(())
    } else {
        Err(Error::GridMismatch("bracket tables on different torus grids".into()))
    }
}

/// Bracket of a separable generator: the product of its planar factors' brackets.
#[derive(Clone, Debug)]
pub struct SeparableBracket<T> {
    pub factors: Vec<BracketTable<T>>,
}

impl<T: Real> SeparableBracket<T> {
    /// Extreme values of a product of nonnegative self-brackets.
    pub fn min_max(&self) -> (f64, f64) {
        self.factors.iter().fold((1.0, 1.0), |(lo, hi), b| {
            let v = b.real_f64();
            let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo * mn, hi * mx)
        })
    }

    pub fn fourier_coeff(&self, p: &LatticePoint) -> Result<Complex<f64>> {
        if p.dim() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), got: p.dim() });
        }
        self.factors
            .iter()
            .enumerate()
            .try_fold(Complex::new(1.0, 0.0), |acc, (d, b)| Ok(acc * bracket_fourier_coeff(b, &p.factor(d))?))
    }
}
