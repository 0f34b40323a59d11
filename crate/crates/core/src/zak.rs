use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::kernel::{KernelPath, KernelRow, SampledKernel};
use crate::lattice::LatticePoint;
use crate::scalar::{cis_pi, Real};

/// Which lattice the Zak sum runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZakLattice {
    /// Integer shifts, `xi` in `[0, 1)`.
    Full,
    /// Half-integer shifts, `xi` in `[0, 1/2)`.
    Half,
}

impl ZakLattice {
    /// Number of `xi` grid steps per lattice shift.
    fn shift(self, per_unit: usize) -> usize {
        match self {
            ZakLattice::Full => per_unit,
            ZakLattice::Half => per_unit / 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumPath {
    Fft,
    Direct,
}

/// Mass bookkeeping for the truncated lattice sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub truncation: usize,
    /// Squared kernel mass in the window but outside the summed slabs, relative to the total.
    pub discarded_fraction: f64,
    /// Squared mass in the outermost summed slabs, relative; estimates what lies beyond.
    pub edge_fraction: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Default relative tail tolerance.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Samples of `Z(xi, xi', eta)` on a torus grid times an `eta` window.
#[derive(Clone, Debug)]
pub struct ZakField<T> {
    pub xi: Axis,
    pub n_xi_prime: usize,
    pub eta: Axis,
    pub lattice: ZakLattice,
    pub truncation: usize,
    /// `values[(i * n_xi_prime + j) * eta.len + k]`.
    pub values: Vec<Complex<T>>,
    pub tail: TailReport,
}

impl<T: Real> ZakField<T> {
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n_xi_prime + j) * self.eta.len + k
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> Complex<T> {
        self.values[self.idx(i, j, k)]
    }

    pub fn xi_prime(&self, j: usize) -> f64 {
        j as f64 / self.n_xi_prime as f64
    }

    /// Measure of one `(xi, xi', eta)` cell.
    pub fn cell(&self) -> T {
        self.xi.step::<T>() * self.eta.step::<T>() / T::of_usize(self.n_xi_prime)
    }

    pub fn norm(&self) -> T {
        (self.values.iter().map(|z| z.norm_sqr()).sum::<T>() * self.cell()).sqrt()
    }

    pub fn same_grid(&self, other: &ZakField<T>) -> bool {
        self.xi == other.xi && self.n_xi_prime == other.n_xi_prime && self.eta == other.eta && self.lattice == other.lattice
    }

    pub fn map(&self, f: impl Fn(usize, usize, Complex<T>) -> Complex<T> + Sync) -> ZakField<T> {
        let nj = self.n_xi_prime;
        let ne = self.eta.len;
        let values = self
            .values
            .par_chunks(ne)
            .enumerate()
            .flat_map_iter(|(ij, c)| {
                let (i, j) = (ij / nj, ij % nj);
                c.iter().map(move |z| (i, j, *z)).collect::<Vec<_>>()
            })
            .map(|(i, j, z)| f(i, j, z))
            .collect();
        ZakField { values, ..self.clone_meta() }
    }

    pub(crate) fn clone_meta(&self) -> ZakField<T> {
        ZakField {
            xi: self.xi,
            n_xi_prime: self.n_xi_prime,
            eta: self.eta,
            lattice: self.lattice,
            truncation: self.truncation,
            values: vec![],
            tail: self.tail,
        }
    }
}

/// Options for the forward transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZakOptions {
    pub truncation: usize,
    pub n_xi_prime: Option<usize>,
    pub path: SumPath,
}

impl ZakOptions {
    pub fn new(truncation: usize) -> Self {
        ZakOptions { truncation, n_xi_prime: None, path: SumPath::Fft }
    }

    pub fn direct(self) -> Self {
        ZakOptions { path: SumPath::Direct, ..self }
    }

    pub fn with_n_xi_prime(self, n: usize) -> Self {
        ZakOptions { n_xi_prime: Some(n), ..self }
    }

    pub fn resolved_n_xi_prime(&self) -> usize {
        self.n_xi_prime.unwrap_or_else(|| (2 * self.truncation + 1).next_power_of_two())
    }
}

/// `Z(xi, xi', eta) = sum_{|m| <= M} K(xi + m, eta) e^{-2 pi i m xi'}`.
pub fn zak_forward<T: Real>(k: &SampledKernel<T>, opts: &ZakOptions) -> Result<ZakField<T>> {
    forward(k, opts, ZakLattice::Full)
}

/// Half-lattice variant: `Z(xi, xi', eta) = sum_m K(xi + m/2, eta) e^{-2 pi i m xi'}`, `xi` in `[0, 1/2)`.
pub fn zak_pi_h_forward<T: Real>(k: &SampledKernel<T>, opts: &ZakOptions) -> Result<ZakField<T>> {
    forward(k, opts, ZakLattice::Half)
}

/// Global `xi` index of the first node of the torus and the number of torus nodes.
fn torus_axis(per_unit: usize, half_offset: bool, lattice: ZakLattice) -> Axis {
    Axis { per_unit, first: 0, len: lattice.shift(per_unit), half_offset }
}

fn forward<T: Real>(k: &SampledKernel<T>, opts: &ZakOptions, lattice: ZakLattice) -> Result<ZakField<T>> {
    let n = k.xi.per_unit;
    if lattice == ZakLattice::Half && n % 2 != 0 {
        return Err(Error::GridMismatch("half-lattice Zak needs an even number of xi steps per unit".into()));
    }
    let m = opts.truncation as i64;
    let nxp = opts.resolved_n_xi_prime();
    if nxp < 2 * opts.truncation + 1 {
        return Err(Error::WindowTooSmall(format!("N_xi' = {nxp} is below 2M + 1 = {}", 2 * m + 1)));
    }
    let xi = torus_axis(n, k.xi.half_offset, lattice);
    let shift = lattice.shift(n) as i64;
    let lo = -m * shift;
    let hi = (m + 1) * shift;
    if k.xi.first > lo || k.xi.end() < hi {
        return Err(Error::WindowTooSmall(format!(
            "kernel xi window [{}, {}) does not cover the lattice range [{}, {})",
            k.xi.lo_f64(),
            k.xi.hi_f64(),
            lo as f64 / n as f64,
            hi as f64 / n as f64
        )));
    }
    let tail = tail_report(k, lo, hi, shift, opts.truncation);
    let ne = k.eta.len;
    let fft = FftPlanner::<T>::new().plan_fft_forward(nxp);
    let values = (0..xi.len)
        .into_par_iter()
        .flat_map_iter(|i| {
            // fold lattice terms by m mod N', then sum over the torus
            let mut buf = vec![Complex::new(T::zero(), T::zero()); nxp * ne];
            let mut rows: Vec<(i64, &KernelRow<T>)> = Vec::with_capacity((2 * m + 1) as usize);
            for mm in -m..=m {
                let gi = i as i64 + mm * shift;
                let r = &k.rows[(gi - k.xi.first) as usize];
                if !r.values.is_empty() {
                    rows.push((mm, r));
                }
            }
            match opts.path {
                SumPath::Fft => {
                    for (mm, r) in &rows {
                        let slot = mm.rem_euclid(nxp as i64) as usize;
                        for (q, v) in r.values.iter().enumerate() {
                            let kk = r.start + q;
                            buf[kk * nxp + slot] = buf[kk * nxp + slot] + v;
                        }
                    }
                    fft_lines(&fft, &mut buf, nxp);
                }
                SumPath::Direct => {
                    for (mm, r) in &rows {
                        for j in 0..nxp {
                            let ph = cis_pi::<T>(-2.0 * (*mm as f64) * j as f64 / nxp as f64);
                            for (q, v) in r.values.iter().enumerate() {
                                let kk = r.start + q;
                                buf[kk * nxp + j] = buf[kk * nxp + j] + v * ph;
                            }
                        }
                    }
                }
            }
            // transpose (eta, xi') -> (xi', eta)
            let mut out = vec![Complex::new(T::zero(), T::zero()); nxp * ne];
            for kk in 0..ne {
                for j in 0..nxp {
                    out[j * ne + kk] = buf[kk * nxp + j];
                }
            }
            out
        })
        .collect();
    Ok(ZakField { xi, n_xi_prime: nxp, eta: k.eta, lattice, truncation: opts.truncation, values, tail })
}

fn fft_lines<T: Real>(fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>], len: usize) {
    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
    for line in buf.chunks_mut(len) {
        if line.iter().any(|z| z.re != T::zero() || z.im != T::zero()) {
            fft.process_with_scratch(line, &mut scratch);
        }
    }
}

fn tail_report<T: Real>(k: &SampledKernel<T>, lo: i64, hi: i64, shift: i64, truncation: usize) -> TailReport {
    let mut total = 0.0;
    let mut outside = 0.0;
    let mut edge = 0.0;
    for (i, r) in k.rows.iter().enumerate() {
        let g = k.xi.global(i);
        let mass = r.mass().as_f64();
        total += mass;
        if g < lo || g >= hi {
            outside += mass;
        } else if g < lo + shift || g >= hi - shift {
            edge += mass;
        }
    }
    let (d, e) = if total > 0.0 { (outside / total, edge / total) } else { (0.0, 0.0) };
    TailReport {
        truncation,
        discarded_fraction: d,
        edge_fraction: e,
        tolerance: TAIL_TOLERANCE,
        within_tolerance: d <= TAIL_TOLERANCE && e <= TAIL_TOLERANCE,
    }
}

/// Recover the kernel from its Zak field by discrete Fourier inversion in `xi'`.
///
/// All `N_xi'` modes are returned (centred on `m = 0`), so the inversion is
/// exact for any field on the grid, not only for transforms of kernels.
pub fn zak_inverse<T: Real>(z: &ZakField<T>) -> SampledKernel<T> {
    zak_inverse_with(z, SumPath::Fft)
}

pub fn zak_inverse_with<T: Real>(z: &ZakField<T>, path: SumPath) -> SampledKernel<T> {
    let nxp = z.n_xi_prime;
    let ne = z.eta.len;
    let shift = z.lattice.shift(z.xi.per_unit);
    let m_lo = -((nxp / 2) as i64);
    let fft = FftPlanner::<T>::new().plan_fft_inverse(nxp);
    let scale = T::one() / T::of_usize(nxp);
    // per torus node i: rows for every mode m
    let blocks: Vec<Vec<KernelRow<T>>> = (0..z.xi.len)
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); ne * nxp];
            for j in 0..nxp {
                for kk in 0..ne {
                    buf[kk * nxp + j] = z.at(i, j, kk);
                }
            }
            let coeffs = match path {
                SumPath::Fft => {
                    fft_lines(&fft, &mut buf, nxp);
                    buf
                }
                SumPath::Direct => {
                    let mut out = vec![Complex::new(T::zero(), T::zero()); ne * nxp];
                    for kk in 0..ne {
                        for r in 0..nxp {
                            let mut acc = Complex::new(T::zero(), T::zero());
                            for j in 0..nxp {
                                acc = acc + buf[kk * nxp + j] * cis_pi::<T>(2.0 * (r * j) as f64 / nxp as f64);
                            }
                            out[kk * nxp + r] = acc;
                        }
                    }
                    out
                }
            };
            (0..nxp as i64)
                .map(|t| {
                    let m = m_lo + t;
                    let slot = m.rem_euclid(nxp as i64) as usize;
                    let values = (0..ne).map(|kk| coeffs[kk * nxp + slot] * scale).collect();
                    KernelRow { start: 0, values }
                })
                .collect()
        })
        .collect();
    let xi = Axis {
        per_unit: z.xi.per_unit,
        first: m_lo * shift as i64,
        len: nxp * shift,
        half_offset: z.xi.half_offset,
    };
    let mut rows = vec![KernelRow::default(); xi.len];
    for (i, block) in blocks.into_iter().enumerate() {
        for (t, r) in block.into_iter().enumerate() {
            rows[t * shift + i] = r;
        }
    }
    SampledKernel::from_rows(xi, z.eta, rows, KernelPath::ZakInverse)
}

/// Zak field of a twisted translate: multiply by `e^{2 pi i (k xi + l xi')} e^{pi i k l}`.
pub fn zak_translate<T: Real>(z: &ZakField<T>, p: &LatticePoint) -> Result<ZakField<T>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    if z.lattice != ZakLattice::Full {
        return Err(Error::InvalidInput("use zak_pi_h_translate on half-lattice fields".into()));
    }
    let (k, l) = (p.k[0] as f64, p.l[0] as f64);
    let kl = (p.k[0] * p.l[0]) as f64;
    let nxp = z.n_xi_prime as f64;
    Ok(z.map(|i, j, v| v * cis_pi::<T>(2.0 * (k * z.xi.node_f64(i) + l * j as f64 / nxp) + kl)))
}

/// Half-lattice law for `T_(2k, l)`: multiply by `e^{2 pi i xi 2k} (e^{2 pi i l xi'})^2`.
///
/// Only even first components are supported; the odd case is not covered by the theory.
pub fn zak_pi_h_translate<T: Real>(z: &ZakField<T>, p: &LatticePoint) -> Result<ZakField<T>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    if z.lattice != ZakLattice::Half {
        return Err(Error::InvalidInput("zak_pi_h_translate needs a half-lattice field".into()));
    }
    if p.k[0] % 2 != 0 {
        return Err(Error::InvalidInput(format!("half-lattice translate law needs even k, got {}", p.k[0])));
    }
    let (k2, l) = (p.k[0] as f64, p.l[0] as f64);
    let nxp = z.n_xi_prime as f64;
    Ok(z.map(|i, j, v| v * cis_pi::<T>(2.0 * k2 * z.xi.node_f64(i) + 4.0 * l * j as f64 / nxp)))
}

/// Copy of `z` with every `xi'` node in `[lo, hi)` set to zero.
///
/// The bracket of the result vanishes on that band, which makes it a
/// convenient frame-but-not-Riesz fixture.
pub fn zero_xi_prime_band<T: Real>(z: &ZakField<T>, lo: f64, hi: f64) -> ZakField<T> {
    let nxp = z.n_xi_prime as f64;
    z.map(|_, j, v| {
        let xp = j as f64 / nxp;
        if xp >= lo && xp < hi {
            Complex::new(T::zero(), T::zero())
        } else {
            v
        }
    })
}
