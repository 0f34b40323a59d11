use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{ClosedForm, Generator};
use crate::grid::{Axis, Grid2n};
use crate::lattice::LatticePoint;
use crate::scalar::{cis_pi, sinc, Real};

/// How a kernel was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "path")]
pub enum KernelPath {
    ClosedForm,
    Quadrature { rule: CellRule },
    Composed,
    Translated,
    ZakInverse,
    Input,
}

/// Quadrature over the `x` cells of a sampled function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum CellRule {
    /// Integrate the piecewise-constant interpolant exactly.
    Exact,
    /// Midpoint rule on `subdivisions` equal parts of each cell.
    Midpoint { subdivisions: usize },
}

/// One `xi` row of a kernel: nonzero band starting at local `eta` index `start`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelRow<T> {
    pub start: usize,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> KernelRow<T> {
    pub fn end(&self) -> usize {
        self.start + self.values.len()
    }

    pub fn get(&self, k: usize) -> Complex<T> {
        if k >= self.start && k < self.end() {
            self.values[k - self.start]
        } else {
            Complex::new(T::zero(), T::zero())
        }
    }

    pub fn mass(&self) -> T {
        self.values.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Drop leading and trailing exact zeros.
    fn trimmed(mut self) -> Self {
        let zero = T::zero();
        let lead = self.values.iter().take_while(|z| z.norm_sqr() == zero).count();
        if lead == self.values.len() {
            return KernelRow { start: 0, values: vec![] };
        }
        let trail = self.values.iter().rev().take_while(|z| z.norm_sqr() == zero).count();
        self.values.truncate(self.values.len() - trail);
        self.values.drain(..lead);
        self.start += lead;
        self
    }
}

/// Samples of a Weyl kernel `K(xi, eta)`, stored as banded rows.
#[derive(Clone, Debug)]
pub struct SampledKernel<T> {
    pub xi: Axis,
    pub eta: Axis,
    pub rows: Vec<KernelRow<T>>,
    pub path: KernelPath,
    /// Rows whose values were unavailable (outside the source window) and set to zero.
    pub unknown_rows: usize,
}

impl<T: Real> SampledKernel<T> {
    pub fn from_dense(xi: Axis, eta: Axis, values: Vec<Complex<T>>, path: KernelPath) -> Self {
        assert_eq!(values.len(), xi.len * eta.len);
        let rows = values
            .chunks(eta.len)
            .map(|c| KernelRow { start: 0, values: c.to_vec() }.trimmed())
            .collect();
        SampledKernel { xi, eta, rows, path, unknown_rows: 0 }
    }

    pub fn from_rows(xi: Axis, eta: Axis, rows: Vec<KernelRow<T>>, path: KernelPath) -> Self {
        assert_eq!(rows.len(), xi.len);
        let rows = rows.into_iter().map(|r| r.trimmed()).collect();
        SampledKernel { xi, eta, rows, path, unknown_rows: 0 }
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> Complex<T> {
        self.rows[i].get(k)
    }

    /// Value at global grid indices, zero outside the sampled window.
    #[inline]
    pub fn get_global(&self, gxi: i64, geta: i64) -> Complex<T> {
        match (self.xi.local(gxi), self.eta.local(geta)) {
            (Some(i), Some(k)) => self.get(i, k),
            _ => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.xi.len * self.eta.len];
        for (i, r) in self.rows.iter().enumerate() {
            out[i * self.eta.len + r.start..i * self.eta.len + r.end()].copy_from_slice(&r.values);
        }
        out
    }

    pub fn cell_area(&self) -> T {
        self.xi.step::<T>() * self.eta.step::<T>()
    }

    pub fn norm_sqr(&self) -> T {
        self.rows.iter().map(|r| r.mass()).sum::<T>() * self.cell_area()
    }

    pub fn max_abs(&self) -> T {
        self.rows
            .iter()
            .flat_map(|r| r.values.iter())
            .fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Squared mass in the outermost unit of either window edge (rows in `xi`,
    /// columns in `eta`), relative to the total. Large values mean the sampled
    /// window cuts off part of the kernel.
    pub fn edge_slab_fraction(&self) -> f64 {
        let total = self.norm_sqr().as_f64();
        if total == 0.0 {
            return 0.0;
        }
        let nr = self.xi.per_unit.min(self.xi.len / 2).max(1);
        let nc = self.eta.per_unit.min(self.eta.len / 2).max(1);
        let (c_lo, c_hi) = (nc, self.eta.len - nc);
        let mut edge = T::zero();
        for (i, r) in self.rows.iter().enumerate() {
            if i < nr || i >= self.xi.len - nr {
                edge = edge + r.mass();
                continue;
            }
            for (j, v) in r.values.iter().enumerate() {
                let c = r.start + j;
                if c < c_lo || c >= c_hi {
                    edge = edge + v.norm_sqr();
                }
            }
        }
        (edge * self.cell_area()).as_f64() / total
    }

    /// Re-index onto new aligned axes. Returns the squared mass that fell outside.
    pub fn reframe(&self, xi: Axis, eta: Axis) -> Result<(SampledKernel<T>, f64)> {
        self.xi.check_aligned(&xi, "reframe xi")?;
        self.eta.check_aligned(&eta, "reframe eta")?;
        let mut dropped = T::zero();
        let mut rows = vec![KernelRow::default(); xi.len];
        for (i, r) in self.rows.iter().enumerate() {
            if r.values.is_empty() {
                continue;
            }
            let Some(ni) = xi.local(self.xi.global(i)) else {
                dropped = dropped + r.mass();
                continue;
            };
            let mut vals = vec![Complex::new(T::zero(), T::zero()); eta.len];
            let mut any = false;
            for (j, v) in r.values.iter().enumerate() {
                match eta.local(self.eta.global(r.start + j)) {
                    Some(nk) => {
                        vals[nk] = *v;
                        any = true;
                    }
                    None => dropped = dropped + v.norm_sqr(),
                }
            }
            if any {
                rows[ni] = KernelRow { start: 0, values: vals }.trimmed();
            }
        }
        let out = SampledKernel { xi, eta, rows, path: self.path, unknown_rows: self.unknown_rows };
        Ok((out, (dropped * self.cell_area()).as_f64()))
    }

    /// Same kernel on a `xi` window widened by `units` on both sides, so that
    /// twisted translates with `|l| <= units` lose nothing.
    pub fn padded_xi(&self, units: i64) -> SampledKernel<T> {
        let n = self.xi.per_unit as i64;
        let lo = self.xi.first.div_euclid(n) - units;
        let hi = (self.xi.first + self.xi.len as i64 - 1).div_euclid(n) + 1 + units;
        let xi = Axis::window(lo, hi, self.xi.per_unit, self.xi.half_offset);
        self.reframe(xi, self.eta).expect("widened window contains the original").0
    }
}

/// Hilbert-Schmidt norm of a sampled kernel. For a Weyl kernel this equals `||phi||`.
pub fn hs_norm<T: Real>(k: &SampledKernel<T>) -> T {
    k.norm_sqr().sqrt()
}

/// Sampling window and quadrature rule for [`weyl_kernel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelWindow {
    pub xi: Axis,
    pub eta: Axis,
    pub rule: CellRule,
    /// Reject sampled functions that are nonzero on their grid boundary.
    pub strict_support: bool,
}

impl KernelWindow {
    /// `xi` in `[-(m+1), m+2)`, `eta` in `[-h, h)`, both with step `1/per_unit`.
    pub fn standard(m: usize, eta_half_width: usize, per_unit: usize, offsets: (bool, bool)) -> Self {
        let m = m as i64;
        let h = eta_half_width as i64;
        KernelWindow {
            xi: Axis::window(-(m + 1), m + 2, per_unit, offsets.0),
            eta: Axis::window(-h, h, per_unit, offsets.1),
            rule: CellRule::Exact,
            strict_support: true,
        }
    }

    /// Same window, with node offsets chosen for `g`.
    pub fn for_generator<T: Real>(m: usize, eta_half_width: usize, per_unit: usize, g: &Generator<T>) -> Self {
        Self::standard(m, eta_half_width, per_unit, g.preferred_offsets())
    }
}

/// Weyl kernel `K_g(xi, eta) = int g(x, eta - xi) e^{pi i x (xi + eta)} dx` of a planar generator.
pub fn weyl_kernel<T: Real>(g: &Generator<T>, w: &KernelWindow) -> Result<SampledKernel<T>> {
    match g {
        Generator::Closed(c) => Ok(closed_form_kernel(*c, w)),
        Generator::Composed { base, power } => {
            let left = weyl_kernel(base, w)?;
            let right = weyl_kernel(base, &KernelWindow { xi: w.eta, ..*w })?;
            let mut acc = left;
            for _ in 1..*power {
                acc = kernel_compose(&acc, &right)?;
            }
            Ok(acc)
        }
        Generator::Function(f) => kernel_from_function(f, w),
        Generator::Kernel(k) => Ok(k.reframe(w.xi, w.eta)?.0),
        Generator::Separable(f) => Err(Error::DimensionMismatch { expected: 1, got: f.len() }),
    }
}

/// Kernels of the planar factors of a separable generator.
pub fn weyl_kernel_factors<T: Real>(g: &Generator<T>, windows: &[KernelWindow]) -> Result<Vec<SampledKernel<T>>> {
    match g {
        Generator::Separable(f) => {
            if f.len() != windows.len() {
                return Err(Error::DimensionMismatch { expected: f.len(), got: windows.len() });
            }
            f.iter().zip(windows).map(|(g, w)| weyl_kernel(g, w)).collect()
        }
        other => {
            if windows.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: windows.len() });
            }
            Ok(vec![weyl_kernel(other, &windows[0])?])
        }
    }
}

/// Local indices of the nodes of `a` lying in `[lo, hi)`.
fn node_range(a: &Axis, lo: f64, hi: f64) -> (usize, usize) {
    let two_n = 2.0 * a.per_unit as f64;
    let h = a.half_offset as i64 as f64;
    let g_lo = ((two_n * lo - h) / 2.0).ceil() as i64;
    let g_hi = ((two_n * hi - h) / 2.0).ceil() as i64;
    let clamp = |g: i64| (g.clamp(a.first, a.end()) - a.first) as usize;
    (clamp(g_lo), clamp(g_hi))
}

fn closed_form_kernel<T: Real>(c: ClosedForm, w: &KernelWindow) -> SampledKernel<T> {
    let rows = (0..w.xi.len)
        .into_par_iter()
        .map(|i| {
            let xi_f = w.xi.node_f64(i);
            let Some((lo, hi)) = c.eta_support(xi_f) else {
                return KernelRow::default();
            };
            let (a, b) = node_range(&w.eta, lo, hi);
            let xi: T = w.xi.node(i);
            let values = (a..b).map(|k| c.kernel(xi, w.eta.node::<T>(k))).collect();
            KernelRow { start: a, values }
        })
        .collect();
    SampledKernel::from_rows(w.xi, w.eta, rows, KernelPath::ClosedForm)
}

/// Cell weight `int_cell e^{pi i x s} dx` relative to `e^{pi i x_j s}`.
fn cell_weight<T: Real>(rule: CellRule, h: T, s: T) -> Complex<T> {
    match rule {
        CellRule::Exact => Complex::new(h * sinc(h * s * T::of(0.5)), T::zero()),
        CellRule::Midpoint { subdivisions } => {
            let q = subdivisions.max(1);
            let sub = h / T::of_usize(q);
            let mut acc = Complex::new(T::zero(), T::zero());
            for j in 0..q {
                let d = (T::of_usize(j) + T::of(0.5)) * sub - h * T::of(0.5);
                acc = acc + cis_pi::<T>((d * s).as_f64());
            }
            acc * sub
        }
    }
}

fn kernel_from_function<T: Real>(g: &Grid2n<T>, w: &KernelWindow) -> Result<SampledKernel<T>> {
    if w.xi.per_unit != w.eta.per_unit || w.xi.per_unit != g.y.per_unit {
        return Err(Error::GridMismatch(format!(
            "kernel steps 1/{} x 1/{} must equal the function's y step 1/{}",
            w.xi.per_unit, w.eta.per_unit, g.y.per_unit
        )));
    }
    if g.y.half_offset != (w.xi.half_offset ^ w.eta.half_offset) {
        return Err(Error::GridMismatch("eta - xi does not land on the function's y nodes".into()));
    }
    let gmax = g.max_abs();
    if w.strict_support && g.boundary_max() > gmax * T::of(1e-12) {
        return Err(Error::BoundaryMass);
    }
    // nonzero samples per y column
    let zero = T::zero();
    let columns: Vec<Vec<(T, Complex<T>)>> = (0..g.y.len)
        .map(|iy| {
            (0..g.x.len)
                .filter_map(|ix| {
                    let v = g.at(ix, iy);
                    (v.norm_sqr() > zero).then(|| (g.x.node::<T>(ix), v))
                })
                .collect()
        })
        .collect();
    let Some(y_lo) = columns.iter().position(|c| !c.is_empty()) else {
        let rows = vec![KernelRow::default(); w.xi.len];
        return Ok(SampledKernel::from_rows(w.xi, w.eta, rows, KernelPath::Quadrature { rule: w.rule }));
    };
    let y_hi = columns.iter().rposition(|c| !c.is_empty()).unwrap() + 1;
    let hx: T = g.x.step();
    let rule = w.rule;
    let rows = (0..w.xi.len)
        .into_par_iter()
        .map(|i| {
            let p_xi = w.xi.pos2(i);
            // eta global index for y column iy
            let eta_of = |iy: usize| (p_xi + g.y.pos2(iy) - w.eta.half_offset as i64).div_euclid(2);
            let (g0, g1) = (eta_of(y_lo), eta_of(y_hi - 1) + 1);
            let (g0, g1) = (g0.max(w.eta.first), g1.min(w.eta.end()));
            if g0 >= g1 {
                return KernelRow::default();
            }
            let xi: T = w.xi.node(i);
            let mut values = Vec::with_capacity((g1 - g0) as usize);
            for ge in g0..g1 {
                let k = (ge - w.eta.first) as usize;
                let p_v = w.eta.pos2(k) - p_xi;
                let iy = (p_v - g.y.half_offset as i64).div_euclid(2) - g.y.first;
                let col = if iy >= 0 && (iy as usize) < g.y.len { &columns[iy as usize][..] } else { &[][..] };
                let s = xi + w.eta.node::<T>(k);
                let mut acc = Complex::new(T::zero(), T::zero());
                for (x, v) in col {
                    acc = acc + v * cis_pi::<T>((*x * s).as_f64());
                }
                values.push(acc * cell_weight(rule, hx, s));
            }
            KernelRow { start: (g0 - w.eta.first) as usize, values }
        })
        .collect();
    Ok(SampledKernel::from_rows(w.xi, w.eta, rows, KernelPath::Quadrature { rule }))
}

/// Diagnostics from [`kernel_to_function`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub edge_fraction: f64,
    pub tolerance: f64,
}

/// Recover `g(x, v) = int K(xi, xi + v) e^{-2 pi i x (xi + v/2)} dxi` on the given `x` axis.
///
/// The `y` axis is implied by the kernel grid. Refuses kernels whose mass near
/// the `xi` window edges exceeds `tol`, since the integral would be truncated.
pub fn kernel_to_function<T: Real>(k: &SampledKernel<T>, x: Axis, tol: f64) -> Result<(Grid2n<T>, InversionReport)> {
    if k.xi.per_unit != k.eta.per_unit {
        return Err(Error::GridMismatch("kernel inversion needs equal xi and eta steps".into()));
    }
    let edge_fraction = k.edge_slab_fraction();
    if edge_fraction > tol {
        return Err(Error::InsufficientDecay { edge_fraction, tolerance: tol });
    }
    let y_half = k.xi.half_offset ^ k.eta.half_offset;
    let gy = |i: usize, kk: usize| (k.eta.pos2(kk) - k.xi.pos2(i) - y_half as i64).div_euclid(2);
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for (i, r) in k.rows.iter().enumerate() {
        if !r.values.is_empty() {
            lo = lo.min(gy(i, r.start));
            hi = hi.max(gy(i, r.end() - 1));
        }
    }
    if lo > hi {
        lo = 0;
        hi = 0;
    }
    let y = Axis { per_unit: k.xi.per_unit, first: lo, len: (hi - lo + 1) as usize, half_offset: y_half };
    let hxi: T = k.xi.step();
    let cols: Vec<Vec<Complex<T>>> = (0..x.len)
        .into_par_iter()
        .map(|a| {
            let xa = x.node_f64(a);
            let mut col = vec![Complex::new(T::zero(), T::zero()); y.len];
            for (i, r) in k.rows.iter().enumerate() {
                if r.values.is_empty() {
                    continue;
                }
                let xi = k.xi.node_f64(i);
                for (j, v) in r.values.iter().enumerate() {
                    let kk = r.start + j;
                    let vv = k.eta.node_f64(kk) - xi;
                    let iy = (gy(i, kk) - lo) as usize;
                    col[iy] = col[iy] + v * cis_pi::<T>(-2.0 * xa * (xi + 0.5 * vv));
                }
            }
            col.into_iter().map(|z| z * hxi).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(x.len * y.len);
    for c in cols {
        values.extend(c);
    }
    Ok((Grid2n { x, y, values }, InversionReport { edge_fraction, tolerance: tol }))
}

/// Kernel of the operator product: `(K1 o K2)(xi, eta) = int K1(xi, y) K2(y, eta) dy`.
///
/// The middle axis (`eta` of `k1`, `xi` of `k2`) must be aligned; the integral
/// runs over their common range by the midpoint rule.
pub fn kernel_compose<T: Real>(k1: &SampledKernel<T>, k2: &SampledKernel<T>) -> Result<SampledKernel<T>> {
    k1.eta.check_aligned(&k2.xi, "composition middle axis")?;
    let h: T = k1.eta.step();
    let n_out = k2.eta.len;
    let rows = k1
        .rows
        .par_iter()
        .map(|r| {
            let mut acc = vec![Complex::new(T::zero(), T::zero()); n_out];
            let mut lo = usize::MAX;
            let mut hi = 0usize;
            for (j, a) in r.values.iter().enumerate() {
                let Some(m) = k2.xi.local(k1.eta.global(r.start + j)) else { continue };
                let r2 = &k2.rows[m];
                if r2.values.is_empty() {
                    continue;
                }
                lo = lo.min(r2.start);
                hi = hi.max(r2.end());
                for (q, b) in r2.values.iter().enumerate() {
                    acc[r2.start + q] = acc[r2.start + q] + a * b;
                }
            }
            if lo >= hi {
                return KernelRow::default();
            }
            KernelRow { start: lo, values: acc[lo..hi].iter().map(|z| z * h).collect() }
        })
        .collect();
    Ok(SampledKernel::from_rows(k1.xi, k2.eta, rows, KernelPath::Composed))
}

/// Kernel of a twisted translate: `K_{T phi}(xi, eta) = e^{pi i (2 xi + l) k} K_phi(xi + l, eta)`.
///
/// Rows whose source `xi + l` lies outside the window are set to zero and
/// counted in `unknown_rows`.
pub fn kernel_twisted_translate<T: Real>(k: &SampledKernel<T>, p: &LatticePoint) -> Result<SampledKernel<T>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    let (kk, l) = (p.k[0], p.l[0]);
    let shift = l * k.xi.per_unit as i64;
    if shift.unsigned_abs() as usize >= k.xi.len {
        return Err(Error::WindowTooSmall(format!("xi + {l} leaves the sampled window entirely")));
    }
    let mut unknown = 0;
    let rows = (0..k.xi.len)
        .map(|i| {
            let src = i as i64 + shift;
            if src < 0 || src as usize >= k.xi.len {
                unknown += 1;
                return KernelRow::default();
            }
            let ph = cis_pi::<T>((2.0 * k.xi.node_f64(i) + l as f64) * kk as f64);
            let r = &k.rows[src as usize];
            KernelRow { start: r.start, values: r.values.iter().map(|v| v * ph).collect() }
        })
        .collect();
    let mut out = SampledKernel::from_rows(k.xi, k.eta, rows, KernelPath::Translated);
    out.unknown_rows = unknown + k.unknown_rows;
    Ok(out)
}
