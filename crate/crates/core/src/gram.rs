use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bracket::{bracket_fourier_coeff, BracketTable};
use crate::error::{Error, Result};
use crate::grid::Grid2n;
use crate::kernel::{kernel_twisted_translate, SampledKernel};
use crate::lattice::{cocycle, lattice_box, twisted_translate, LatticePoint};
use crate::scalar::{c64_of, Real};

/// Inner products `G[p, q] = <T_p g, T_q g>` over the lattice box `|k|, |l| <= R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub points: Vec<LatticePoint>,
    pub radius: i64,
    /// Row-major, `entries[a * dim + b]`.
    pub entries: Vec<Complex<f64>>,
    pub provenance: String,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn at(&self, a: usize, b: usize) -> Complex<f64> {
        self.entries[a * self.dim() + b]
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.iter().position(|q| q == p)
    }

    /// Principal submatrix over the smaller box `|k|, |l| <= r`.
    pub fn section(&self, r: i64) -> GramMatrix {
        let keep: Vec<usize> = (0..self.dim())
            .filter(|&a| self.points[a].k.iter().chain(&self.points[a].l).all(|v| v.abs() <= r))
            .collect();
        let entries = keep.iter().flat_map(|&a| keep.iter().map(move |&b| (a, b))).map(|(a, b)| self.at(a, b)).collect();
        GramMatrix {
            points: keep.iter().map(|&a| self.points[a].clone()).collect(),
            radius: r,
            entries,
            provenance: self.provenance.clone(),
        }
    }

    pub fn max_offdiag(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    m = m.max(self.at(a, b).norm());
                }
            }
        }
        m
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn assemble(points: Vec<LatticePoint>, radius: i64, provenance: String, ip: impl Fn(usize, usize) -> Complex<f64> + Sync) -> GramMatrix {
    let n = points.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let vals: Vec<Complex<f64>> = pairs.par_iter().map(|&(a, b)| ip(a, b)).collect();
    let mut entries = vec![Complex::new(0.0, 0.0); n * n];
    for (&(a, b), v) in pairs.iter().zip(vals) {
        entries[a * n + b] = v;
        entries[b * n + a] = v.conj();
    }
    // diagonal of a Gram matrix is real
    for a in 0..n {
        entries[a * n + a].im = 0.0;
    }
    GramMatrix { points, radius, entries, provenance }
}

/// Gram matrix by direct discrete inner products of translated samples.
///
/// Fails when a translate in the box would move nonzero samples off the grid.
pub fn gram_matrix<T: Real>(g: &Grid2n<T>, radius: i64) -> Result<GramMatrix> {
    let points = lattice_box(radius, 1);
    let translates: Vec<Grid2n<T>> = points
        .par_iter()
        .map(|p| twisted_translate(g, p).map_err(|_| Error::WindowTooSmall(format!("lattice box of radius {radius} exceeds the grid padding"))))
        .collect::<Result<_>>()?;
    Ok(assemble(points, radius, "function samples".into(), |a, b| {
        c64_of(translates[a].inner(&translates[b]).expect("same grid"))
    }))
}

/// Gram matrix through the kernels: `<T_p phi, T_q phi> = <K_{T_p phi}, K_{T_q phi}>_HS`.
///
/// The kernel window must hold every translated kernel in the box without loss.
pub fn gram_matrix_kernel<T: Real>(k: &SampledKernel<T>, radius: i64) -> Result<GramMatrix> {
    let points = lattice_box(radius, 1);
    let base = k.norm_sqr().as_f64();
    let translates: Vec<SampledKernel<T>> = points.par_iter().map(|p| kernel_twisted_translate(k, p)).collect::<Result<_>>()?;
    for t in &translates {
        if (t.norm_sqr().as_f64() - base).abs() > 1e-12 * base.max(f64::MIN_POSITIVE) {
            return Err(Error::WindowTooSmall(format!("kernel xi window loses mass under translates of radius {radius}")));
        }
    }
    let area = k.cell_area().as_f64();
    Ok(assemble(points, radius, "kernel samples".into(), |a, b| {
        let (ka, kb) = (&translates[a], &translates[b]);
        let mut acc = Complex::new(0.0, 0.0);
        for (ra, rb) in ka.rows.iter().zip(&kb.rows) {
            let (lo, hi) = (ra.start.max(rb.start), ra.end().min(rb.end()));
            for e in lo..hi {
                acc += c64_of(ra.values[e - ra.start] * rb.values[e - rb.start].conj());
            }
        }
        acc * area
    }))
}

/// `(A_est, B_est)`: extreme eigenvalues of the Gram matrix.
pub fn gram_bounds(g: &GramMatrix) -> Result<(f64, f64)> {
    let n = g.dim();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let m = DMatrix::from_fn(n, n, |a, b| g.at(a, b));
    let eig = SymmetricEigen::new(m).eigenvalues;
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo < -1e-9 * g.frobenius() {
        return Err(Error::CorruptedGram { min_eig: lo });
    }
    Ok((lo.max(0.0), hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionBounds {
    pub radius: i64,
    pub lower: f64,
    pub upper: f64,
}

/// Eigenvalue bounds of the principal sections of radius `0..=R`.
pub fn finite_section_trace(g: &GramMatrix) -> Result<Vec<SectionBounds>> {
    (0..=g.radius)
        .map(|r| {
            let (lower, upper) = gram_bounds(&g.section(r))?;
            Ok(SectionBounds { radius: r, lower, upper })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    /// Largest `|G[0, q] - coeff(q)|` over the box.
    pub max_deviation: f64,
    pub worst_point: LatticePoint,
    pub coefficients_pass: bool,
    pub gram_interval: (f64, f64),
    pub bracket_interval: (f64, f64),
    /// Gram interval inside the bracket interval widened by 5%.
    pub interval_pass: bool,
    pub pass: bool,
}

/// Relative slack allowed when comparing the eigenvalue and bracket intervals.
pub const INTERVAL_SLACK: f64 = 0.05;

/// Compare the Gram row of the origin with the bracket's Fourier coefficients.
pub fn cross_validate<T: Real>(g: &GramMatrix, b: &BracketTable<T>, tol: f64) -> Result<CrossValidation> {
    let origin = g
        .index_of(&LatticePoint::origin(1))
        .ok_or_else(|| Error::InvalidInput("Gram box does not contain the origin".into()))?;
    let mut max_deviation = 0.0;
    let mut worst_point = LatticePoint::origin(1);
    for (q, p) in g.points.iter().enumerate() {
        let d = (g.at(origin, q) - bracket_fourier_coeff(b, p)?).norm();
        if d > max_deviation {
            max_deviation = d;
            worst_point = p.clone();
        }
    }
    let gram_interval = gram_bounds(g)?;
    let v = b.real_f64();
    let bracket_interval = (
        v.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0),
        v.iter().cloned().fold(0.0, f64::max),
    );
    let interval_pass = gram_interval.0 >= bracket_interval.0 * (1.0 - INTERVAL_SLACK) - 1e-12
        && gram_interval.1 <= bracket_interval.1 * (1.0 + INTERVAL_SLACK) + 1e-12;
    let coefficients_pass = max_deviation <= tol;
    Ok(CrossValidation {
        max_deviation,
        worst_point,
        coefficients_pass,
        gram_interval,
        bracket_interval,
        interval_pass,
        pass: coefficients_pass && interval_pass,
    })
}

/// Expected entry from the composition law: `G[p, q] = c(-p, q) <g, T_{q-p} g>`.
pub fn toeplitz_entry(g: &GramMatrix, a: usize, b: usize) -> Option<Complex<f64>> {
    let p = &g.points[a];
    let q = &g.points[b];
    let d = q.add(&p.neg()).ok()?;
    let o = g.index_of(&LatticePoint::origin(1))?;
    let j = g.index_of(&d)?;
    let c = cocycle(&p.neg(), q).ok()? as f64;
    Some(g.at(o, j) * c)
}
