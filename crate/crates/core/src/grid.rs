use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform one-dimensional grid with step `1/per_unit`.
///
/// Node `i` sits at `(first + i)/N`, shifted by half a step when
/// `half_offset` is set. Each node owns the cell of width `1/N` centred on it,
/// so with `half_offset` the cells are `[j/N, (j+1)/N)` and integer jumps of a
/// generator fall on cell boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub per_unit: usize,
    pub first: i64,
    pub len: usize,
    pub half_offset: bool,
}

impl Axis {
    /// Cells covering `[lo, hi)` for integers `lo < hi`.
    pub fn window(lo: i64, hi: i64, per_unit: usize, half_offset: bool) -> Self {
        assert!(hi > lo && per_unit > 0);
        Axis {
            per_unit,
            first: lo * per_unit as i64,
            len: ((hi - lo) as usize) * per_unit,
            half_offset,
        }
    }

    /// Build an axis from a float description, checking that the step divides 1.
    pub fn from_step(lo: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || len == 0 {
            return Err(Error::InvalidInput(format!("bad axis step {step} / len {len}")));
        }
        let n = (1.0 / step).round();
        if n < 1.0 || (n * step - 1.0).abs() > 1e-9 {
            return Err(Error::Commensurability { step });
        }
        let two_n = 2.0 * n;
        let p2 = (lo * two_n).round();
        if (lo * two_n - p2).abs() > 1e-6 {
            return Err(Error::GridMismatch(format!(
                "axis origin {lo} is not on the half-step lattice of step {step}"
            )));
        }
        let p2 = p2 as i64;
        Ok(Axis {
            per_unit: n as usize,
            first: p2.div_euclid(2),
            len,
            half_offset: p2.rem_euclid(2) == 1,
        })
    }

    pub fn step<T: Real>(&self) -> T {
        T::one() / T::of_usize(self.per_unit)
    }

    /// Twice the node position in units of the step; always an integer.
    #[inline]
    pub fn pos2(&self, i: usize) -> i64 {
        2 * (self.first + i as i64) + self.half_offset as i64
    }

    #[inline]
    pub fn node_f64(&self, i: usize) -> f64 {
        self.pos2(i) as f64 / (2 * self.per_unit) as f64
    }

    #[inline]
    pub fn node<T: Real>(&self, i: usize) -> T {
        T::of_i64(self.pos2(i)) / T::of_usize(2 * self.per_unit)
    }

    #[inline]
    pub fn global(&self, i: usize) -> i64 {
        self.first + i as i64
    }

    /// One past the last global index.
    pub fn end(&self) -> i64 {
        self.first + self.len as i64
    }

    #[inline]
    pub fn local(&self, g: i64) -> Option<usize> {
        if g >= self.first && g < self.end() {
            Some((g - self.first) as usize)
        } else {
            None
        }
    }

    /// Left edge of the covered interval.
    pub fn lo_f64(&self) -> f64 {
        (2 * self.first + self.half_offset as i64 - 1) as f64 / (2 * self.per_unit) as f64
    }

    /// Right edge of the covered interval.
    pub fn hi_f64(&self) -> f64 {
        (2 * self.end() + self.half_offset as i64 - 1) as f64 / (2 * self.per_unit) as f64
    }

    /// Same step and node offset, so global indices can be compared directly.
    pub fn aligned(&self, other: &Axis) -> bool {
        self.per_unit == other.per_unit && self.half_offset == other.half_offset
    }

    pub fn check_aligned(&self, other: &Axis, what: &str) -> Result<()> {
        if self.aligned(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{what}: step 1/{} offset {} vs step 1/{} offset {}",
                self.per_unit, self.half_offset, other.per_unit, other.half_offset
            )))
        }
    }
}

/// Samples of a function on `R^2` (the `n = 1` building block).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2n<T> {
    pub x: Axis,
    pub y: Axis,
    /// x-major: `values[ix * y.len + iy]`.
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Grid2n<T> {
    pub fn zeros(x: Axis, y: Axis) -> Self {
        Grid2n { x, y, values: vec![Complex::new(T::zero(), T::zero()); x.len * y.len] }
    }

    pub fn from_fn(x: Axis, y: Axis, f: impl Fn(T, T) -> Complex<T>) -> Self {
        let mut values = Vec::with_capacity(x.len * y.len);
        for ix in 0..x.len {
            let xv = x.node::<T>(ix);
            for iy in 0..y.len {
                values.push(f(xv, y.node::<T>(iy)));
            }
        }
        Grid2n { x, y, values }
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize) -> Complex<T> {
        self.values[ix * self.y.len + iy]
    }

    pub fn cell_area(&self) -> T {
        self.x.step::<T>() * self.y.step::<T>()
    }

    pub fn norm_sqr(&self) -> T {
        self.values.iter().map(|z| z.norm_sqr()).sum::<T>() * self.cell_area()
    }

    pub fn l2_norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `<self, other>` by the cell rule; grids must match exactly.
    pub fn inner(&self, other: &Grid2n<T>) -> Result<Complex<T>> {
        if self.x != other.x || self.y != other.y {
            return Err(Error::GridMismatch("inner product of differently sampled functions".into()));
        }
        let s: Complex<T> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t);
        Ok(s * self.cell_area())
    }

    /// Largest sample modulus on the outer ring of cells.
    pub fn boundary_max(&self) -> T {
        let (nx, ny) = (self.x.len, self.y.len);
        let mut m = T::zero();
        for ix in 0..nx {
            for iy in 0..ny {
                if ix == 0 || iy == 0 || ix + 1 == nx || iy + 1 == ny {
                    m = m.max(self.at(ix, iy).norm());
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }
}
