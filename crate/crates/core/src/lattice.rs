use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid2n;
use crate::scalar::{cis_pi, Real};

/// A point `(k, l)` of `Z^n x Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LatticePoint {
    pub k: Vec<i64>,
    pub l: Vec<i64>,
}

impl LatticePoint {
    pub fn new(k: Vec<i64>, l: Vec<i64>) -> Result<Self> {
        if k.len() != l.len() || k.is_empty() {
            return Err(Error::DimensionMismatch { expected: k.len(), got: l.len() });
        }
        Ok(LatticePoint { k, l })
    }

    pub fn planar(k: i64, l: i64) -> Self {
        LatticePoint { k: vec![k], l: vec![l] }
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn origin(n: usize) -> Self {
        LatticePoint { k: vec![0; n], l: vec![0; n] }
    }

    pub fn add(&self, other: &LatticePoint) -> Result<Self> {
        same_dim(self, other)?;
        Ok(LatticePoint {
            k: self.k.iter().zip(&other.k).map(|(a, b)| a + b).collect(),
            l: self.l.iter().zip(&other.l).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn neg(&self) -> Self {
        LatticePoint {
            k: self.k.iter().map(|a| -a).collect(),
            l: self.l.iter().map(|a| -a).collect(),
        }
    }

    /// `k . l`, the exponent of the `e^{pi i k l}` correction.
    pub fn kl(&self) -> i64 {
        self.k.iter().zip(&self.l).map(|(a, b)| a * b).sum()
    }

    /// Component `d` as a planar point.
    pub fn factor(&self, d: usize) -> LatticePoint {
        LatticePoint::planar(self.k[d], self.l[d])
    }
}

fn same_dim(p: &LatticePoint, q: &LatticePoint) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    Ok(())
}

/// Symplectic form `k1.l2 - l1.k2`.
pub fn symplectic(p: &LatticePoint, q: &LatticePoint) -> Result<i64> {
    same_dim(p, q)?;
    let a: i64 = p.k.iter().zip(&q.l).map(|(a, b)| a * b).sum();
    let b: i64 = p.l.iter().zip(&q.k).map(|(a, b)| a * b).sum();
    Ok(a - b)
}

/// Cocycle `e^{-pi i (k1.l2 - l1.k2)}` of the twisted translates: `T_p T_q = c(p, q) T_{p+q}`.
///
/// Always `+1` or `-1`; returned exactly.
pub fn cocycle(p: &LatticePoint, q: &LatticePoint) -> Result<i8> {
    let s = symplectic(p, q)?;
    Ok(if s.rem_euclid(2) == 0 { 1 } else { -1 })
}

pub fn cocycle_c<T: Real>(p: &LatticePoint, q: &LatticePoint) -> Result<Complex<T>> {
    Ok(Complex::new(T::of_i64(cocycle(p, q)? as i64), T::zero()))
}

/// All points with `|k_d|, |l_d| <= radius`, in lexicographic order of `(k, l)`.
pub fn lattice_box(radius: i64, n: usize) -> Vec<LatticePoint> {
    let side: Vec<i64> = (-radius..=radius).collect();
    let mut out = vec![Vec::<i64>::new()];
    for _ in 0..2 * n {
        let mut next = Vec::with_capacity(out.len() * side.len());
        for prefix in &out {
            for &v in &side {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter()
        .map(|c| LatticePoint { k: c[..n].to_vec(), l: c[n..].to_vec() })
        .collect()
}

/// `(T_(k,l) g)(x, y) = e^{pi i (x l - y k)} g(x - k, y - l)` on a planar grid.
///
/// Pure relabelling of samples plus a phase. Fails rather than silently drop
/// nonzero samples that would leave the grid.
pub fn twisted_translate<T: Real>(g: &Grid2n<T>, p: &LatticePoint) -> Result<Grid2n<T>> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: p.dim() });
    }
    let (k, l) = (p.k[0], p.l[0]);
    let sx = k * g.x.per_unit as i64;
    let sy = l * g.y.per_unit as i64;
    let (nx, ny) = (g.x.len as i64, g.y.len as i64);
    let zero = T::zero();
    // every nonzero source must land inside
    for ix in 0..nx {
        for iy in 0..ny {
            let (tx, ty) = (ix + sx, iy + sy);
            if (tx < 0 || tx >= nx || ty < 0 || ty >= ny) && g.at(ix as usize, iy as usize).norm() > zero {
                return Err(Error::TranslateOutOfGrid { k, l });
            }
        }
    }
    let mut out = Grid2n::zeros(g.x, g.y);
    let two_nx = 2.0 * g.x.per_unit as f64;
    let two_ny = 2.0 * g.y.per_unit as f64;
    for ix in 0..nx {
        let src_x = ix - sx;
        if src_x < 0 || src_x >= nx {
            continue;
        }
        let xl = (g.x.pos2(ix as usize) * l) as f64 / two_nx;
        for iy in 0..ny {
            let src_y = iy - sy;
            if src_y < 0 || src_y >= ny {
                continue;
            }
            let yk = (g.y.pos2(iy as usize) * k) as f64 / two_ny;
            let v = g.at(src_x as usize, src_y as usize);
            out.values[(ix * ny + iy) as usize] = v * cis_pi::<T>(xl - yk);
        }
    }
    Ok(out)
}

/// Twisted translate of a separable generator, factor by factor.
pub fn twisted_translate_separable<T: Real>(factors: &[Grid2n<T>], p: &LatticePoint) -> Result<Vec<Grid2n<T>>> {
    if p.dim() != factors.len() {
        return Err(Error::DimensionMismatch { expected: factors.len(), got: p.dim() });
    }
    factors.iter().enumerate().map(|(d, g)| twisted_translate(g, &p.factor(d))).collect()
}
