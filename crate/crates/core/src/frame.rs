use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::bracket::{bracket, BracketTable, SeparableBracket};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::zak::{ZakField, ZakLattice};

/// Default support threshold, relative to the bracket maximum.
pub const DEFAULT_TAU: f64 = 1e-8;
/// Default tolerance for the orthonormal verdict.
pub const ORTHONORMAL_TOL: f64 = 1e-3;
/// Relative movement of the bounds tolerated by the sensitivity and refinement checks.
pub const STABILITY_TOL: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    FrameSequence,
    RieszSequence,
    OrthonormalSystem,
    NotFrame,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsAt {
    pub tau: f64,
    pub lower: f64,
    pub upper: f64,
    pub support_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub lower: f64,
    pub upper: f64,
    pub support_fraction: f64,
    pub verdict: Verdict,
    /// Relative support threshold; nodes above `tau * max` form the support.
    pub tau: f64,
    /// Bounds recomputed at `tau / 10` and `10 tau`.
    pub sensitivity: [BoundsAt; 2],
    pub stable: bool,
    /// Bounds on the half-resolution subgrid, as a proxy for refinement.
    pub coarse: BoundsAt,
    pub confident: bool,
}

fn self_values<T: Real>(b: &BracketTable<T>) -> Result<Vec<f64>> {
    let scale = b.max_abs();
    if scale == 0.0 {
        return Err(Error::InvalidInput("bracket table is identically zero (zero generator)".into()));
    }
    let imag = b.values.iter().fold(0.0f64, |m, z| m.max(z.im.as_f64().abs()));
    if imag > 1e-10 * scale.max(1.0) {
        return Err(Error::NonRealSelfBracket { imag, tolerance: 1e-10 });
    }
    Ok(b.values.iter().map(|z| z.re.as_f64()).collect())
}

fn bounds_on(values: &[f64], tau: f64, support_only: bool) -> BoundsAt {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cut = tau * max;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut count = 0usize;
    for &v in values {
        if v > cut {
            count += 1;
        }
        if v > cut || !support_only {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
    }
    BoundsAt { tau, lower: lo.max(0.0), upper: hi, support_fraction: count as f64 / values.len() as f64 }
}

fn coarse_values<T: Real>(b: &BracketTable<T>, v: &[f64]) -> Vec<f64> {
    let nj = b.n_xi_prime;
    let si = if b.xi.len >= 2 { 2 } else { 1 };
    let sj = if nj >= 2 { 2 } else { 1 };
    let mut out = Vec::new();
    for i in (0..b.xi.len).step_by(si) {
        for j in (0..nj).step_by(sj) {
            out.push(v[i * nj + j]);
        }
    }
    out
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn agree(a: &BoundsAt, b: &BoundsAt) -> bool {
    close(a.lower, b.lower, STABILITY_TOL)
        && close(a.upper, b.upper, STABILITY_TOL)
        && (a.support_fraction - b.support_fraction).abs() <= STABILITY_TOL
}

/// Frame bounds on the support of the bracket, with the most specific verdict
/// (orthonormal, then Riesz, then frame) that the data supports.
pub fn frame_bounds<T: Real>(b: &BracketTable<T>, tau: f64) -> Result<FrameReport> {
    let v = self_values(b)?;
    let main = bounds_on(&v, tau, true);
    let sens = [bounds_on(&v, tau / 10.0, true), bounds_on(&v, tau * 10.0, true)];
    let stable = sens.iter().all(|s| agree(&main, s));
    let coarse = bounds_on(&coarse_values(b, &v), tau, true);
    let confident = agree(&main, &coarse);
    let verdict = if !stable {
        Verdict::Inconclusive
    } else if main.lower <= 0.0 {
        Verdict::NotFrame
    } else if main.support_fraction == 1.0 {
        if (main.lower - 1.0).abs() <= ORTHONORMAL_TOL && (main.upper - 1.0).abs() <= ORTHONORMAL_TOL {
            Verdict::OrthonormalSystem
        } else {
            Verdict::RieszSequence
        }
    } else {
        Verdict::FrameSequence
    };
    Ok(FrameReport {
        lower: main.lower,
        upper: main.upper,
        support_fraction: main.support_fraction,
        verdict,
        tau,
        sensitivity: sens,
        stable,
        coarse,
        confident,
    })
}

/// Riesz bounds: extremes over every node. `RieszSequence` iff the global
/// minimum is positive (above `tau * max`) at all three thresholds.
pub fn riesz_bounds<T: Real>(b: &BracketTable<T>, tau: f64) -> Result<FrameReport> {
    let v = self_values(b)?;
    let main = bounds_on(&v, tau, false);
    let positive = |t: f64| main.lower > t * main.upper;
    let sens = [
        BoundsAt { tau: tau / 10.0, ..main },
        BoundsAt { tau: tau * 10.0, ..main },
    ];
    let stable = positive(tau / 10.0) == positive(tau * 10.0);
    let coarse = bounds_on(&coarse_values(b, &v), tau, false);
    let confident = agree(&main, &coarse);
    let verdict = if !stable {
        Verdict::Inconclusive
    } else if positive(tau) {
        Verdict::RieszSequence
    } else {
        Verdict::NotFrame
    };
    Ok(FrameReport {
        lower: main.lower,
        upper: main.upper,
        support_fraction: main.support_fraction,
        verdict,
        tau,
        sensitivity: sens,
        stable,
        coarse,
        confident,
    })
}

/// Frame bounds of a separable generator. The bracket is a product of the
/// factor brackets, so extremes and support fractions multiply.
pub fn separable_frame_bounds<T: Real>(b: &SeparableBracket<T>, tau: f64) -> Result<FrameReport> {
    let parts: Vec<FrameReport> = b.factors.iter().map(|f| frame_bounds(f, tau)).collect::<Result<_>>()?;
    let prod = |f: &dyn Fn(&FrameReport) -> BoundsAt| {
        parts.iter().map(f).fold(BoundsAt { tau, lower: 1.0, upper: 1.0, support_fraction: 1.0 }, |a, x| BoundsAt {
            tau: x.tau,
            lower: a.lower * x.lower,
            upper: a.upper * x.upper,
            support_fraction: a.support_fraction * x.support_fraction,
        })
    };
    let main = prod(&|r| BoundsAt { tau: r.tau, lower: r.lower, upper: r.upper, support_fraction: r.support_fraction });
    let sensitivity = [prod(&|r| r.sensitivity[0]), prod(&|r| r.sensitivity[1])];
    let coarse = prod(&|r| r.coarse);
    let stable = parts.iter().all(|r| r.stable);
    let all = |v: Verdict| parts.iter().all(|r| r.verdict == v);
    let verdict = if !stable {
        Verdict::Inconclusive
    } else if parts.iter().any(|r| r.verdict == Verdict::NotFrame) {
        Verdict::NotFrame
    } else if all(Verdict::OrthonormalSystem)
        && (main.lower - 1.0).abs() <= ORTHONORMAL_TOL
        && (main.upper - 1.0).abs() <= ORTHONORMAL_TOL
    {
        Verdict::OrthonormalSystem
    } else if main.support_fraction == 1.0 {
        Verdict::RieszSequence
    } else {
        Verdict::FrameSequence
    };
    Ok(FrameReport {
        lower: main.lower,
        upper: main.upper,
        support_fraction: main.support_fraction,
        verdict,
        tau,
        sensitivity,
        stable,
        coarse,
        confident: parts.iter().all(|r| r.confident),
    })
}

/// Bracket identically one, node by node.
pub fn orthonormality_check<T: Real>(b: &BracketTable<T>, tol: f64) -> bool {
    b.values
        .iter()
        .all(|z| (z.re.as_f64() - 1.0).abs() <= tol && z.im.as_f64().abs() <= tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub exists: bool,
    /// `(t, int int 1 / max(B, t max))` at `t = tau, tau/4, tau/16`.
    pub integrals: Vec<(f64, f64)>,
    /// Successive growth ratios of the integrals; near 4 when `B` vanishes on a set of positive measure.
    pub ratios: Vec<f64>,
}

/// Growth ratio above which the integrability gate fails.
pub const DUAL_GROWTH_LIMIT: f64 = 1.5;

/// Integrability gate for `1 / B`.
pub fn dual_gate<T: Real>(b: &BracketTable<T>, tau: f64) -> Result<DualReport> {
    let v = self_values(b)?;
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cell = b.cell();
    let integrals: Vec<(f64, f64)> = [tau, tau / 4.0, tau / 16.0]
        .iter()
        .map(|&t| (t, v.iter().map(|x| 1.0 / x.max(t * max)).sum::<f64>() * cell))
        .collect();
    let ratios: Vec<f64> = integrals.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let exists = ratios.iter().all(|r| *r <= DUAL_GROWTH_LIMIT);
    Ok(DualReport { exists, integrals, ratios })
}

/// Zak field of the canonical biorthogonal generator, `Z / B`.
pub fn dualize<T: Real>(z: &ZakField<T>, b: &BracketTable<T>, tau: f64) -> Result<(ZakField<T>, DualReport)> {
    check_torus(z, b)?;
    let report = dual_gate(b, tau)?;
    if !report.exists {
        let r: Vec<String> = report.ratios.iter().map(|r| format!("{r:.3}")).collect();
        return Err(Error::NoDualExists(format!("integral growth ratios [{}] under threshold refinement", r.join(", "))));
    }
    let nj = b.n_xi_prime;
    let out = z.map(|i, j, v| {
        let w = b.values[i * nj + j].re;
        if w > T::zero() {
            v / w
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    Ok((out, report))
}

/// `Z / sqrt(B)`: generator of an orthonormal system spanning the same space.
pub fn orthonormalize<T: Real>(z: &ZakField<T>, b: &BracketTable<T>, tau: f64) -> Result<ZakField<T>> {
    check_torus(z, b)?;
    let r = riesz_bounds(b, tau)?;
    if r.verdict != Verdict::RieszSequence {
        return Err(Error::NotRiesz { min: r.lower });
    }
    let nj = b.n_xi_prime;
    Ok(z.map(|i, j, v| v / b.values[i * nj + j].re.sqrt()))
}

fn check_torus<T: Real>(z: &ZakField<T>, b: &BracketTable<T>) -> Result<()> {
    if z.xi != b.xi || z.n_xi_prime != b.n_xi_prime || z.lattice != b.lattice {
        return Err(Error::GridMismatch("Zak field and bracket live on different torus grids".into()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Membership<T> {
    /// Multiplier `r = [f, phi] / [phi, phi]` on the support, zero elsewhere.
    pub multiplier: BracketTable<T>,
    /// `||Z_f - r Z_phi|| / ||Z_f||`.
    pub residual: f64,
    /// `||r||_{L^2(B)}`; equals `||f||` for members.
    pub weighted_norm: f64,
    pub f_norm: f64,
    pub member: bool,
}

/// Decide whether `f` lies in the closed span of the twisted translates of `phi`.
pub fn membership_multiplier<T: Real>(
    zf: &ZakField<T>,
    zphi: &ZakField<T>,
    bphi: &BracketTable<T>,
    tol: f64,
) -> Result<Membership<T>> {
    check_torus(zphi, bphi)?;
    let v = self_values(bphi)?;
    let cut = DEFAULT_TAU * v.iter().cloned().fold(0.0, f64::max);
    let cross = bracket(zf, zphi)?;
    let nj = bphi.n_xi_prime;
    let r = cross.map(|i, j, c| {
        let w = v[i * nj + j];
        if w > cut {
            c / T::of(w)
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    let ne = zf.eta.len;
    let mut res = 0.0;
    for (ij, rv) in r.values.iter().enumerate() {
        let (i, j) = (ij / nj, ij % nj);
        for k in 0..ne {
            res += (zf.at(i, j, k) - rv * zphi.at(i, j, k)).norm_sqr().as_f64();
        }
    }
    let f_norm = zf.norm().as_f64();
    let residual = if f_norm > 0.0 { (res * zf.cell().as_f64()).sqrt() / f_norm } else { 0.0 };
    let weighted: f64 = r.values.iter().zip(&v).map(|(z, w)| z.norm_sqr().as_f64() * w).sum::<f64>() * bphi.cell();
    let weighted_norm = weighted.sqrt();
    Ok(Membership {
        multiplier: r,
        residual,
        weighted_norm,
        f_norm,
        member: residual <= tol && weighted_norm.is_finite(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2Report {
    /// `sup avg(w) avg(1/w)` over the scanned rectangles; `None` when `w` has nonpositive nodes.
    pub constant: Option<f64>,
    pub depth: usize,
    /// Constant over rectangles down to each level, `0..=depth`.
    pub trace: Vec<f64>,
    pub flat: bool,
    pub schauder: bool,
    /// Number of nonpositive nodes.
    pub nonpositive_nodes: usize,
    /// `(eps, C)` for `w` floored at `eps * max`; grows without bound when `w` vanishes on a band.
    pub regularized: Vec<(f64, f64)>,
}

/// Relative change allowed between the last two levels of a flat trace.
pub const A2_FLAT_TOL: f64 = 0.01;

/// Muckenhoupt `A_2` constant of `w = B` over dyadic rectangles and their half-step translates.
pub fn a2_constant<T: Real>(b: &BracketTable<T>, depth: usize) -> Result<A2Report> {
    if b.lattice != ZakLattice::Full {
        return Err(Error::InvalidInput("A2 scan is defined on the full torus".into()));
    }
    let w = self_values(b)?;
    let (nx, ny) = (b.xi.len, b.n_xi_prime);
    let nonpositive = w.iter().filter(|v| **v <= 0.0).count();
    if nonpositive == 0 {
        let trace = a2_trace(&w, nx, ny, depth);
        let c = *trace.last().unwrap();
        let flat = depth == 0 || close(trace[depth], trace[depth - 1], A2_FLAT_TOL);
        return Ok(A2Report {
            constant: Some(c),
            depth,
            trace,
            flat,
            schauder: flat && c.is_finite(),
            nonpositive_nodes: 0,
            regularized: vec![],
        });
    }
    let max = w.iter().cloned().fold(0.0, f64::max);
    let regularized: Vec<(f64, f64)> = [1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&eps| {
            let we: Vec<f64> = w.iter().map(|v| v.max(eps * max)).collect();
            (eps, *a2_trace(&we, nx, ny, depth).last().unwrap())
        })
        .collect();
    Ok(A2Report {
        constant: None,
        depth,
        trace: vec![],
        flat: false,
        schauder: false,
        nonpositive_nodes: nonpositive,
        regularized,
    })
}

/// Periodic 2-d prefix sums for rectangle averages.
struct Prefix {
    nx: usize,
    ny: usize,
    s: Vec<f64>,
}

impl Prefix {
    fn new(v: &[f64], nx: usize, ny: usize) -> Self {
        let mut s = vec![0.0; (nx + 1) * (ny + 1)];
        for i in 0..nx {
            for j in 0..ny {
                s[(i + 1) * (ny + 1) + j + 1] =
                    v[i * ny + j] + s[i * (ny + 1) + j + 1] + s[(i + 1) * (ny + 1) + j] - s[i * (ny + 1) + j];
            }
        }
        Prefix { nx, ny, s }
    }

    fn block(&self, i0: usize, i1: usize, j0: usize, j1: usize) -> f64 {
        let w = self.ny + 1;
        self.s[i1 * w + j1] - self.s[i0 * w + j1] - self.s[i1 * w + j0] + self.s[i0 * w + j0]
    }

    /// Sum over `[i, i + a) x [j, j + b)` with wrap-around.
    fn sum(&self, i: usize, a: usize, j: usize, b: usize) -> f64 {
        let split = |s: usize, len: usize, n: usize| -> Vec<(usize, usize)> {
            if s + len <= n {
                vec![(s, s + len)]
            } else {
                vec![(s, n), (0, s + len - n)]
            }
        };
        let mut t = 0.0;
        for (i0, i1) in split(i, a, self.nx) {
            for (j0, j1) in split(j, b, self.ny) {
                t += self.block(i0, i1, j0, j1);
            }
        }
        t
    }
}

fn a2_trace(w: &[f64], nx: usize, ny: usize, depth: usize) -> Vec<f64> {
    let inv: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
    let pw = Prefix::new(w, nx, ny);
    let pi = Prefix::new(&inv, nx, ny);
    // (side, stride) for each level; sides stop shrinking at one node
    let level = |n: usize, a: usize| -> (usize, usize) {
        let side = (n >> a).max(1);
        (side, (side / 2).max(1))
    };
    let mut per_level = vec![1.0f64; depth + 1];
    for a in 0..=depth {
        let (sx, tx) = level(nx, a);
        for bl in 0..=depth {
            let (sy, ty) = level(ny, bl);
            let area = (sx * sy) as f64;
            let mut best = 1.0f64;
            for i in (0..nx).step_by(tx) {
                for j in (0..ny).step_by(ty) {
                    let c = (pw.sum(i, sx, j, sy) / area) * (pi.sum(i, sx, j, sy) / area);
                    best = best.max(c);
                }
            }
            let l = a.max(bl);
            per_level[l] = per_level[l].max(best);
        }
    }
    let mut trace = Vec::with_capacity(depth + 1);
    let mut run = 1.0f64;
    for c in per_level {
        run = run.max(c);
        trace.push(run);
    }
    trace
}
