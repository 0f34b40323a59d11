use std::path::PathBuf;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2n};
use crate::kernel::SampledKernel;
use crate::scalar::{cis_pi, sinc, Real};

/// Generators with a known Weyl kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedForm {
    /// `phi = chi_[0,1)^2`, whose kernel is `e^{pi i s/2} sinc(s/2) chi_[0,1)(eta - xi)`, `s = xi + eta`.
    IndicatorBox,
    /// Generator whose kernel is `e^{xi eta}` on the unit square.
    ExpKernel,
}

impl ClosedForm {
    pub fn kernel<T: Real>(&self, xi: T, eta: T) -> Complex<T> {
        let zero = Complex::new(T::zero(), T::zero());
        match self {
            ClosedForm::IndicatorBox => {
                let v = eta - xi;
                if v < T::zero() || v >= T::one() {
                    return zero;
                }
                let half = T::of(0.5);
                let s = xi + eta;
                cis_pi::<T>((s * half).as_f64()) * sinc(s * half)
            }
            ClosedForm::ExpKernel => {
                if unit(xi) && unit(eta) {
                    Complex::new((xi * eta).exp(), T::zero())
                } else {
                    zero
                }
            }
        }
    }

    /// Half-open `eta` interval outside which the kernel row at `xi` vanishes.
    pub fn eta_support(&self, xi: f64) -> Option<(f64, f64)> {
        match self {
            ClosedForm::IndicatorBox => Some((xi, xi + 1.0)),
            ClosedForm::ExpKernel => unit(xi).then_some((0.0, 1.0)),
        }
    }

    /// `(xi, eta)` node offsets that keep the kernel's jumps on cell boundaries.
    pub fn preferred_offsets(&self) -> (bool, bool) {
        match self {
            ClosedForm::IndicatorBox => (true, false),
            ClosedForm::ExpKernel => (true, true),
        }
    }

    /// Function-domain closed form, when one exists.
    pub fn function<T: Real>(&self, x: T, y: T) -> Option<Complex<T>> {
        match self {
            ClosedForm::IndicatorBox => Some(if unit(x) && unit(y) {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }),
            ClosedForm::ExpKernel => None,
        }
    }
}

#[inline]
fn unit<T: Real>(t: T) -> bool {
    t >= T::zero() && t < T::one()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisDoc {
    pub lo: f64,
    pub step: f64,
    pub len: usize,
}

impl AxisDoc {
    pub fn to_axis(&self) -> Result<Axis> {
        Axis::from_step(self.lo, self.step, self.len)
    }

    pub fn of_axis(a: &Axis) -> Self {
        AxisDoc { lo: a.node_f64(0), step: 1.0 / a.per_unit as f64, len: a.len }
    }
}

/// Sampled data attached to a generator spec: inline arrays or a binary file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<AxisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<AxisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<AxisDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<AxisDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    IndicatorBox,
    ExpKernel,
    Separable,
    SampledFunction,
    SampledKernel,
}

/// Serialisable description of a generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDoc>,
    /// Compose the generator's kernel with itself this many times in total
    /// (`2` gives the square of the operator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_compose: Option<usize>,
}

fn one() -> usize {
    1
}

impl GeneratorSpec {
    pub fn simple(kind: GeneratorKind) -> Self {
        GeneratorSpec { kind, n: 1, factors: vec![], grid: None, self_compose: None }
    }

    pub fn indicator() -> Self {
        Self::simple(GeneratorKind::IndicatorBox)
    }

    pub fn exp_kernel() -> Self {
        Self::simple(GeneratorKind::ExpKernel)
    }

    /// The square of the exponential-kernel operator.
    pub fn exp_kernel_squared() -> Self {
        GeneratorSpec { self_compose: Some(2), ..Self::exp_kernel() }
    }

    pub fn separable(factors: Vec<GeneratorSpec>) -> Self {
        GeneratorSpec { kind: GeneratorKind::Separable, n: factors.len(), factors, grid: None, self_compose: None }
    }
}

/// A generator ready for the transforms.
#[derive(Clone, Debug)]
pub enum Generator<T> {
    Closed(ClosedForm),
    /// Kernel of `base` composed with itself `power` times.
    Composed { base: Box<Generator<T>>, power: usize },
    Separable(Vec<Generator<T>>),
    Function(Grid2n<T>),
    Kernel(SampledKernel<T>),
}

impl<T: Real> Generator<T> {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Separable(f) => f.iter().map(|g| g.dim()).sum(),
            Generator::Composed { base, .. } => base.dim(),
            _ => 1,
        }
    }

    /// Node offsets that suit this generator's kernel.
    pub fn preferred_offsets(&self) -> (bool, bool) {
        match self {
            Generator::Closed(c) => c.preferred_offsets(),
            Generator::Composed { base, .. } => base.preferred_offsets(),
            Generator::Function(g) => {
                // eta - xi must land on the y nodes
                (g.x.half_offset, g.x.half_offset ^ g.y.half_offset)
            }
            Generator::Kernel(k) => (k.xi.half_offset, k.eta.half_offset),
            Generator::Separable(_) => (true, true),
        }
    }
}

/// Validate a spec and load any sampled data it references.
pub fn materialize<T: Real>(spec: &GeneratorSpec) -> Result<Generator<T>> {
    let g = match spec.kind {
        GeneratorKind::IndicatorBox | GeneratorKind::ExpKernel => {
            if spec.n != 1 {
                return Err(Error::InvalidSpec(format!(
                    "{:?} is planar; use a separable spec for n = {}",
                    spec.kind, spec.n
                )));
            }
            Generator::Closed(if spec.kind == GeneratorKind::IndicatorBox {
                ClosedForm::IndicatorBox
            } else {
                ClosedForm::ExpKernel
            })
        }
        GeneratorKind::Separable => {
            if spec.factors.is_empty() {
                return Err(Error::InvalidSpec("separable spec without factors".into()));
            }
            let factors = spec.factors.iter().map(materialize::<T>).collect::<Result<Vec<_>>>()?;
            let total: usize = factors.iter().map(|f| f.dim()).sum();
            if factors.iter().any(|f| matches!(f, Generator::Separable(_))) {
                return Err(Error::InvalidSpec("nested separable factors are not supported".into()));
            }
            if total != spec.n {
                return Err(Error::DimensionMismatch { expected: spec.n, got: total });
            }
            Generator::Separable(factors)
        }
        GeneratorKind::SampledFunction => {
            let doc = spec.grid.as_ref().ok_or_else(|| Error::InvalidSpec("sampled_function needs a grid".into()))?;
            if let Some(p) = &doc.path {
                Generator::Function(crate::io::read_function_bin(p)?)
            } else {
                let x = doc.x.as_ref().ok_or_else(|| Error::InvalidSpec("grid.x missing".into()))?.to_axis()?;
                let y = doc.y.as_ref().ok_or_else(|| Error::InvalidSpec("grid.y missing".into()))?.to_axis()?;
                let values = complex_values::<T>(doc, x.len * y.len)?;
                Generator::Function(Grid2n { x, y, values })
            }
        }
        GeneratorKind::SampledKernel => {
            let doc = spec.grid.as_ref().ok_or_else(|| Error::InvalidSpec("sampled_kernel needs a grid".into()))?;
            if let Some(p) = &doc.path {
                Generator::Kernel(crate::io::read_kernel_bin(p)?)
            } else {
                let xi = doc.xi.as_ref().ok_or_else(|| Error::InvalidSpec("grid.xi missing".into()))?.to_axis()?;
                let eta = doc.eta.as_ref().ok_or_else(|| Error::InvalidSpec("grid.eta missing".into()))?.to_axis()?;
                let values = complex_values::<T>(doc, xi.len * eta.len)?;
                Generator::Kernel(SampledKernel::from_dense(xi, eta, values, crate::kernel::KernelPath::Input))
            }
        }
    };
    match spec.self_compose {
        None | Some(1) => Ok(g),
        Some(0) => Err(Error::InvalidSpec("self_compose must be at least 1".into())),
        Some(p) => {
            if g.dim() != 1 {
                return Err(Error::InvalidSpec("self_compose is only defined for n = 1".into()));
            }
            Ok(Generator::Composed { base: Box::new(g), power: p })
        }
    }
}

fn complex_values<T: Real>(doc: &GridDoc, expected: usize) -> Result<Vec<Complex<T>>> {
    if doc.re.len() != expected || !(doc.im.is_empty() || doc.im.len() == expected) {
        return Err(Error::InvalidSpec(format!(
            "grid data has {} / {} values, axes need {expected}",
            doc.re.len(),
            doc.im.len()
        )));
    }
    Ok((0..expected)
        .map(|i| Complex::new(T::of(doc.re[i]), T::of(doc.im.get(i).copied().unwrap_or(0.0))))
        .collect())
}
