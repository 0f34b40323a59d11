//! Weyl-Zak transform of Weyl-transform kernels, the bracket map built on it,
//! and the frame/Riesz/orthonormal/Schauder analysis of systems of twisted
//! translates on `R^2n`, with a brute-force Gram-matrix oracle.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below are what the CLI uses.

pub mod bracket;
pub mod error;
pub mod frame;
pub mod generator;
pub mod gram;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod scalar;
pub mod zak;

pub use bracket::{
    bracket, bracket_fibers, bracket_fourier_coeff, bracket_translate_left, bracket_translate_right,
    orthogonality_test, BracketSummary, BracketTable, SeparableBracket,
};
pub use error::{Error, Result};
pub use frame::{
    a2_constant, dual_gate, dualize, frame_bounds, membership_multiplier, orthonormality_check, orthonormalize,
    riesz_bounds, separable_frame_bounds, A2Report, BoundsAt, DualReport, FrameReport, Membership, Verdict, A2_FLAT_TOL, DEFAULT_TAU,
    DUAL_GROWTH_LIMIT, ORTHONORMAL_TOL, STABILITY_TOL,
};
pub use generator::{materialize, ClosedForm, Generator, GeneratorKind, GeneratorSpec};
pub use gram::{
    cross_validate, finite_section_trace, gram_bounds, gram_matrix, gram_matrix_kernel, toeplitz_entry, CrossValidation, GramMatrix,
    SectionBounds, INTERVAL_SLACK,
};
pub use grid::{Axis, Grid2n};
pub use kernel::{
    hs_norm, kernel_compose, kernel_to_function, kernel_twisted_translate, weyl_kernel, weyl_kernel_factors, CellRule,
    KernelWindow, SampledKernel,
};
pub use lattice::{cocycle, lattice_box, twisted_translate, LatticePoint};
pub use scalar::Real;
pub use zak::{
    zak_forward, zak_inverse, zak_pi_h_forward, zak_pi_h_translate, zak_translate, SumPath, TailReport, ZakField,
    ZakLattice, ZakOptions, TAIL_TOLERANCE, zero_xi_prime_band,
};

pub type Grid64 = Grid2n<f64>;
pub type Grid32 = Grid2n<f32>;
pub type Kernel64 = SampledKernel<f64>;
pub type Kernel32 = SampledKernel<f32>;
pub type Zak64 = ZakField<f64>;
pub type Zak32 = ZakField<f32>;
pub type Bracket64 = BracketTable<f64>;
pub type Bracket32 = BracketTable<f32>;
pub type Generator64 = Generator<f64>;
