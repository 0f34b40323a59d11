use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dimension {got} does not match generator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid step {step} does not divide 1; twisted translates need integer shifts on the grid")]
    Commensurability { step: f64 },

    #[error("grids are not aligned: {0}")]
    GridMismatch(String),

    #[error("twisted translate by ({k}, {l}) moves nonzero samples off the grid")]
    TranslateOutOfGrid { k: i64, l: i64 },

    #[error("sampled window too small: {0}")]
    WindowTooSmall(String),

    #[error("generator is nonzero on the grid boundary; enlarge the sampling window")]
    BoundaryMass,

    #[error("kernel has insufficient decay: edge mass fraction {edge_fraction:.3e} exceeds {tolerance:.1e}")]
    InsufficientDecay { edge_fraction: f64, tolerance: f64 },

    #[error("self-bracket has imaginary part {imag:.3e} above clamp tolerance {tolerance:.1e}")]
    NonRealSelfBracket { imag: f64, tolerance: f64 },

    #[error("lattice frequency ({k}, {l}) is at or above the Nyquist limit of the bracket grid")]
    AboveNyquist { k: i64, l: i64 },

    #[error("no dual exists: 1/B is not integrable ({0})")]
    NoDualExists(String),

    #[error("generator is not a Riesz sequence: bracket minimum {min:.3e}")]
    NotRiesz { min: f64 },

    #[error("Gram matrix is not positive semidefinite: minimum eigenvalue {min_eig:.3e}")]
    CorruptedGram { min_eig: f64 },

    #[error("operation is defined for planar data (n = 1), got n = {0}")]
    UnsupportedDimension(usize),

    #[error("invalid generator specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
