use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite sample at node {index} (position {position:?})")]
    NonFiniteSample { index: usize, position: [f64; 3] },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("sparse entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    EntryOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("matrix is singular to tolerance (pivot column {column})")]
    Singular { column: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidSolverConfig(&'static str),

    #[error("BiCGSTAB breakdown after {iterations} iterations (relative residual {residual:e})")]
    Breakdown { iterations: usize, residual: f64 },

    #[error("BiCGSTAB did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("atom center at distance {distance:e} from node {index}; move it off the grid nodes")]
    DegeneratePlacement { index: usize, distance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("unsupported integrator order {0} (expected 1 or an even number)")]
    UnsupportedOrder(u32),

    #[error("not enough samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("samples are not uniformly spaced in time")]
    NonUniformSampling,

    #[error("signal has {0} zero crossings; at least 3 are required")]
    TooFewCrossings(usize),

    #[error("flux surface does not fit strictly inside the grid")]
    SurfaceOutsideGrid,

    #[error("unknown time-series channel `{0}`")]
    UnknownChannel(alloc::string::String),
}

pub type Result<T> = core::result::Result<T, Error>;
