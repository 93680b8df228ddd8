use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("point ({x}, {xn}) lies outside the sampled domain of the edge curve (|t| <= {half_width})")]
    OutOfDomain { x: f64, xn: f64, half_width: f64 },

    #[error("point lies within {gap:.3e} of the cut locus of the edge (non-unique foot point)")]
    CutLocus { gap: f64 },

    #[error("grid too small: {nx}x{ny} nodes (need at least 3 per axis)")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field contains a non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("extrapolation ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("quadrature under-resolved: {0}")]
    Quadrature(String),

    #[error("scale {scale:.3e} is not resolved by the grid (needs >= {min:.3e})")]
    Unresolved { scale: f64, min: f64 },

    #[error("coefficient c[{mu:?},{m}; {sigma:?},{l}] violates the grading condition")]
    StructureViolation {
        mu: [u32; 2],
        m: u32,
        sigma: [u32; 2],
        l: u32,
    },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("radius {r:.3e} is below the smallest constructed scale (smallest valid radius {min:.3e})")]
    BelowSmallestScale { r: f64, min: f64 },

    #[error("point at distance {d:.3e} from the edge lies outside the tube |d| < 4λ of scale λ = {lambda:.3e}")]
    OutsideTube { d: f64, lambda: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
