use crate::expr::ExprError;

/// Crate-wide error type for geometry, numerics, and scenario handling.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("rank deficiency at vector {index}: pivot norm {pivot:.3e} below threshold")]
    RankDeficient { index: usize, pivot: f64 },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {residual:.3e}")]
    NotSymmetric { residual: f64 },

    #[error("eigensolver did not converge in {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("basis is not orthonormal: Gram residual {residual:.3e}")]
    NotOrthonormal { residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point violates the chart domain guard")]
    GuardViolation,

    #[error("field value is not normal to the submanifold: tangential norm {residual:.3e}")]
    NotNormal { residual: f64 },

    #[error("distribution is not invariant under the tangential complex operator: residual {residual:.3e}")]
    NotInvariant { residual: f64 },

    #[error("degenerate slant angle theta = {theta:.6} rad (sin or cos below {gate:.1e})")]
    DegenerateAngle { theta: f64, gate: f64 },

    #[error("warping function must be positive, got {value:.6e}")]
    NonPositiveWarp { value: f64 },

    #[error("stencil evaluation failed near offset {offset:.3e} along direction {dir}: {message}")]
    StencilFailure {
        dir: usize,
        offset: f64,
        message: String,
    },

    #[error("scenario schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid tolerance profile: {message}")]
    InvalidTolerances { message: String },

    #[error("{message}")]
    Usage { message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Point-local numerical degeneracy: the runner skips the sample and
    /// counts it instead of aborting the whole run.
    pub fn is_degeneracy(&self) -> bool {
        match self {
            Error::RankDeficient { .. }
            | Error::NoConvergence { .. }
            | Error::GuardViolation
            | Error::NotInvariant { .. }
            | Error::DegenerateAngle { .. }
            | Error::NonPositiveWarp { .. }
            | Error::NotNormal { .. }
            | Error::StencilFailure { .. } => true,
            Error::Expr(e) => e.is_domain(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
