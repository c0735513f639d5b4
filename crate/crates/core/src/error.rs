use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("degenerate curve: total length is zero")]
    DegenerateCurve,

    #[error("endpoint mismatch: junction gap {gap:e} exceeds tolerance")]
    EndpointMismatch { gap: f64 },

    #[error("flow diverged at t = {time} (state norm {norm:e})")]
    Divergence { time: f64, norm: f64 },

    #[error("point is not in the basin of the equilibrium: {0}")]
    NotInBasin(String),

    #[error("degenerate saddle: {0}")]
    DegenerateSaddle(String),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver failure in {what}: best residual {residual:e}")]
    SolverFailure { what: String, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("no point of the manifold zero set was found inside its bounding box")]
    EmptyManifold,

    #[error("no manifold crossing within |t| <= {t_max}")]
    NotReachable { t_max: f64 },

    #[error("tracing region touches a point where the drift vanishes; use a smaller eps ({0})")]
    ShrinkEps(String),

    #[error("action evaluation failed at iteration {iteration}: {source}")]
    Evaluation {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
