use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A scalar argument is outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Node-set or stencil construction failed.
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// A linear system factorization hit an exactly zero (or non-finite) pivot.
    #[error("singular linear system: {context}")]
    SingularSystem { context: String },

    /// A solved system failed the a-posteriori residual bound.
    #[error(
        "linear-solve residual check failed ({context}): |Ax-b|_inf = {residual:.3e} \
         exceeds bound {bound:.3e}"
    )]
    ResidualCheck {
        context: String,
        residual: f64,
        bound: f64,
    },

    /// exp(s_j * t) is not representable; the contour/time combination is unusable.
    #[error("contour term overflow at node j = {node}: Re(s_j) * t = {exponent:.3e}")]
    ContourOverflow { node: usize, exponent: f64 },

    /// A transform was evaluated at (or numerically on top of) one of its poles.
    #[error("transform evaluated at a pole: s = {s}")]
    TransformPole { s: Complex64 },

    /// Picard iteration exceeded the iteration cap without meeting the tolerance.
    #[error(
        "Picard iteration did not converge: {iterations} iterations, \
         last change {change:.3e}, tolerance {tol:.3e}"
    )]
    PicardNonConvergence {
        iterations: u32,
        change: f64,
        tol: f64,
    },

    /// Picard iterate exceeded the divergence guard.
    #[error("Picard iterate diverged: |u|_inf = {norm:.3e} exceeds guard {guard:.3e}")]
    PicardDiverged { norm: f64, guard: f64 },

    /// The sampling grid of a trace is incompatible with the requested period.
    #[error("period/grid misalignment: {0}")]
    PeriodMisaligned(String),

    /// A configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// A parsed configuration violates one or more constraints.
    #[error("invalid configuration:\n{}", violations.join("\n"))]
    ConfigInvalid { violations: Vec<String> },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::InvalidGeometry(msg.into())
    }
}
