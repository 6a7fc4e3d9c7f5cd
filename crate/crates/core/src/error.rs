use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or configuration parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: String, reason: String },

    /// The unscaled characteristic function overflowed.
    #[error("characteristic function not finite at mu = {mu:e}; use the scaled variant")]
    NumericRange { mu: f64 },

    #[error("root search exhausted mu in [{start:e}, {end:e}] after {found} of {wanted} roots")]
    SearchRange {
        start: f64,
        end: f64,
        found: usize,
        wanted: usize,
    },

    #[error("degenerate spectrum: near-double root around mu = {mu:e}")]
    DegenerateSpectrum { mu: f64 },

    #[error("mu = {mu:e} is not an eigenvalue (matching residual ratio {ratio:e})")]
    NotAnEigenvalue { mu: f64, ratio: f64 },

    #[error("degenerate mode at mu = {mu:e}: null space of dimension >= 2")]
    DegenerateMode { mu: f64 },

    #[error("abscissa {x} outside [0, {length}]")]
    Domain { x: f64, length: f64 },

    #[error("third derivative requested at the attachment point {x} without a side")]
    Ambiguous { x: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} > tolerance {tolerance:e}")]
    Accuracy { achieved: f64, tolerance: f64 },

    #[error("invalid sensor configuration: {0}")]
    Sensor(String),

    #[error("invalid actuator shape: {0}")]
    Shape(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("propagator is not finite (step {dt:e})")]
    Conditioning { dt: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("resolvent matrix M is numerically singular at lambda = {lambda:e}; use a smaller shift")]
    ShiftTooLarge { lambda: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A lower-level failure annotated with what was being attempted.
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
