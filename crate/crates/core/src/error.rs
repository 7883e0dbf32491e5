use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot read {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("edge '{0}'-'{0}' is a loop")]
    LoopEdge(String),
    #[error("edge '{0}'-'{1}' appears more than once")]
    DuplicateEdge(String, String),
    #[error("graph is disconnected: vertex '{0}' is unreachable from the first vertex")]
    Disconnected(String),
    #[error("edge refers to unknown vertex '{0}'")]
    UnknownVertex(String),
    #[error("invalid size {size} for {what}")]
    InvalidSize { what: String, size: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not reach tolerance {tol:e} (achieved residual {achieved:e})")]
    ConvergenceFailure { tol: f64, achieved: f64 },
    #[error("eigenvalue {eigenvalue} lies within the cluster threshold of interval endpoint {endpoint}")]
    AmbiguousBoundary { eigenvalue: f64, endpoint: f64 },

    #[error("band {band}: preimage of mu = {mu} lies in the Dirichlet set")]
    SigmaCollision { band: usize, mu: f64 },
    #[error("value {value} outside the admissible range {range}")]
    OutOfRange { value: f64, range: String },
    #[error("z = {re}{im:+}i is a pole of the Weyl function")]
    SigmaPole { re: f64, im: f64 },

    #[error("edge waves belong to different graphs")]
    GraphMismatch,
    #[error("interval endpoint {0} is (numerically) a point of the spectrum")]
    EndpointOnSpectrum(f64),
    #[error("interval [{a}, {b}] is not inside band {band}")]
    IntervalOutsideBand { band: usize, a: f64, b: f64 },
    #[error("Weyl function is numerically singular at z = {re}{im:+}i (|M(z)^-1| = {inverse_norm:e})")]
    SingularWeyl { re: f64, im: f64, inverse_norm: f64 },

    #[error("z = {0} is within the near-singular margin of the discrete spectrum")]
    NearSingular(f64),
    #[error("multiplicity mismatch at lambda = {lambda}: analytic {analytic}, oracle {oracle}")]
    MultiplicityMismatch {
        lambda: f64,
        analytic: usize,
        oracle: usize,
    },
    #[error("linear algebra failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn pole(z: num_complex::Complex64) -> Self {
        Error::SigmaPole { re: z.re, im: z.im }
    }

    /// Input errors map to exit code 2, numerical failures to 3.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Parse(_)
                | Error::LoopEdge(_)
                | Error::DuplicateEdge(..)
                | Error::Disconnected(_)
                | Error::UnknownVertex(_)
                | Error::InvalidSize { .. }
                | Error::InvalidArgument(_)
                | Error::OutOfRange { .. }
                | Error::EndpointOnSpectrum(_)
                | Error::IntervalOutsideBand { .. }
                | Error::AmbiguousBoundary { .. }
                | Error::SigmaPole { .. }
                | Error::SigmaCollision { .. }
                | Error::GraphMismatch
        )
    }
}
