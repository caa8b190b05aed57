use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max |A - A*| = {deviation:e})")]
    NonHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("phase undefined: {count} sample(s) with |a0| < 1e-14 (first at index {first})")]
    ZeroPhaseUndefined { count: usize, first: usize },
    #[error("normal vector is not unit length (|nu| = {norm})")]
    NotUnitNormal { norm: f64 },
    #[error("no samples with a defined phase")]
    EmptySamples,
    #[error("phase oscillation {phi} >= 2*pi")]
    OscillationTooLarge { phi: f64 },
    #[error("rho = {rho} outside [0, 1/2]")]
    RhoOutOfRange { rho: f64 },
    #[error("Bessel order {order} is negative")]
    OrderNegative { order: f64 },
    #[error("root bracketing failed for k = {k}: found {found} of {requested} roots below t = {t_max}")]
    BracketingFailed {
        k: i64,
        found: usize,
        requested: usize,
        t_max: f64,
    },
    #[error("need at least {required} eigenvalues, got {requested}")]
    InsufficientSpectrum { required: usize, requested: usize },
    #[error("lambda = {lambda} is (numerically) characteristic: sigma_min = {sigma_min:e}")]
    CharacteristicLambda { lambda: num_complex::Complex64, sigma_min: f64 },
    #[error("C is singular and the pencil is not regular")]
    SingularC,
    #[error("Jordan chain at lambda = {lambda} incomplete: {reason}")]
    ChainIncomplete {
        lambda: num_complex::Complex64,
        reason: String,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid family data: {0}")]
    InvalidFamily(String),
    #[error("unknown suite '{0}' (expected orthogonality, rayleigh, completeness, corners, rayscan or decay)")]
    UnknownSuite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
