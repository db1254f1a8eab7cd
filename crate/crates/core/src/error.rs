use thiserror::Error;

/// Errors produced by the modelling, simulation and certification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("contrast is undefined when both the pair rate and the noise vanish")]
    UndefinedContrast,

    #[error("no finite optimal pair rate for n = {n}, eta = {eta} (eta <= 2n); contrast rises monotonically toward its supremum {supremum}")]
    NoFiniteOptimum { n: f64, eta: f64, supremum: f64 },

    #[error("noise n = {n} must be below efficiency eta = {eta}")]
    InvalidRegime { n: f64, eta: f64 },

    #[error("isotropic weight p = 1 corresponds to infinite contrast")]
    InfiniteContrast,

    #[error("invalid dimension {d}: {reason}")]
    InvalidDimension { d: usize, reason: &'static str },

    #[error("dimension {0} is not prime; only the computational/Fourier pair is available")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("incomplete MUB set: need {expected} bases, have {found}")]
    IncompleteMubSet { expected: usize, found: usize },

    #[error("matrix is not in probability mode")]
    NotProbability,

    #[error("matrix has no mass (all entries are zero)")]
    EmptyMatrix,

    #[error("probability matrix sums to {sum}, outside tolerance {tolerance}")]
    NotNormalized { sum: f64, tolerance: f64 },

    #[error("negative entry {value} at row {row}, column {column}")]
    NegativeEntry { row: usize, column: usize, value: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("record is missing the matrix for MUB {0}")]
    MissingBasis(usize),

    #[error("no sign change of the steering functional for d = {d} on [{lo}, {hi}]")]
    BracketFailure { d: usize, lo: f64, hi: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            d,
            reason: "dimension must be at least 2",
        });
    }
    Ok(())
}
