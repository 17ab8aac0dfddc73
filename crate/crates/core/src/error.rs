use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports. `exit_code` maps them onto the CLI contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("eigenvalue {0} has real part outside (0,1)")]
    EigenvalueOutOfRange(Complex64),
    #[error("eigenvector condition number {0:.3e} exceeds the cap; supply a Jordan factorization")]
    NonDiagonalizableWithoutJordanInput(f64),
    #[error("matrix power needs a positive base, got {0}")]
    NonPositiveBase(f64),
    #[error("matrix Gamma undefined: eigenvalue {0} is at a pole")]
    PoleOfGamma(Complex64),
    #[error("Fourier pair residual {residual:.3e} above bound {bound:.3e} (worst frequency {frequency})")]
    GridTooCoarse { residual: f64, bound: f64, frequency: f64 },
    #[error("quadrature did not converge: error estimate {error:.3e} after {intervals} intervals")]
    QuadratureNotConverged { error: f64, intervals: usize },
    #[error("radial integral of the Levy measure diverges: {0}")]
    RadialQuadratureDiverged(String),
    #[error("first moment of the Levy measure diverges")]
    FirstMomentDiverged,
    #[error("fourth moment of the Levy measure diverges")]
    FourthMomentDiverged,
    #[error("pushforward not supported: {0}")]
    UnsupportedPushforward(String),
    #[error("measures cannot be compared: {0}")]
    IncomparableVariants(String),
    #[error("measure has infinite activity; configure a small-jump truncation")]
    TruncationRequired,
    #[error("window too small: far-field fraction {fraction:.3e} exceeds budget {budget:.3e}")]
    WindowTooSmall { fraction: f64, budget: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("time {0} is not on the ensemble grid")]
    TimesNotOnGrid(f64),
    #[error("variance is zero; kurtosis undefined")]
    DegenerateVariance,
    #[error("second moment of the measure is rank deficient")]
    RankDeficientMoment,
    #[error("time and Fourier parameters are not linked by the supported conversion: {0}")]
    UnlinkedParams(String),
    #[error("M+ or M- is singular")]
    SingularM,
    #[error("A or conj(A) is singular")]
    SingularA,
    #[error("Sigma is rank deficient")]
    RankDeficientSigma,
    #[error("ensembles do not match: {0}")]
    MismatchedEnsembles(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("only commuting diagonal exponents are supported here")]
    NonCommutingUnsupported,
    #[error("schema error at {pointer}: {message}")]
    SchemaError { pointer: String, message: String },
    #[error("invalid configuration: {0}")]
    ValidationError(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// 2 for configuration problems, 4 for violated model hypotheses, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SchemaError { .. }
            | Error::ValidationError(_)
            | Error::InvalidInput(_)
            | Error::EigenvalueOutOfRange(_)
            | Error::NonDiagonalizableWithoutJordanInput(_)
            | Error::UnlinkedParams(_)
            | Error::Io(_) => 2,
            Error::HypothesisViolated(_)
            | Error::SingularM
            | Error::SingularA
            | Error::RankDeficientMoment
            | Error::RankDeficientSigma
            | Error::NonCommutingUnsupported
            | Error::UnsupportedPushforward(_) => 4,
            _ => 3,
        }
    }
}
