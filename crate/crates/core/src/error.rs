use thiserror::Error;

/// Errors raised by model validation, parameter solves and estimators.
///
/// The variant name is the stable, machine-facing identifier: the CLI prints
/// it verbatim on stderr so scripts can match on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotStochastic: {0}")]
    NotStochastic(String),
    #[error("EllipticityViolation: {0}")]
    EllipticityViolation(String),
    #[error("MultipleClosedClasses: found {0} closed communicating classes")]
    MultipleClosedClasses(usize),
    #[error("NonFinite: {0}")]
    NonFinite(String),
    #[error("SingularSolve: {0}")]
    SingularSolve(String),
    #[error("NonPositiveVariance: nu = {0}")]
    NonPositiveVariance(f64),
    #[error("BadFamilyParam: {0}")]
    BadFamilyParam(String),
    #[error("NotDominating: p1 < p0 at state {0}")]
    NotDominating(usize),
    #[error("NotCriticalBase: mu.p0 - 1/2 = {0}")]
    NotCriticalBase(f64),
    #[error("TargetBelowRange: target {target} is below delta_hat(1) = {floor}")]
    TargetBelowRange { target: f64, floor: f64 },
    #[error("CouplingViolation: {0}")]
    CouplingViolation(String),
    #[error("WindowTooNarrow: {0} dyadic points in window, need at least 4")]
    WindowTooNarrow(usize),
    #[error("AllCensored: no uncensored observation above the window floor")]
    AllCensored,
    #[error("BadAlpha: {0}")]
    BadAlpha(f64),
    #[error("InsufficientPairs: got {got}, need {need}")]
    InsufficientPairs { got: usize, need: usize },
    #[error("RegimeMismatch: {0}")]
    RegimeMismatch(String),
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
    #[error("Parse: {0}")]
    Parse(String),
}

impl Error {
    /// The bare variant name, e.g. `"NotStochastic"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotStochastic(_) => "NotStochastic",
            Error::EllipticityViolation(_) => "EllipticityViolation",
            Error::MultipleClosedClasses(_) => "MultipleClosedClasses",
            Error::NonFinite(_) => "NonFinite",
            Error::SingularSolve(_) => "SingularSolve",
            Error::NonPositiveVariance(_) => "NonPositiveVariance",
            Error::BadFamilyParam(_) => "BadFamilyParam",
            Error::NotDominating(_) => "NotDominating",
            Error::NotCriticalBase(_) => "NotCriticalBase",
            Error::TargetBelowRange { .. } => "TargetBelowRange",
            Error::CouplingViolation(_) => "CouplingViolation",
            Error::WindowTooNarrow(_) => "WindowTooNarrow",
            Error::AllCensored => "AllCensored",
            Error::BadAlpha(_) => "BadAlpha",
            Error::InsufficientPairs { .. } => "InsufficientPairs",
            Error::RegimeMismatch(_) => "RegimeMismatch",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
