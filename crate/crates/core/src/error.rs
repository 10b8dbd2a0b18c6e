use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("({c}, {d}) is not a coprime pair")]
    NotCoprime { c: i64, d: i64 },

    #[error("rank c*theta + d = {rank} is not positive for (c, d) = ({c}, {d})")]
    NonPositiveRank { c: i64, d: i64, rank: f64 },

    #[error("coefficient dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("elements live in different algebras: theta {left} vs {right}")]
    AlgebraMismatch { left: f64, right: f64 },

    #[error("bundle mismatch: {0}")]
    SpecMismatch(String),

    #[error("translation by {shift} does not fit in the grid half-width {half_width}; increase L")]
    GridTooSmall { shift: f64, half_width: f64 },

    #[error("quadrature order {order} is too small for truncation {n}; use N <= {suggested}")]
    QuadratureTooSmall { order: usize, n: usize, suggested: usize },

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("operation undefined for c = 0: {0}")]
    TrivialBundle(&'static str),

    #[error("Im(tau) = {0} but this computation requires Im(tau) < 0")]
    TauOrientation(f64),

    #[error("inconclusive rank; increase N/P (gap {gap:.3e} < {required:.0})")]
    InconclusiveRank { gap: f64, required: f64 },

    #[error("commutator is not scalar: relative deviation {deviation:.3e}")]
    NonScalarCommutator { deviation: f64 },

    #[error("sign of {0} could not be certified")]
    UncertifiedSign(String),

    #[error("twist leaves the heart: {0}")]
    TwistLeavesHeart(String),

    #[error("gap lost along the homotopy at t = {t}: {source}")]
    HomotopyGap { t: f64, source: Box<Error> },

    #[error("Hom-bundle degree {value} is not an integer")]
    NonIntegralDegree { value: f64 },

    #[error("slope undefined (mu = 0)")]
    ZeroSlope,

    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl Error {
    /// Stable identifier used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NotCoprime { .. } => "not_coprime",
            Error::NonPositiveRank { .. } => "non_positive_rank",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::AlgebraMismatch { .. } => "algebra_mismatch",
            Error::SpecMismatch(_) => "spec_mismatch",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::QuadratureTooSmall { .. } => "quadrature_too_small",
            Error::Representation(_) => "representation",
            Error::TrivialBundle(_) => "trivial_bundle",
            Error::TauOrientation(_) => "tau_orientation",
            Error::InconclusiveRank { .. } => "inconclusive_rank",
            Error::NonScalarCommutator { .. } => "non_scalar_commutator",
            Error::UncertifiedSign(_) => "uncertified_sign",
            Error::TwistLeavesHeart(_) => "twist_leaves_heart",
            Error::HomotopyGap { .. } => "homotopy_gap",
            Error::NonIntegralDegree { .. } => "non_integral_degree",
            Error::ZeroSlope => "zero_slope",
            Error::Serialization(_) => "serialization",
        }
    }

    /// `true` for failures of a numerical or arithmetic certificate, as
    /// opposed to unusable input.
    pub fn is_certification_failure(&self) -> bool {
        matches!(
            self,
            Error::InconclusiveRank { .. }
                | Error::NonScalarCommutator { .. }
                | Error::UncertifiedSign(_)
                | Error::HomotopyGap { .. }
                | Error::NonIntegralDegree { .. }
                | Error::QuadratureTooSmall { .. }
                | Error::GridTooSmall { .. }
        )
    }
}
