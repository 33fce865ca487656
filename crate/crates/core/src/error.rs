use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Property failures found by the verification suites are *not* errors; they
/// are recorded in reports. Errors are reserved for invalid input or violated
/// preconditions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ring mismatch: {left} vs {right}")]
    RingMismatch { left: String, right: String },
    #[error("invalid modulus {0}: must be at least 2")]
    ModulusInvalid(i128),
    #[error("invalid ring descriptor: {0}")]
    InvalidRing(String),
    #[error("exact division failed: {0}")]
    NotIntegral(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unsupported ring: {0}")]
    UnsupportedRing(String),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("multi-indices live on different bases")]
    BasisMismatch,
    #[error("multi-index must have positive degree")]
    EmptyIndex,
    #[error("module spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("element has a nonzero degree-0 part")]
    NotInAugmentationIdeal,
    #[error("cannot drop every basis label")]
    EmptyQuotientBasis,
    #[error("element is not homogeneous of degree 1")]
    NotDegreeOne,
    #[error("image of basis vector {0} is not in the target ideal")]
    ImageNotInIdeal(String),
    #[error("term budget exceeded: {needed} intermediate terms, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("not a Q-algebra: {0}")]
    NotRationalAlgebra(String),
    #[error("unsupported ideal: {0}")]
    UnsupportedIdeal(String),
    #[error("kernel is not stable under divided powers: {0}")]
    KernelNotStable(String),
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("invalid partition: {0}")]
    PartitionInvalid(String),
    #[error("law is not homogeneous of degree {0}")]
    NotHomogeneous(u32),
    #[error("extension mismatch: {0}")]
    ExtensionMismatch(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RingMismatch { .. } => "RingMismatch",
            Error::ModulusInvalid(_) => "ModulusInvalid",
            Error::InvalidRing(_) => "InvalidRing",
            Error::NotIntegral(_) => "NotIntegral",
            Error::NotPrime(_) => "NotPrime",
            Error::UnsupportedRing(_) => "UnsupportedRing",
            Error::InvalidBasis(_) => "InvalidBasis",
            Error::BasisMismatch => "BasisMismatch",
            Error::EmptyIndex => "EmptyIndex",
            Error::SpecMismatch(_) => "SpecMismatch",
            Error::NotInAugmentationIdeal => "NotInAugmentationIdeal",
            Error::EmptyQuotientBasis => "EmptyQuotientBasis",
            Error::NotDegreeOne => "NotDegreeOne",
            Error::ImageNotInIdeal(_) => "ImageNotInIdeal",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::NotRationalAlgebra(_) => "NotRationalAlgebra",
            Error::UnsupportedIdeal(_) => "UnsupportedIdeal",
            Error::KernelNotStable(_) => "KernelNotStable",
            Error::AlgebraMismatch(_) => "AlgebraMismatch",
            Error::PartitionInvalid(_) => "PartitionInvalid",
            Error::NotHomogeneous(_) => "NotHomogeneous",
            Error::ExtensionMismatch(_) => "ExtensionMismatch",
            Error::Parse(_) => "Parse",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
