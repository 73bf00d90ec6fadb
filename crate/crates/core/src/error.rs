//! Error type shared by every engine module.

use thiserror::Error;

/// Every failure the engine can report.
///
/// Each variant has a stable machine-readable code (see [`Error::code`]) that the
/// command-line front end copies into its error objects.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("element is not a unit: valuation {valuation:?}")]
    NotAUnit { valuation: Option<i64> },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("generator has negative valuation on branch {branch}")]
    NegativeValuation { branch: usize },
    #[error("generator has {found} entries, ring has {expected} branches")]
    BranchCountMismatch { expected: usize, found: usize },
    #[error("no finite conductor found below window {max_window}")]
    NoFiniteConductor { max_window: i64 },
    #[error("the identity is not an element of the given basis")]
    NotUnital,
    #[error("semigroup generators {0:?} are not coprime")]
    NotCoprime(Vec<u64>),
    #[error("ring is not local ({blocks} idempotent blocks)")]
    NotLocal { blocks: usize },
    #[error("branch subset {0:?} is not the support of an idempotent of the ring")]
    NotIdempotentFactor(Vec<usize>),
    #[error("ring is already its own normalization")]
    AlreadyNormal,
    #[error("ambient shapes do not match")]
    AmbientMismatch,
    #[error("ring is not an overring of the lattice's ring")]
    NotAnOverring,
    #[error("ring is not a product of discrete valuation rings")]
    NotDvrProduct,
    #[error("lattice is not a submodule of the given lattice")]
    NotASubmodule,
    #[error("lattice data is not torsion-free of full rank: {0}")]
    NotTorsionFree(String),
    #[error("lattice is not closed under the ring action: {0}")]
    NotAModule(String),
    #[error("map does not send source into target")]
    NotAMap,
    #[error("lattice is not a subring: {0}")]
    NotARing(String),
    #[error("chain construction exceeded {0} iterations")]
    ChainDiverged(usize),
    #[error("kernel is not stable under the endomorphism ring of the maximal ideal")]
    ClaimViolation,
    #[error("term could not be decomposed into family members: {0}")]
    FailedDecomposition(String),
    #[error("summand {0} is not indecomposable")]
    NotIndecomposable(usize),
    #[error("summands {0} and {1} are isomorphic")]
    DuplicateSummand(usize, usize),
    #[error("characteristic {p} is too small for a radical computation in dimension {dim}")]
    CharacteristicTooSmall { p: u64, dim: usize },
    #[error("module list does not contain a free summand")]
    MissingFreeSummand,
    #[error("exactness certificate failed: {0}")]
    CertificateFailed(String),
    #[error("window limit {0} exceeded while computing a lattice tail")]
    WindowExceeded(i64),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable identifier used in machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotAUnit { .. } => "NotAUnit",
            Error::InvalidField(_) => "InvalidField",
            Error::NegativeValuation { .. } => "NegativeValuation",
            Error::BranchCountMismatch { .. } => "BranchCountMismatch",
            Error::NoFiniteConductor { .. } => "NoFiniteConductor",
            Error::NotUnital => "NotUnital",
            Error::NotCoprime(_) => "NotCoprime",
            Error::NotLocal { .. } => "NotLocal",
            Error::NotIdempotentFactor(_) => "NotIdempotentFactor",
            Error::AlreadyNormal => "AlreadyNormal",
            Error::AmbientMismatch => "AmbientMismatch",
            Error::NotAnOverring => "NotAnOverring",
            Error::NotDvrProduct => "NotDvrProduct",
            Error::NotASubmodule => "NotASubmodule",
            Error::NotTorsionFree(_) => "NotTorsionFree",
            Error::NotAModule(_) => "NotAModule",
            Error::NotAMap => "NotAMap",
            Error::NotARing(_) => "NotARing",
            Error::ChainDiverged(_) => "ChainDiverged",
            Error::ClaimViolation => "ClaimViolation",
            Error::FailedDecomposition(_) => "FailedDecomposition",
            Error::NotIndecomposable(_) => "NotIndecomposable",
            Error::DuplicateSummand(..) => "DuplicateSummand",
            Error::CharacteristicTooSmall { .. } => "CharacteristicTooSmall",
            Error::MissingFreeSummand => "MissingFreeSummand",
            Error::CertificateFailed(_) => "CertificateFailed",
            Error::WindowExceeded(_) => "WindowExceeded",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
