use alloc::string::String;
use alloc::vec::Vec;

use crate::fock::Site;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("site {0:?} is not in the lattice")]
    SiteNotInLattice(Site),
    #[error("duplicate site {0:?} in site set")]
    DuplicateSite(Site),
    #[error("region is not a subset of the ambient site set")]
    NotSubset,
    #[error("operators live on different ambient site sets")]
    AmbientMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("monomial label has length {found}, site set has {expected} sites")]
    LabelLength { expected: usize, found: usize },
    #[error("operation requires definite parity: {0}")]
    ParityRequired(&'static str),
    #[error("operator is not self-adjoint (defect {0:e})")]
    NotHermitian(f64),
    #[error("interaction is not even")]
    NotEven,
    #[error("time {t} outside the interaction interval [{lo}, {hi}]")]
    TimeOutOfInterval { t: f64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("site set of {0} sites exceeds the dense cap")]
    TooLarge(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("certification failed at t = {t}: measured {measured:e} > bound {bound:e}")]
    CertificationFailed { t: f64, measured: f64, bound: f64 },
    #[error("ambiguous kernel: eigenvalue {eigenvalue:e} too close to tolerance {tol:e}")]
    AmbiguousKernel { eigenvalue: f64, tol: f64 },
    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("kernel projections are not nested at step {0}")]
    NestingViolation(usize),
    #[error("kernel of H_N is not contained in the target ground space (residual {residual:e})")]
    KernelMismatch { residual: f64, witness: Vec<(f64, f64)> },
    #[error("spectral gap closes near s = {s} (gap {gap:e} below {gap_min:e})")]
    GapClosure { s: f64, gap: f64, gap_min: f64 },
    #[error("orbitals are not orthonormal (defect {0:e})")]
    NonOrthonormal(f64),
}
