//! One error enum for the whole crate.
//!
//! The variants mirror the distinct failure *meanings* callers are expected to
//! branch on: bad construction parameters, mismatched shapes, honest decode or
//! protocol failures (which are part of the algorithms' contracts, not bugs),
//! malformed bytes, and violated hypotheses in the numeric checkers.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Construction-time parameter rejected (out of range, inconsistent, or
    /// outside the regime where the construction is defined).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Inputs whose shapes don't match (wrong universe size, wrong syndrome
    /// length, update value outside {-1,+1}, ...).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Sparse recovery could not certify any answer. This is an expected
    /// outcome for overloaded or corrupted syndromes, never a silent one.
    #[error("decode failure")]
    DecodeFailure,

    /// The one-way protocol failed at every subsampling level.
    #[error("protocol failed")]
    ProtocolFail,

    /// Malformed serialized bytes (bad magic, version, lengths, padding, or a
    /// fingerprint that doesn't match the parameters in hand).
    #[error("format error: {0}")]
    Format(String),

    /// A set was presented for indexing that is not a member of the family.
    #[error("lookup error: set is not in the family")]
    Lookup,

    /// Randomized construction exhausted its retry budget.
    #[error("construction failure: {0}")]
    Construction(String),

    /// Numeric argument outside the function's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A checker was invoked on an instance violating its hypotheses; this is
    /// misuse of the checker, not a counterexample to the inequality.
    #[error("hypothesis error: {0}")]
    Hypothesis(String),
}
