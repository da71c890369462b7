//! Samplers for the universal relation, built as linear sketches.
//!
//! Given two unknown vectors `x ≠ y`, the *universal relation* asks for any
//! index where they differ. This crate implements the one-way, public-coin
//! protocol for the promise variant (`support(y) ⊆ support(x)`, Bob may know
//! `‖x‖₀`) in which Alice's whole message is a linear function of `x` — so the
//! same bytes double as a turnstile streaming sketch that supports point
//! updates, merging, support-finding and uniform ℓ₀-sampling of up to `k`
//! coordinates.
//!
//! The other half of the crate is the machinery used to reason about how small
//! such messages can be: round-by-round subset encoders that convert any
//! protocol into a compression scheme, limited-intersection set families, an
//! augmented-indexing reduction driven by those families, and numeric checkers
//! for the information-theoretic inequalities the arguments lean on. Everything
//! runs at desk scale with explicit seeds and deterministic output.
//!
//! Modules, roughly bottom-up:
//!
//! * [`field`] — GF(3) and prime-field scalar helpers, trit packing.
//! * [`rng`] — counter-mode mixing, seeded permutations; the only randomness
//!   source in the crate.
//! * [`recovery`] — exact `s`-sparse recovery schemes (the per-level decoder).
//! * [`protocol`] — the level-subsampled one-way protocol and its wire format.
//! * [`sketch`] — the turnstile sketch plus reductions from streaming
//!   algorithms back to the protocol setting.
//! * [`codec`] — adaptive subset encode/decode driven by a protocol handle.
//! * [`codes`] — families of `m`-subsets with pairwise intersections `< m/2`.
//! * [`augindex`] — augmented-indexing universe, encoder and decoders.
//! * [`info`] — entropy/mutual-information checks and product bounds.

pub mod augindex;
pub mod codec;
pub mod codes;
pub mod error;
pub mod field;
pub mod info;
pub mod protocol;
pub mod recovery;
pub mod rng;
pub mod sketch;
pub mod stats;

pub use error::Error;
pub use protocol::{ProtocolParams, SupportVector, UrMessage, UrProtocol};
pub use recovery::{Backend, RecoveryScheme, SignedSparse};
pub use sketch::Sketch;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
