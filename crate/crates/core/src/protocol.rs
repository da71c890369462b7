//! The one-way support-finding protocol.
//!
//! Alice holds `x ∈ {0,1}^n`, Bob holds `y ∈ {0,1}^n` with
//! `support(y) ⊆ support(x)`. Alice sends one message, computed as a *linear*
//! function of `x`; Bob outputs up to `k` indices of `support(x - y)` or
//! fails. The construction subsamples the universe at nested geometric rates:
//! index `i` participates in level `j` iff the top `j` bits of a per-index
//! pseudorandom word are all zero, so level 0 is everything and each deeper
//! level keeps about half of the previous one. Alice's message is one
//! recovery-scheme syndrome of `x` restricted to each level; Bob subtracts
//! `y`'s contribution (linearity) and decodes levels from sparsest downward,
//! stopping at the first level that certifiably recovers at least `k`
//! differences — or at level 0, which sees the whole difference vector.
//!
//! Bob's answer is deterministic given the message (the smallest recovered
//! indices), which is fine for support-finding but *not* a uniform sample.
//! [`UniformUr`] fixes that the standard way: both sides relabel the universe
//! by a shared random permutation, making every difference index exchangeable,
//! so conditioned on success the returned set is a uniformly distributed
//! min(k, ‖x-y‖₀)-subset of the differences.

use crate::error::Error;
use crate::field::{pack_fixed_width, unpack_fixed_width, TritVector};
use crate::recovery::{Backend, RecoveryScheme};
use crate::rng::{domain, mix2, Permutation};
use crate::stats::ceil_of_log;
use crate::Result;

/// A set `S ⊆ {0, …, n-1}`, dually the indicator vector `1_S ∈ {0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportVector {
    n: usize,
    indices: Vec<usize>,
}

impl SupportVector {
    /// Builds from distinct indices in `0..n` (any order).
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        for pair in indices.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::Dimension(format!("duplicate index {}", pair[0])));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(Error::Dimension(format!(
                    "index {last} outside universe {n}"
                )));
            }
        }
        Ok(SupportVector { n, indices })
    }

    pub fn empty(n: usize) -> Self {
        SupportVector { n, indices: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Ascending indices.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// Parameters of one protocol instance. Everything downstream — the recovery
/// scheme, the level hash, message layout — is a pure function of these.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    n: usize,
    k: usize,
    delta_target: f64,
    c_rec: usize,
    backend: Backend,
    seed: u64,
}

/// Default recovery headroom: the per-level scheme decodes up to
/// `DEFAULT_C_REC · k` nonzeros.
pub const DEFAULT_C_REC: usize = 16;

impl ProtocolParams {
    /// Standard construction with the default recovery headroom.
    pub fn new(n: usize, k: usize, delta_target: f64, backend: Backend, seed: u64) -> Result<Self> {
        Self::with_c_rec(n, k, delta_target, DEFAULT_C_REC, backend, seed)
    }

    /// Full construction. Requires `1 ≤ k ≤ n/2`, `c_rec ≥ 4`, and enough
    /// room for the per-level scheme (`c_rec · k ≤ n/2`); `delta_target` is
    /// the *reporting* failure budget in (0,1) — the protocol itself has no
    /// tunable failure knob beyond its structure.
    pub fn with_c_rec(
        n: usize,
        k: usize,
        delta_target: f64,
        c_rec: usize,
        backend: Backend,
        seed: u64,
    ) -> Result<Self> {
        if n < 2 || n > u32::MAX as usize {
            return Err(Error::Parameter(format!("universe size {n} out of range")));
        }
        if k == 0 || 2 * k > n {
            return Err(Error::Parameter(format!("k = {k} outside 1..=n/2 = {}", n / 2)));
        }
        if c_rec < 4 {
            return Err(Error::Parameter(format!(
                "recovery headroom c_rec = {c_rec} below the minimum of 4"
            )));
        }
        if !(delta_target > 0.0 && delta_target < 1.0) {
            return Err(Error::Parameter(format!(
                "delta_target = {delta_target} outside (0,1)"
            )));
        }
        let params = ProtocolParams { n, k, delta_target, c_rec, backend, seed };
        // Validates s_max ≤ n/2 as a side effect.
        params.scheme()?;
        Ok(params)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta_target(&self) -> f64 {
        self.delta_target
    }

    pub fn c_rec(&self) -> usize {
        self.c_rec
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-level recovery sparsity: `c_rec · k`.
    pub fn s_max(&self) -> usize {
        self.c_rec * self.k
    }

    /// Deepest subsampling level `L = ⌊log₂(n/k)⌋`.
    pub fn max_level(&self) -> usize {
        let q = (self.n / self.k) as u64;
        (63 - q.leading_zeros()) as usize
    }

    /// Number of levels, `L + 1` (level 0 is the whole universe).
    pub fn level_count(&self) -> usize {
        self.max_level() + 1
    }

    /// Reporting-only sample-size parameter `t = max(k, ⌈log₂(1/δ)⌉)`.
    pub fn t(&self) -> usize {
        self.k.max(ceil_of_log((1.0 / self.delta_target).log2()) as usize)
    }

    /// The shared per-level recovery scheme.
    pub fn scheme(&self) -> Result<RecoveryScheme> {
        RecoveryScheme::new(
            self.n,
            self.s_max(),
            self.backend,
            mix2(self.seed, domain::SCHEME),
        )
        .map_err(|e| match e {
            Error::Parameter(msg) => {
                Error::Parameter(format!("per-level scheme rejected: {msg}"))
            }
            other => other,
        })
    }

    /// Deepest level index `i` participates in: `min(L, leading-zeros of its
    /// pseudorandom word)`. Levels are nested by construction and level `j`
    /// keeps each index independently with probability `2^-j`.
    pub fn level_cap(&self, i: usize) -> usize {
        let word = mix2(mix2(self.seed, domain::LEVELS), i as u64);
        (word.leading_zeros() as usize).min(self.max_level())
    }

    /// Total message size in bits: `(L+1)` packed syndromes plus the 16-byte
    /// header.
    pub fn message_bits(&self) -> u64 {
        let scheme = self.scheme().expect("validated at construction");
        (self.level_count() * scheme.scheme_bit_size()) as u64 + (MESSAGE_HEADER_BYTES as u64) * 8
    }

    /// Commitment to every parameter that affects wire compatibility.
    pub fn fingerprint(&self) -> u64 {
        let mut f = mix2(0x5552_4d53, self.n as u64);
        f = mix2(f, self.k as u64);
        f = mix2(f, self.c_rec as u64);
        f = mix2(f, self.backend.to_byte() as u64);
        f = mix2(f, self.seed);
        mix2(f, self.delta_target.to_bits())
    }
}

/// Alice's message: one syndrome per level, plus the parameter fingerprint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrMessage {
    pub(crate) levels: Vec<Vec<u64>>,
    pub(crate) fingerprint: u64,
}

const MESSAGE_MAGIC: &[u8; 4] = b"URMS";
const MESSAGE_VERSION: u8 = 1;
pub(crate) const MESSAGE_HEADER_BYTES: usize = 16;

impl UrMessage {
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Wire form: 16-byte header (magic, version, backend, level count,
    /// fingerprint), then one length-prefixed packed syndrome per level.
    pub fn to_bytes(&self, params: &ProtocolParams) -> Result<Vec<u8>> {
        if self.fingerprint != params.fingerprint() {
            return Err(Error::Format("message fingerprint does not match parameters".into()));
        }
        let scheme = params.scheme()?;
        let mut out = Vec::new();
        out.extend_from_slice(MESSAGE_MAGIC);
        out.push(MESSAGE_VERSION);
        out.push(params.backend().to_byte());
        out.extend_from_slice(&(self.levels.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
        debug_assert_eq!(out.len(), MESSAGE_HEADER_BYTES);
        for level in &self.levels {
            let payload = match params.backend() {
                Backend::Gf3Brute => {
                    let trits: Vec<u8> = level.iter().map(|&v| v as u8).collect();
                    TritVector::new(trits)?.pack()
                }
                Backend::RsSyndrome => pack_fixed_width(level, scheme.value_width()),
            };
            out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            out.extend_from_slice(&payload);
        }
        Ok(out)
    }

    /// Parses and validates a message against `params`: magic, version,
    /// backend, level count, fingerprint, per-level payload shape, field
    /// ranges, padding, and the absence of trailing bytes.
    pub fn from_bytes(bytes: &[u8], params: &ProtocolParams) -> Result<Self> {
        if bytes.len() < MESSAGE_HEADER_BYTES {
            return Err(Error::Format("message shorter than header".into()));
        }
        if &bytes[0..4] != MESSAGE_MAGIC {
            return Err(Error::Format("bad message magic".into()));
        }
        if bytes[4] != MESSAGE_VERSION {
            return Err(Error::Format(format!("unsupported message version {}", bytes[4])));
        }
        if bytes[5] != params.backend().to_byte() {
            return Err(Error::Format("message backend does not match parameters".into()));
        }
        let levels = u16::from_le_bytes(bytes[6..8].try_into().unwrap()) as usize;
        if levels != params.level_count() {
            return Err(Error::Format(format!(
                "message has {levels} levels, parameters imply {}",
                params.level_count()
            )));
        }
        let fingerprint = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        if fingerprint != params.fingerprint() {
            return Err(Error::Format("message fingerprint does not match parameters".into()));
        }
        let scheme = params.scheme()?;
        let mut cursor = MESSAGE_HEADER_BYTES;
        let mut decoded = Vec::with_capacity(levels);
        for _ in 0..levels {
            if bytes.len() < cursor + 4 {
                return Err(Error::Format("truncated level header".into()));
            }
            let len = u32::from_le_bytes(bytes[cursor..cursor + 4].try_into().unwrap()) as usize;
            cursor += 4;
            if bytes.len() < cursor + len {
                return Err(Error::Format("truncated level payload".into()));
            }
            let payload = &bytes[cursor..cursor + len];
            cursor += len;
            let level = match params.backend() {
                Backend::Gf3Brute => TritVector::unpack(payload, scheme.rows())?
                    .as_slice()
                    .iter()
                    .map(|&t| t as u64)
                    .collect(),
                Backend::RsSyndrome => unpack_fixed_width(
                    payload,
                    scheme.value_width(),
                    scheme.rows(),
                    scheme.field_order(),
                )?,
            };
            decoded.push(level);
        }
        if cursor != bytes.len() {
            return Err(Error::Format("trailing bytes after message".into()));
        }
        Ok(UrMessage { levels: decoded, fingerprint })
    }
}

/// Alice's side: the per-level syndromes of `x`.
pub fn alice_encode(x: &SupportVector, params: &ProtocolParams) -> Result<UrMessage> {
    if x.n() != params.n() {
        return Err(Error::Dimension(format!(
            "input universe {} does not match protocol universe {}",
            x.n(),
            params.n()
        )));
    }
    let scheme = params.scheme()?;
    let mut levels = vec![scheme.zero_syndrome(); params.level_count()];
    for &i in x.indices() {
        for level in levels.iter_mut().take(params.level_cap(i) + 1) {
            scheme.accumulate(level, i, 1)?;
        }
    }
    Ok(UrMessage { levels, fingerprint: params.fingerprint() })
}

/// Bob's side. Returns the `min(k, ‖x-y‖₀)` smallest recoverable difference
/// indices, walking levels from sparsest to densest; a level that decodes but
/// yields fewer than `k` nonzeros is skipped (a denser level can only show
/// more), and decode failures fall through until level 0, where failure is
/// final ([`Error::ProtocolFail`]).
pub fn bob_decode(msg: &UrMessage, y: &SupportVector, params: &ProtocolParams) -> Result<Vec<usize>> {
    bob_decode_k(msg, y, params, params.k())
}

/// [`bob_decode`] with the answer truncated to `k ≤ params.k()` indices.
/// The level-walk dynamics (and so the success event) are those of the full
/// protocol; only the returned prefix changes.
pub fn bob_decode_k(
    msg: &UrMessage,
    y: &SupportVector,
    params: &ProtocolParams,
    k: usize,
) -> Result<Vec<usize>> {
    if y.n() != params.n() {
        return Err(Error::Dimension(format!(
            "input universe {} does not match protocol universe {}",
            y.n(),
            params.n()
        )));
    }
    if k == 0 || k > params.k() {
        return Err(Error::Dimension(format!(
            "requested k = {k} outside 1..={}",
            params.k()
        )));
    }
    if msg.fingerprint != params.fingerprint() {
        return Err(Error::Format("message fingerprint does not match parameters".into()));
    }
    if msg.levels.len() != params.level_count() {
        return Err(Error::Format("message level count does not match parameters".into()));
    }
    let scheme = params.scheme()?;
    // Linearity: subtracting y's column contributions turns each level into
    // the syndrome of (x - y) restricted to that level.
    let mut levels = msg.levels.clone();
    for &i in y.indices() {
        for level in levels.iter_mut().take(params.level_cap(i) + 1) {
            scheme.accumulate(level, i, -1)?;
        }
    }
    for j in (0..params.level_count()).rev() {
        match scheme.recover(&levels[j]) {
            Ok(w) => {
                if w.weight() >= params.k() || j == 0 {
                    let take = k.min(w.weight());
                    return Ok(w.support().take(take).collect());
                }
            }
            Err(Error::DecodeFailure) => {}
            Err(other) => return Err(other),
        }
    }
    Err(Error::ProtocolFail)
}

/// A one-way protocol handle: Alice's encoder, Bob's decoder, and the cost of
/// the message. Object-safe so the subset codecs and the indexing reduction
/// can be driven by the real protocol or by adversarial stubs alike.
pub trait UrProtocol {
    fn alice(&self, x: &SupportVector) -> Result<UrMessage>;
    /// Up to `k` difference indices; `Err(ProtocolFail)` is an honest failure.
    fn bob(&self, msg: &UrMessage, y: &SupportVector, k: usize) -> Result<Vec<usize>>;
    /// Message cost in bits, for accounting.
    fn message_bits(&self) -> u64;
}

/// The protocol exactly as specified by its parameters. Bob's output is
/// deterministic (smallest indices first).
#[derive(Debug, Clone)]
pub struct PlainUr {
    params: ProtocolParams,
}

impl PlainUr {
    pub fn new(params: ProtocolParams) -> Self {
        PlainUr { params }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }
}

impl UrProtocol for PlainUr {
    fn alice(&self, x: &SupportVector) -> Result<UrMessage> {
        alice_encode(x, &self.params)
    }

    fn bob(&self, msg: &UrMessage, y: &SupportVector, k: usize) -> Result<Vec<usize>> {
        bob_decode_k(msg, y, &self.params, k)
    }

    fn message_bits(&self) -> u64 {
        self.params.message_bits()
    }
}

/// The uniformizing wrapper: both sides apply a shared seeded permutation to
/// the universe before running the plain protocol, and Bob's answers are
/// mapped back. Relabeling makes the difference indices exchangeable, so
/// conditioned on success the output is a uniform min(k, ‖x-y‖₀)-subset of
/// the differences — this is what turns support-finding into ℓ₀-sampling.
#[derive(Debug, Clone)]
pub struct UniformUr {
    params: ProtocolParams,
    sigma: Permutation,
    sigma_seed: u64,
}

impl UniformUr {
    pub fn new(params: ProtocolParams, shared_seed: u64) -> Self {
        let sigma = Permutation::random(params.n(), mix2(shared_seed, domain::SIGMA));
        UniformUr { params, sigma, sigma_seed: shared_seed }
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn sigma_seed(&self) -> u64 {
        self.sigma_seed
    }

    /// The shared relabeling both sides apply.
    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    fn permute(&self, v: &SupportVector) -> Result<SupportVector> {
        if v.n() != self.params.n() {
            return Err(Error::Dimension(format!(
                "input universe {} does not match protocol universe {}",
                v.n(),
                self.params.n()
            )));
        }
        let mapped: Vec<usize> = v.indices().iter().map(|&i| self.sigma.apply(i)).collect();
        SupportVector::new(self.params.n(), mapped)
    }
}

impl UrProtocol for UniformUr {
    fn alice(&self, x: &SupportVector) -> Result<UrMessage> {
        alice_encode(&self.permute(x)?, &self.params)
    }

    fn bob(&self, msg: &UrMessage, y: &SupportVector, k: usize) -> Result<Vec<usize>> {
        let raw = bob_decode_k(msg, &self.permute(y)?, &self.params, k)?;
        let mut out: Vec<usize> = raw.into_iter().map(|i| self.sigma.invert(i)).collect();
        out.sort_unstable();
        Ok(out)
    }

    fn message_bits(&self) -> u64 {
        self.params.message_bits()
    }
}

/// Adversarial reference behavior: Alice's side is honest, Bob always fails.
/// Exercises the worst case of Las Vegas consumers — anything built on top
/// must stay correct when every query fails.
#[derive(Debug, Clone)]
pub struct FailingUr {
    params: ProtocolParams,
}

impl FailingUr {
    pub fn new(params: ProtocolParams) -> Self {
        FailingUr { params }
    }
}

impl UrProtocol for FailingUr {
    fn alice(&self, x: &SupportVector) -> Result<UrMessage> {
        alice_encode(x, &self.params)
    }

    fn bob(&self, _msg: &UrMessage, _y: &SupportVector, _k: usize) -> Result<Vec<usize>> {
        Err(Error::ProtocolFail)
    }

    fn message_bits(&self) -> u64 {
        self.params.message_bits()
    }
}

/// Adversarial reference behavior: Bob answers confidently but uselessly —
/// the first element of Bob's own input when there is one (never a valid
/// difference), a fixed out-of-thin-air index otherwise. Deterministic in
/// `(msg, y)`, as the replay contracts require of every protocol.
#[derive(Debug, Clone)]
pub struct MisleadingUr {
    params: ProtocolParams,
}

impl MisleadingUr {
    pub fn new(params: ProtocolParams) -> Self {
        MisleadingUr { params }
    }
}

impl UrProtocol for MisleadingUr {
    fn alice(&self, x: &SupportVector) -> Result<UrMessage> {
        alice_encode(x, &self.params)
    }

    fn bob(&self, _msg: &UrMessage, y: &SupportVector, _k: usize) -> Result<Vec<usize>> {
        match y.indices().first() {
            Some(&i) => Ok(vec![i]),
            None => Ok(vec![self.params.n() - 1]),
        }
    }

    fn message_bits(&self) -> u64 {
        self.params.message_bits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;
    use crate::stats::uniform_fit_passes;

    fn rs_params(n: usize, k: usize, seed: u64) -> ProtocolParams {
        ProtocolParams::new(n, k, 0.01, Backend::RsSyndrome, seed).unwrap()
    }

    #[test]
    fn derived_parameter_examples() {
        let p = rs_params(1024, 4, 9);
        assert_eq!(p.max_level(), 8);
        assert_eq!(p.level_count(), 9);
        assert_eq!(p.s_max(), 64);
        assert_eq!(p.t(), 7); // max(4, ceil(log2 100))
        let scheme = p.scheme().unwrap();
        assert_eq!(scheme.rows(), 128);
        assert_eq!(scheme.scheme_bit_size(), 1408);
        assert_eq!(p.message_bits(), 9 * 1408 + 128);
    }

    #[test]
    fn parameter_validation() {
        assert!(ProtocolParams::new(1024, 0, 0.1, Backend::RsSyndrome, 0).is_err());
        assert!(ProtocolParams::new(1024, 513, 0.1, Backend::RsSyndrome, 0).is_err());
        assert!(ProtocolParams::with_c_rec(1024, 4, 0.1, 3, Backend::RsSyndrome, 0).is_err());
        assert!(ProtocolParams::new(1024, 4, 0.0, Backend::RsSyndrome, 0).is_err());
        assert!(ProtocolParams::new(1024, 4, 1.0, Backend::RsSyndrome, 0).is_err());
        // s_max = 16k exceeds n/2: the per-level scheme cannot exist.
        assert!(ProtocolParams::new(64, 4, 0.1, Backend::RsSyndrome, 0).is_err());
        assert!(ProtocolParams::with_c_rec(64, 4, 0.1, 4, Backend::RsSyndrome, 0).is_ok());
    }

    #[test]
    fn level_caps_are_nested_and_halving() {
        let p = rs_params(4096, 4, 77);
        let mut at_least_one = 0usize;
        for i in 0..4096 {
            let cap = p.level_cap(i);
            assert!(cap <= p.max_level());
            if cap >= 1 {
                at_least_one += 1;
            }
        }
        // Pr(level ≥ 1) = 1/2; allow generous slack for 4096 draws.
        assert!((1700..=2400).contains(&at_least_one), "{at_least_one}");
    }

    #[test]
    fn support_vector_validation() {
        assert!(SupportVector::new(4, vec![1, 1]).is_err());
        assert!(SupportVector::new(4, vec![4]).is_err());
        let v = SupportVector::new(4, vec![3, 0]).unwrap();
        assert_eq!(v.indices(), &[0, 3]);
        assert!(v.contains(3));
        assert!(!v.contains(1));
    }

    #[test]
    fn levelwise_linearity() {
        // Subtracting y from Alice's message leaves exactly the syndromes of
        // (x - y) restricted to each level.
        let p = rs_params(256, 1, 5);
        let scheme = p.scheme().unwrap();
        let mut rng = DetRng::new(12);
        let xs = rng.sample_distinct(256, 20);
        let x = SupportVector::new(256, xs.clone()).unwrap();
        let y = SupportVector::new(256, xs[..12].to_vec()).unwrap();
        let msg = alice_encode(&x, &p).unwrap();
        let mut sub = msg.levels.clone();
        for &i in y.indices() {
            for level in sub.iter_mut().take(p.level_cap(i) + 1) {
                scheme.accumulate(level, i, -1).unwrap();
            }
        }
        let mut expected = vec![scheme.zero_syndrome(); p.level_count()];
        for &i in &xs[12..] {
            for level in expected.iter_mut().take(p.level_cap(i) + 1) {
                scheme.accumulate(level, i, 1).unwrap();
            }
        }
        assert_eq!(sub, expected);
    }

    #[test]
    fn roundtrip_small_difference() {
        for backend in [Backend::RsSyndrome] {
            let p = ProtocolParams::with_c_rec(256, 2, 0.01, 4, backend, 21).unwrap();
            let mut rng = DetRng::new(3);
            for trial in 0..200u64 {
                let xs = rng.sample_distinct(256, 10);
                let keep = 10 - 3;
                let x = SupportVector::new(256, xs.clone()).unwrap();
                let y = SupportVector::new(256, xs[..keep].to_vec()).unwrap();
                let diff: Vec<usize> = xs[keep..].to_vec();
                let msg = alice_encode(&x, &p).unwrap();
                let got = bob_decode(&msg, &y, &p).unwrap();
                assert_eq!(got.len(), 2, "trial {trial}");
                for g in &got {
                    assert!(diff.contains(g), "trial {trial}: {g} not a difference");
                }
            }
        }
    }

    #[test]
    fn equal_inputs_give_empty_answer() {
        let p = rs_params(128, 1, 33);
        let x = SupportVector::new(128, vec![5, 17, 90]).unwrap();
        let msg = alice_encode(&x, &p).unwrap();
        assert_eq!(bob_decode(&msg, &x, &p).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn difference_smaller_than_k_is_returned_whole() {
        let p = rs_params(128, 4, 33);
        let x = SupportVector::new(128, vec![5, 17, 90, 91]).unwrap();
        let y = SupportVector::new(128, vec![5, 17]).unwrap();
        let msg = alice_encode(&x, &p).unwrap();
        assert_eq!(bob_decode(&msg, &y, &p).unwrap(), vec![90, 91]);
    }

    #[test]
    fn bob_rejects_shape_mismatches() {
        let p = rs_params(128, 2, 33);
        let other = rs_params(128, 2, 34);
        let x = SupportVector::new(128, vec![1, 2, 3]).unwrap();
        let msg = alice_encode(&x, &p).unwrap();
        let y = SupportVector::empty(128);
        assert!(matches!(bob_decode(&msg, &y, &other), Err(Error::Format(_))));
        assert!(matches!(
            bob_decode_k(&msg, &y, &p, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            bob_decode_k(&msg, &y, &p, 3),
            Err(Error::Dimension(_))
        ));
        let y_bad = SupportVector::empty(64);
        assert!(matches!(bob_decode(&msg, &y_bad, &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn message_wire_roundtrip_both_backends() {
        for (backend, n) in [(Backend::Gf3Brute, 40), (Backend::RsSyndrome, 256)] {
            let p = ProtocolParams::with_c_rec(n, 1, 0.1, 4, backend, 77).unwrap();
            let x = SupportVector::new(n, vec![0, 3, n - 1]).unwrap();
            let msg = alice_encode(&x, &p).unwrap();
            let bytes = msg.to_bytes(&p).unwrap();
            assert_eq!(UrMessage::from_bytes(&bytes, &p).unwrap(), msg);
            // Deterministic: same inputs, same bytes.
            assert_eq!(alice_encode(&x, &p).unwrap().to_bytes(&p).unwrap(), bytes);

            // Corruptions all surface as format errors.
            let mut bad = bytes.clone();
            bad[0] = b'X';
            assert!(matches!(UrMessage::from_bytes(&bad, &p), Err(Error::Format(_))));
            let mut bad = bytes.clone();
            bad[8] ^= 0xff; // fingerprint
            assert!(matches!(UrMessage::from_bytes(&bad, &p), Err(Error::Format(_))));
            let truncated = &bytes[..bytes.len() - 1];
            assert!(matches!(UrMessage::from_bytes(truncated, &p), Err(Error::Format(_))));
            let mut extended = bytes.clone();
            extended.push(0);
            assert!(matches!(UrMessage::from_bytes(&extended, &p), Err(Error::Format(_))));
        }
    }

    #[test]
    fn wire_rejects_cross_parameter_messages() {
        let p1 = rs_params(256, 2, 1);
        let p2 = rs_params(256, 2, 2);
        let x = SupportVector::new(256, vec![9]).unwrap();
        let msg = alice_encode(&x, &p1).unwrap();
        let bytes = msg.to_bytes(&p1).unwrap();
        assert!(matches!(UrMessage::from_bytes(&bytes, &p2), Err(Error::Format(_))));
        // And serializing against the wrong params is refused outright.
        assert!(matches!(msg.to_bytes(&p2), Err(Error::Format(_))));
    }

    #[test]
    fn uniform_wrapper_is_sound_and_covers_all_differences() {
        let p = ProtocolParams::with_c_rec(64, 1, 0.1, 4, Backend::RsSyndrome, 50).unwrap();
        let x = SupportVector::new(64, vec![3, 19, 33, 40]).unwrap();
        let y = SupportVector::empty(64);
        let mut seen = [0u64; 4];
        let diffs = [3usize, 19, 33, 40];
        for trial in 0..4000u64 {
            let proto = UniformUr::new(p.clone(), trial);
            let msg = proto.alice(&x).unwrap();
            let got = proto.bob(&msg, &y, 1).unwrap();
            assert_eq!(got.len(), 1);
            let pos = diffs.iter().position(|&d| d == got[0]).expect("sound");
            seen[pos] += 1;
        }
        // Exchangeability: all four differences appear with equal frequency.
        assert!(uniform_fit_passes(&seen, 1e-6).unwrap(), "{seen:?}");
    }

    #[test]
    fn gf3_single_difference_every_seed() {
        // Fixed instance, every 16-bit seed: with ‖x-y‖₀ = 1 every level's
        // restriction is 0- or 1-sparse, so recovery is exact level by level
        // and the walk can neither fail nor answer wrong.
        let x = SupportVector::new(16, vec![2, 5, 9]).unwrap();
        let y = SupportVector::new(16, vec![2, 9]).unwrap();
        for seed in 0..=u16::MAX as u64 {
            let p = ProtocolParams::with_c_rec(16, 1, 0.1, 4, Backend::Gf3Brute, seed).unwrap();
            let msg = alice_encode(&x, &p).unwrap();
            let got = bob_decode(&msg, &y, &p).unwrap();
            assert_eq!(got, vec![5], "seed {seed}");
        }
    }

    #[test]
    fn plain_bob_is_deterministic_smallest_first() {
        let p = rs_params(128, 2, 4);
        let x = SupportVector::new(128, vec![7, 30, 99]).unwrap();
        let y = SupportVector::empty(128);
        let msg = alice_encode(&x, &p).unwrap();
        let a = bob_decode(&msg, &y, &p).unwrap();
        let b = bob_decode(&msg, &y, &p).unwrap();
        assert_eq!(a, b);
        // Level 0 sees the full difference {7, 30, 99}; if the walk reaches
        // it the answer is the two smallest. Higher levels can only stop the
        // walk with w ≥ k, whose support is a subset — either way sound.
        for g in &a {
            assert!([7usize, 30, 99].contains(g));
        }
    }
}
