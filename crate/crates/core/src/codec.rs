//! Las Vegas subset codecs driven by a one-way protocol.
//!
//! Both codecs compress an `m`-subset `S` of `[n]` into (protocol message,
//! residual subset `B ⊆ S`, per-round success bits `b`), recovering elements
//! of `S` through the protocol so they need not be spelled out in `B`. They
//! are *Las Vegas*: decoding returns `S` exactly for every seed and every
//! deterministic protocol behavior — a failing or even adversarial protocol
//! only shrinks the savings, never correctness.
//!
//! The single-sample codec ([`enc`]/[`dec`]) asks for one new element per
//! round and then *masks* its own next query by retiring a fixed schedule of
//! further elements chosen by a shared random priority order — the encoder
//! removes them from its working set, the decoder adds the same elements
//! (recognizable inside `B` by their priorities) to its query support. The
//! masking keeps the mutual information between the adaptive query sequence
//! and the protocol's randomness bounded, which is what lets a protocol with
//! tiny failure probability keep succeeding against queries that depend on
//! its previous answers. The replay works because the decoder's query support
//! after round `r` is provably the exact complement of the encoder's working
//! set (`C_r = S \ S_r`), so a deterministic Bob gives both sides identical
//! answers; rounds the encoder marked failed are skipped outright.
//!
//! The `k`-sample codec ([`enc_k`]/[`dec_k`]) replaces the explicit schedule
//! with a shared nested subsampling chain `[n] = T₀ ⊇ T₁ ⊇ …` of density
//! `2^{-r}` and banks, per round, the returned elements that leave the chain
//! at exactly that round — each element of `S` has a unique leaving round, so
//! encoder and decoder attribute recoveries identically.

use std::collections::BTreeSet;

use crate::error::Error;
use crate::protocol::{SupportVector, UrMessage, UrProtocol};
use crate::rng::{domain, mix2, Permutation};
use crate::stats::{ceil_of_log, log2_binomial};
use crate::Result;

/// Shared parameters of the single-sample codec: the round count, the
/// masking schedule `n_r = ⌊m·2^{-r/K}⌋`, and the priority permutation.
#[derive(Debug, Clone)]
pub struct CodecParams {
    n: usize,
    delta: f64,
    m: usize,
    decay: usize,
    rounds: usize,
    schedule: Vec<usize>,
    seed: u64,
    priority: Permutation,
}

impl CodecParams {
    /// Derives `m = ⌊√(n·log₂(1/δ))⌋`, `K = ⌊log₂(1/δ)/16⌋`,
    /// `R = ⌊K·log₂(m/4K)⌋` and the schedule, validating that every
    /// consecutive schedule gap is at least 2 (each round must retire the
    /// recovered element plus at least one masking element).
    pub fn new(n: usize, delta: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("universe size {n} too small")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("delta = {delta} outside (0,1)")));
        }
        let log_inv = (1.0 / delta).log2();
        let m = (n as f64 * log_inv).sqrt().floor() as usize;
        let decay = (log_inv / 16.0).floor() as usize;
        if decay < 1 {
            return Err(Error::Parameter(format!(
                "delta = {delta} too large: the masking constant K = ⌊log₂(1/δ)/16⌋ vanishes"
            )));
        }
        if m == 0 || m > n {
            return Err(Error::Parameter(format!("subset size m = {m} outside 1..={n}")));
        }
        let rounds = (decay as f64 * (m as f64 / (4.0 * decay as f64)).log2()).floor() as usize;
        if rounds < 1 {
            return Err(Error::Parameter(
                "parameters admit no rounds (m too small for K)".into(),
            ));
        }
        let schedule: Vec<usize> = (0..=rounds)
            .map(|r| (m as f64 * (-(r as f64) / decay as f64).exp2()).floor() as usize)
            .collect();
        for r in 0..rounds {
            if schedule[r] < schedule[r + 1] + 2 {
                return Err(Error::Parameter(format!(
                    "schedule gap n_{r} - n_{} = {} below 2",
                    r + 1,
                    schedule[r] as i64 - schedule[r + 1] as i64
                )));
            }
        }
        if schedule[rounds] == 0 {
            return Err(Error::Parameter("schedule reaches an empty working set".into()));
        }
        let priority = Permutation::random(n, mix2(seed, domain::PRIORITY));
        Ok(CodecParams { n, delta, m, decay, rounds, schedule, seed, priority })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Subset size `m`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// The schedule constant `K`.
    pub fn decay(&self) -> usize {
        self.decay
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `n_r` for `r = 0..=rounds` (so `schedule()[0] == m`).
    pub fn schedule(&self) -> &[usize] {
        &self.schedule
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The shared priority of element `a` (smaller = retired earlier).
    pub fn priority_of(&self, a: usize) -> usize {
        self.priority.apply(a)
    }
}

/// An encoded subset: the protocol message, the residual set `B` the decoder
/// reads off verbatim, and the per-round success bits `b`.
#[derive(Debug, Clone)]
pub struct CodecOutput {
    pub message: UrMessage,
    /// `B`, ascending. For the single-recovery codec `|B| = m - popcount(b)`.
    pub residual: Vec<usize>,
    /// `b`: `success[r-1]` says round `r`'s answer was accepted.
    pub success: Vec<bool>,
    /// Size of `message` on the wire, in bits (for cost accounting).
    pub message_bits: u64,
}

impl CodecOutput {
    /// Number of accepted rounds, `popcount(b)`. The single-recovery codec
    /// retires exactly one element per accepted round, so this is also its
    /// recovered-element count; the k-codec banks a batch per round, and its
    /// recovered count is `m - residual.len()` instead.
    pub fn successful_rounds(&self) -> usize {
        self.success.iter().filter(|&&b| b).count()
    }
}

fn support_of(n: usize, set: &BTreeSet<usize>) -> SupportVector {
    SupportVector::new(n, set.iter().copied().collect()).expect("sets are validated subsets of [n]")
}

/// Retires from `working` the `count` elements with smallest priority,
/// returning them (the encoder's masking step).
fn pop_smallest_priority(
    working: &mut BTreeSet<usize>,
    params: &CodecParams,
    count: usize,
) -> Vec<usize> {
    let mut ranked: Vec<usize> = working.iter().copied().collect();
    ranked.sort_unstable_by_key(|&a| params.priority_of(a));
    let victims: Vec<usize> = ranked.into_iter().take(count).collect();
    for v in &victims {
        working.remove(v);
    }
    victims
}

/// Algorithm "ENC": one protocol query per round, retiring the recovered
/// element (when the answer is a valid new element) plus masking elements
/// down to `n_r`. See the module docs for why this is losslessly decodable.
pub fn enc(s: &SupportVector, params: &CodecParams, proto: &dyn UrProtocol) -> Result<CodecOutput> {
    if s.n() != params.n() {
        return Err(Error::Dimension(format!(
            "subset universe {} does not match codec universe {}",
            s.n(),
            params.n()
        )));
    }
    if s.len() != params.m() {
        return Err(Error::Parameter(format!(
            "subset size {} does not match m = {}",
            s.len(),
            params.m()
        )));
    }
    let message = proto.alice(s)?;
    let mut working: BTreeSet<usize> = s.indices().iter().copied().collect(); // S_r
    let mut recovered: BTreeSet<usize> = BTreeSet::new(); // A
    let mut success = Vec::with_capacity(params.rounds());
    for r in 1..=params.rounds() {
        let query: BTreeSet<usize> =
            s.indices().iter().copied().filter(|a| !working.contains(a)).collect();
        let answer = proto.bob(&message, &support_of(params.n(), &query), 1);
        let valid = match &answer {
            Ok(v) if v.len() == 1 && working.contains(&v[0]) => Some(v[0]),
            _ => None,
        };
        if let Some(s_r) = valid {
            success.push(true);
            recovered.insert(s_r);
            working.remove(&s_r);
        } else {
            success.push(false);
        }
        let excess = working.len() - params.schedule()[r];
        pop_smallest_priority(&mut working, params, excess);
    }
    let residual: Vec<usize> =
        s.indices().iter().copied().filter(|a| !recovered.contains(a)).collect();
    Ok(CodecOutput { message, residual, success, message_bits: proto.message_bits() })
}

/// Algorithm "DEC": replays the encoder round for round. On a success round
/// it re-asks Bob the *same* query (the invariant `C_{r-1} = S \ S_{r-1}`
/// makes the query supports equal) and banks the answer; failed rounds are
/// skipped. Either way it then masks with the same smallest-priority
/// elements, which it can find inside `B`. Returns `S`, always, provided the
/// protocol is a deterministic function of (message, query).
pub fn dec(out: &CodecOutput, params: &CodecParams, proto: &dyn UrProtocol) -> Result<Vec<usize>> {
    if out.success.len() != params.rounds() {
        return Err(Error::Format(format!(
            "success string has {} rounds, parameters imply {}",
            out.success.len(),
            params.rounds()
        )));
    }
    if out.residual.len() + out.successful_rounds() != params.m() {
        return Err(Error::Format(format!(
            "residual size {} + successes {} does not equal m = {}",
            out.residual.len(),
            out.successful_rounds(),
            params.m()
        )));
    }
    let residual: BTreeSet<usize> = out.residual.iter().copied().collect();
    if residual.len() != out.residual.len() {
        return Err(Error::Format("duplicate residual elements".into()));
    }
    if let Some(&max) = residual.iter().next_back() {
        if max >= params.n() {
            return Err(Error::Format(format!("residual element {max} outside universe")));
        }
    }
    let mut covered: BTreeSet<usize> = BTreeSet::new(); // C_r
    let mut recovered: BTreeSet<usize> = BTreeSet::new(); // A
    for r in 1..=params.rounds() {
        if out.success[r - 1] {
            let answer = proto.bob(&out.message, &support_of(params.n(), &covered), 1)?;
            let s_r = match answer.as_slice() {
                [one] => *one,
                _ => {
                    return Err(Error::Format(
                        "replay diverged: protocol answer is not a single element".into(),
                    ))
                }
            };
            recovered.insert(s_r);
            covered.insert(s_r);
        }
        // Masking: bring |C_r| up to m - n_r using the smallest-priority
        // elements of B \ C_r — exactly those the encoder retired.
        let target = params.m() - params.schedule()[r];
        let need = target - covered.len();
        let mut candidates: Vec<usize> =
            residual.iter().copied().filter(|a| !covered.contains(a)).collect();
        candidates.sort_unstable_by_key(|&a| params.priority_of(a));
        if candidates.len() < need {
            return Err(Error::Format(
                "replay diverged: not enough residual elements to mask".into(),
            ));
        }
        covered.extend(candidates.into_iter().take(need));
    }
    let mut out_set: Vec<usize> = residual.union(&recovered).copied().collect();
    out_set.sort_unstable();
    Ok(out_set)
}

/// Shared parameters of the `k`-sample codec: `m = ⌊√(nk)⌋`,
/// `R = ⌊log₂(n/k)/2 − 2⌋`, and the seed of the subsampling chain
/// `T_r = {a : the top r bits of the element's pseudorandom word are zero}`
/// (nested, density `2^{-r}`).
#[derive(Debug, Clone)]
pub struct CodecKParams {
    n: usize,
    k: usize,
    m: usize,
    rounds: usize,
    seed: u64,
    chain_seed: u64,
}

impl CodecKParams {
    /// Requires `k ≥ 1` and `k ≤ n/2¹⁰` (which makes `R ≥ 3`).
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n < 2 || k == 0 {
            return Err(Error::Parameter(format!("bad universe/sample sizes n = {n}, k = {k}")));
        }
        if k > n >> 10 {
            return Err(Error::Parameter(format!(
                "k = {k} exceeds n/2^10 = {}: too few subsampling rounds",
                n >> 10
            )));
        }
        let m = ((n as f64) * (k as f64)).sqrt().floor() as usize;
        let rounds = ((n as f64 / k as f64).log2() / 2.0 - 2.0).floor() as usize;
        debug_assert!(rounds >= 3);
        Ok(CodecKParams { n, k, m, rounds, seed, chain_seed: mix2(seed, domain::CHAIN) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The last round `r` with `a ∈ T_r` (`≥ rounds()` means `a` survives
    /// the whole chain).
    pub fn leave_round(&self, a: usize) -> usize {
        mix2(self.chain_seed, a as u64).leading_zeros() as usize
    }

    /// Membership `a ∈ T_r`.
    pub fn in_chain(&self, a: usize, r: usize) -> bool {
        r == 0 || self.leave_round(a) >= r
    }
}

/// Algorithm "ENC_k": round `r` asks Bob for `k` elements of `S ∩ T_{r-1}`;
/// a valid answer banks those of its elements that leave the chain exactly
/// at round `r`.
pub fn enc_k(
    s: &SupportVector,
    params: &CodecKParams,
    proto: &dyn UrProtocol,
) -> Result<CodecOutput> {
    if s.n() != params.n() {
        return Err(Error::Dimension(format!(
            "subset universe {} does not match codec universe {}",
            s.n(),
            params.n()
        )));
    }
    if s.len() != params.m() {
        return Err(Error::Parameter(format!(
            "subset size {} does not match m = {}",
            s.len(),
            params.m()
        )));
    }
    let message = proto.alice(s)?;
    let mut recovered: BTreeSet<usize> = BTreeSet::new(); // A
    let mut success = Vec::with_capacity(params.rounds());
    for r in 1..=params.rounds() {
        let query: BTreeSet<usize> =
            s.indices().iter().copied().filter(|&a| !params.in_chain(a, r - 1)).collect();
        let answer = proto.bob(&message, &support_of(params.n(), &query), params.k());
        let valid = match &answer {
            Ok(v) => v.iter().all(|&a| s.contains(a) && params.in_chain(a, r - 1)),
            Err(_) => false,
        };
        if valid {
            success.push(true);
            for &a in answer.as_ref().unwrap() {
                if params.leave_round(a) == r - 1 {
                    recovered.insert(a);
                }
            }
        } else {
            success.push(false);
        }
    }
    let residual: Vec<usize> =
        s.indices().iter().copied().filter(|a| !recovered.contains(a)).collect();
    Ok(CodecOutput { message, residual, success, message_bits: proto.message_bits() })
}

/// Algorithm "DEC_k": mirrors [`enc_k`] using the invariant
/// `C_r = S \ (S ∩ T_r)`, extending the query support after each round with
/// both banked answers and the residual elements leaving the chain at that
/// round. Returns `S`, always (same determinism proviso as [`dec`]).
pub fn dec_k(
    out: &CodecOutput,
    params: &CodecKParams,
    proto: &dyn UrProtocol,
) -> Result<Vec<usize>> {
    if out.success.len() != params.rounds() {
        return Err(Error::Format(format!(
            "success string has {} rounds, parameters imply {}",
            out.success.len(),
            params.rounds()
        )));
    }
    let residual: BTreeSet<usize> = out.residual.iter().copied().collect();
    if residual.len() != out.residual.len() {
        return Err(Error::Format("duplicate residual elements".into()));
    }
    if let Some(&max) = residual.iter().next_back() {
        if max >= params.n() {
            return Err(Error::Format(format!("residual element {max} outside universe")));
        }
    }
    let mut covered: BTreeSet<usize> = BTreeSet::new(); // C_r
    let mut recovered: BTreeSet<usize> = BTreeSet::new(); // A
    for r in 1..=params.rounds() {
        let mut additions: Vec<usize> = Vec::new();
        if out.success[r - 1] {
            let answer = proto.bob(&out.message, &support_of(params.n(), &covered), params.k())?;
            for &a in &answer {
                if params.leave_round(a) == r - 1 {
                    recovered.insert(a);
                    additions.push(a);
                }
            }
        }
        additions.extend(residual.iter().copied().filter(|&a| params.leave_round(a) == r - 1));
        covered.extend(additions);
    }
    let mut out_set: Vec<usize> = residual.union(&recovered).copied().collect();
    out_set.sort_unstable();
    Ok(out_set)
}

/// Bit accounting per the source-coding baseline. `residual_bits` charges
/// `⌈log₂ n⌉` for `|B|`, one bit per round for `b`, and `⌈log₂ C(n,|B|)⌉`
/// for `B` itself; `savings` is what the protocol message must therefore
/// carry: `log₂ C(n,m) - residual_bits`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostRecord {
    pub protocol_bits: u64,
    pub residual_bits: u64,
    pub baseline_bits: f64,
    pub savings_bits: f64,
}

pub fn measure_cost(out: &CodecOutput, n: usize, m: usize) -> CostRecord {
    let rounds = out.success.len() as u64;
    let size_field = ceil_of_log((n as f64).log2());
    let residual_code = ceil_of_log(log2_binomial(n as u64, out.residual.len() as u64));
    let residual_bits = size_field + rounds + residual_code;
    let baseline_bits = log2_binomial(n as u64, m as u64);
    CostRecord {
        protocol_bits: out.message_bits,
        residual_bits,
        baseline_bits,
        savings_bits: baseline_bits - residual_bits as f64,
    }
}
