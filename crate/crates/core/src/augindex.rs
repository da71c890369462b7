//! Augmented-indexing reductions through a support-finding protocol.
//!
//! A bit string `z` is split into `L` blocks, block `i` naming a member
//! `S_i` of a limited-intersection family over `[u_i]` (see [`crate::codes`]).
//! The weighted universe `A = ⋃_i {i}×[u_i]×[β^i]` repeats each level-`i`
//! element `β^i` times, and a shared uniform bijection `π` scatters `A` over
//! `[n]`. Charlie encodes `S = ⋃_i {i}×S_i×[β^i]` as the protocol message for
//! `1_{π(S)}` ([`charlie_encode`]).
//!
//! Diane, holding a bit position `j*` (inside block `i*`) and the suffix
//! `z_{j*+1..}`, reconstructs the blocks above `i*`, queries the protocol on
//! their union `T`, and uses the answers — uniform in `S\T` thanks to the
//! `π`-masking — to collect elements of `S_{i*}`. The geometric weighting
//! makes level `i*` dominate `S\T`, so half of `S_{i*}` is collected after
//! few queries, and half a member identifies it. [`diane_decode_adaptive`]
//! iterates single queries, folding each answer's whole repetition class
//! into `T`; [`diane_decode_oneshot`] spends one `k`-sample query instead.
//!
//! [`uniformity_probe`] measures the masking property itself: holding the
//! images `π(T)` (pointwise) and `π(S\T)` (as a set) fixed while re-drawing
//! the hidden assignment and the protocol seed, the pulled-back answer must
//! be uniform over `S\T`.

use std::collections::BTreeSet;
use std::f64::consts::E;
use std::ops::Range;

use crate::codes::{build_family, CodeFamily};
use crate::error::Error;
use crate::protocol::{PlainUr, ProtocolParams, SupportVector, UrMessage, UrProtocol};
use crate::rng::{domain, mix2, mix3, DetRng, Permutation};
use crate::stats::chi_square_uniform;
use crate::Result;

/// The weighted, padded, `π`-scattered universe with its per-level families.
#[derive(Debug, Clone)]
pub struct AugIndexParams {
    levels: usize,
    beta: usize,
    m: usize,
    n: usize,
    seed: u64,
    u: Vec<usize>,
    /// `β^i` for level `i` at index `i-1`.
    repetition: Vec<usize>,
    /// First flat label of each level's block of `A`.
    offsets: Vec<usize>,
    /// `|A|` before dummy padding; flats at or above this are dummies.
    unpadded: usize,
    families: Vec<CodeFamily>,
    /// First bit of each level's block of `z`.
    block_starts: Vec<usize>,
    total_bits: usize,
    pi: Permutation,
}

/// Lays out the universe: `u_i = ⌊n/(β^i·L)⌉₋`, flat labels grouped by level
/// with `β^i` repetitions each, dummies padding `A` to exactly `n`, one code
/// family per level, and the uniform bijection `π` on `[n]`.
pub fn make_universe(
    n_hint: usize,
    levels: usize,
    beta: usize,
    m: usize,
    seed: u64,
) -> Result<AugIndexParams> {
    if n_hint == 0 || levels == 0 || beta < 2 || m == 0 {
        return Err(Error::Parameter(format!(
            "degenerate universe shape: n = {n_hint}, L = {levels}, β = {beta}, m = {m}"
        )));
    }
    let mut u = Vec::with_capacity(levels);
    let mut repetition = Vec::with_capacity(levels);
    for i in 1..=levels {
        let weight = (beta as u128).pow(i as u32);
        let denom = weight * levels as u128;
        let u_i = (n_hint as u128 / denom) as usize;
        u.push(u_i);
        repetition.push(u128::min(weight, n_hint as u128) as usize);
    }
    let u_last = u[levels - 1];
    if (u_last as f64) < 4.0 * E * m as f64 {
        return Err(Error::Parameter(format!(
            "deepest level universe u_{levels} = {u_last} below 4e·m = {:.1}",
            4.0 * E * m as f64
        )));
    }
    let mut offsets = Vec::with_capacity(levels);
    let mut unpadded = 0usize;
    for i in 1..=levels {
        offsets.push(unpadded);
        unpadded += u[i - 1] * repetition[i - 1];
    }
    debug_assert!(unpadded <= n_hint);
    let mut families = Vec::with_capacity(levels);
    for i in 1..=levels {
        families.push(build_family(u[i - 1], m, mix3(seed, domain::FAMILY, i as u64))?);
    }
    let mut block_starts = Vec::with_capacity(levels);
    let mut total_bits = 0usize;
    for fam in &families {
        block_starts.push(total_bits);
        total_bits += fam.bits() as usize;
    }
    if total_bits == 0 {
        return Err(Error::Parameter(
            "every level family is a singleton: the input has no encodable bits".into(),
        ));
    }
    let pi = Permutation::random(n_hint, mix2(seed, domain::BIJECTION));
    Ok(AugIndexParams {
        levels,
        beta,
        m,
        n: n_hint,
        seed,
        u,
        repetition,
        offsets,
        unpadded,
        families,
        block_starts,
        total_bits,
        pi,
    })
}

impl AugIndexParams {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn beta(&self) -> usize {
        self.beta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-level universe sizes `u_1..u_L`.
    pub fn u(&self) -> &[usize] {
        &self.u
    }

    pub fn families(&self) -> &[CodeFamily] {
        &self.families
    }

    /// `|A|` before padding.
    pub fn unpadded_len(&self) -> usize {
        self.unpadded
    }

    /// Total input bits `N = Σ_i log₂ N_i`.
    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    /// The bit positions of block `i ∈ 1..=L` within `z`.
    pub fn block_range(&self, i: usize) -> Range<usize> {
        let start = self.block_starts[i - 1];
        start..start + self.families[i - 1].bits() as usize
    }

    /// The level whose block holds bit `j`.
    pub fn block_of(&self, j: usize) -> Result<usize> {
        if j >= self.total_bits {
            return Err(Error::Parameter(format!(
                "bit {j} outside the {}-bit input",
                self.total_bits
            )));
        }
        for i in 1..=self.levels {
            if self.block_range(i).contains(&j) {
                return Ok(i);
            }
        }
        unreachable!("blocks partition the bit range");
    }

    /// Flat label of `(i, a, r)` with `i ∈ 1..=L`, `a ∈ [u_i]`, `r ∈ [β^i]`.
    pub fn triple_to_flat(&self, i: usize, a: usize, r: usize) -> usize {
        debug_assert!(a < self.u[i - 1] && r < self.repetition[i - 1]);
        self.offsets[i - 1] + a * self.repetition[i - 1] + r
    }

    /// Inverse of [`Self::triple_to_flat`]; `None` for dummies.
    pub fn flat_to_triple(&self, flat: usize) -> Option<(usize, usize, usize)> {
        if flat >= self.unpadded {
            return None;
        }
        let i = (1..=self.levels)
            .rev()
            .find(|&i| flat >= self.offsets[i - 1])
            .expect("offsets start at 0");
        let within = flat - self.offsets[i - 1];
        Some((i, within / self.repetition[i - 1], within % self.repetition[i - 1]))
    }

    /// All flat labels of the repetition class `(i, a) × [β^i]`.
    fn class_flats(&self, i: usize, a: usize) -> Range<usize> {
        let start = self.triple_to_flat(i, a, 0);
        start..start + self.repetition[i - 1]
    }

    /// Decodes one block of bits (MSB first) to its family member index.
    fn block_value(&self, i: usize, bit: impl Fn(usize) -> bool) -> usize {
        self.block_range(i).fold(0usize, |acc, j| (acc << 1) | bit(j) as usize)
    }

    /// The members `S_i` for every level, from the full input.
    fn sets_from_input(&self, z: &[bool]) -> Result<Vec<&[usize]>> {
        (1..=self.levels)
            .map(|i| self.families[i - 1].index_to_set(self.block_value(i, |j| z[j])))
            .collect()
    }

    /// The members `S_i` for levels `i > i*`, from Diane's suffix knowledge.
    fn sets_from_suffix(
        &self,
        j_star: usize,
        suffix: &[bool],
    ) -> Result<Vec<(usize, &[usize])>> {
        let i_star = self.block_of(j_star)?;
        if suffix.len() != self.total_bits - j_star - 1 {
            return Err(Error::Dimension(format!(
                "suffix holds {} bits, position {j_star} of {} leaves {}",
                suffix.len(),
                self.total_bits,
                self.total_bits - j_star - 1
            )));
        }
        (i_star + 1..=self.levels)
            .map(|i| {
                let value = self.block_value(i, |j| suffix[j - j_star - 1]);
                Ok((i, self.families[i - 1].index_to_set(value)?))
            })
            .collect()
    }

    /// Diane's initial `T`: the full repetition classes of all known blocks.
    fn initial_t(&self, j_star: usize, suffix: &[bool]) -> Result<BTreeSet<usize>> {
        let mut t = BTreeSet::new();
        for (i, set) in self.sets_from_suffix(j_star, suffix)? {
            for &a in set {
                t.extend(self.class_flats(i, a));
            }
        }
        Ok(t)
    }

    fn masked_support(&self, flats: &BTreeSet<usize>) -> Result<SupportVector> {
        SupportVector::new(self.n, flats.iter().map(|&f| self.pi.apply(f)).collect())
    }

    #[cfg(test)]
    fn with_pi(mut self, pi: Permutation) -> Self {
        assert_eq!(pi.len(), self.n);
        self.pi = pi;
        self
    }
}

/// One augmented-indexing input: the bit string and the queried position.
#[derive(Debug, Clone)]
pub struct AugIndexInstance {
    z: Vec<bool>,
    j_star: usize,
}

impl AugIndexInstance {
    pub fn new(params: &AugIndexParams, z: Vec<bool>, j_star: usize) -> Result<Self> {
        if z.len() != params.total_bits() {
            return Err(Error::Dimension(format!(
                "input has {} bits, universe encodes {}",
                z.len(),
                params.total_bits()
            )));
        }
        if j_star >= z.len() {
            return Err(Error::Parameter(format!("queried bit {j_star} out of range")));
        }
        Ok(AugIndexInstance { z, j_star })
    }

    /// Uniform bits and uniform query position.
    pub fn random(params: &AugIndexParams, seed: u64) -> Self {
        let mut rng = DetRng::for_domain(seed, domain::TRIAL);
        let z = (0..params.total_bits()).map(|_| rng.next_u64() & 1 == 1).collect();
        let j_star = rng.next_below(params.total_bits() as u64) as usize;
        AugIndexInstance { z, j_star }
    }

    /// Uniform bits with the query position uniform inside block `i_star`.
    pub fn random_in_block(params: &AugIndexParams, i_star: usize, seed: u64) -> Self {
        let mut rng = DetRng::for_domain(seed, domain::TRIAL);
        let z = (0..params.total_bits()).map(|_| rng.next_u64() & 1 == 1).collect();
        let range = params.block_range(i_star);
        let j_star = range.start + rng.next_below(range.len() as u64) as usize;
        AugIndexInstance { z, j_star }
    }

    pub fn z(&self) -> &[bool] {
        &self.z
    }

    pub fn j_star(&self) -> usize {
        self.j_star
    }

    /// Ground truth `z_{j*}` (for scoring; Diane never sees it).
    pub fn target_bit(&self) -> bool {
        self.z[self.j_star]
    }

    /// What Diane is given besides `j*`: the bits after it.
    pub fn suffix(&self) -> &[bool] {
        &self.z[self.j_star + 1..]
    }
}

/// Charlie's one-way message: the protocol encoding of `1_{π(S)}`.
pub fn charlie_encode(
    instance: &AugIndexInstance,
    params: &AugIndexParams,
    proto: &dyn UrProtocol,
) -> Result<UrMessage> {
    let sets = params.sets_from_input(&instance.z)?;
    let mut flats = BTreeSet::new();
    for (i, set) in (1..=params.levels).zip(sets) {
        for &a in set {
            flats.extend(params.class_flats(i, a));
        }
    }
    proto.alice(&params.masked_support(&flats)?)
}

/// Outcome and bookkeeping of one decoding run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionRun {
    /// The recovered bit `z_{j*}`, or `None` for Fail.
    pub outcome: Option<bool>,
    pub queries_used: usize,
    /// Accepted recoveries per level (index `i-1`).
    pub level_histogram: Vec<u64>,
    /// Distinct query supports `T` this run touched.
    pub distinct_t: usize,
}

impl ReductionRun {
    fn fail(queries_used: usize, level_histogram: Vec<u64>, distinct_t: usize) -> Self {
        ReductionRun { outcome: None, queries_used, level_histogram, distinct_t }
    }
}

/// Looks up `z_{j*}` inside the bit pattern of the member index (MSB first).
fn bit_from_member(
    params: &AugIndexParams,
    i_star: usize,
    j_star: usize,
    member: &[usize],
) -> Result<bool> {
    let index = params.families[i_star - 1].set_to_index(member)?;
    let range = params.block_range(i_star);
    let position = j_star - range.start;
    Ok(index >> (range.len() - 1 - position) & 1 == 1)
}

/// Adaptive Diane: one single-sample query per iteration, each answer's
/// repetition class folded into `T`, until half of `S_{i*}` is collected or
/// the `4m` query cap trips. Any protocol answer that is demonstrably not in
/// `S\T` — a failure, a dummy, or an element already in `T` — aborts to Fail:
/// a correct protocol never produces one, and stopping keeps adversarial
/// protocols from steering the transcript.
pub fn diane_decode_adaptive(
    message: &UrMessage,
    j_star: usize,
    suffix: &[bool],
    params: &AugIndexParams,
    proto: &dyn UrProtocol,
) -> Result<ReductionRun> {
    let i_star = params.block_of(j_star)?;
    let mut t = params.initial_t(j_star, suffix)?;
    let mut t_star: BTreeSet<usize> = BTreeSet::new();
    let mut histogram = vec![0u64; params.levels];
    let mut queries = 0usize;
    let mut distinct_t = 1usize;
    let cap = 4 * params.m;
    while 2 * t_star.len() < params.m {
        if queries == cap {
            return Ok(ReductionRun::fail(queries, histogram, distinct_t));
        }
        queries += 1;
        let answer = match proto.bob(message, &params.masked_support(&t)?, 1) {
            Ok(v) => v,
            Err(_) => return Ok(ReductionRun::fail(queries, histogram, distinct_t)),
        };
        let [masked] = answer.as_slice() else {
            return Ok(ReductionRun::fail(queries, histogram, distinct_t));
        };
        let flat = params.pi.invert(*masked);
        let Some((i, a, _)) = params.flat_to_triple(flat) else {
            return Ok(ReductionRun::fail(queries, histogram, distinct_t));
        };
        if t.contains(&flat) {
            return Ok(ReductionRun::fail(queries, histogram, distinct_t));
        }
        t.extend(params.class_flats(i, a));
        distinct_t += 1;
        histogram[i - 1] += 1;
        if i == i_star {
            t_star.insert(a);
        }
    }
    match params.families[i_star - 1].decode_half(&t_star.iter().copied().collect::<Vec<_>>()) {
        Ok(member) => {
            let member = member.to_vec();
            let bit = bit_from_member(params, i_star, j_star, &member)?;
            Ok(ReductionRun {
                outcome: Some(bit),
                queries_used: queries,
                level_histogram: histogram,
                distinct_t,
            })
        }
        Err(_) => Ok(ReductionRun::fail(queries, histogram, distinct_t)),
    }
}

/// One-shot Diane: a single `k`-sample query, keeping the returned elements
/// that decode to fresh level-`i*` triples and hoping they cover half of
/// `S_{i*}`. Foreign levels are expected (at geometrically small rates) and
/// simply filtered.
pub fn diane_decode_oneshot(
    message: &UrMessage,
    j_star: usize,
    suffix: &[bool],
    params: &AugIndexParams,
    proto: &dyn UrProtocol,
    k: usize,
) -> Result<ReductionRun> {
    let i_star = params.block_of(j_star)?;
    let t = params.initial_t(j_star, suffix)?;
    let mut histogram = vec![0u64; params.levels];
    let answer = match proto.bob(message, &params.masked_support(&t)?, k) {
        Ok(v) => v,
        Err(_) => return Ok(ReductionRun::fail(1, histogram, 1)),
    };
    let mut t_star: BTreeSet<usize> = BTreeSet::new();
    for masked in answer {
        let flat = params.pi.invert(masked);
        let Some((i, a, _)) = params.flat_to_triple(flat) else { continue };
        if t.contains(&flat) {
            continue;
        }
        histogram[i - 1] += 1;
        if i == i_star {
            t_star.insert(a);
        }
    }
    if 2 * t_star.len() < params.m {
        return Ok(ReductionRun::fail(1, histogram, 1));
    }
    match params.families[i_star - 1].decode_half(&t_star.iter().copied().collect::<Vec<_>>()) {
        Ok(member) => {
            let member = member.to_vec();
            let bit = bit_from_member(params, i_star, j_star, &member)?;
            Ok(ReductionRun {
                outcome: Some(bit),
                queries_used: 1,
                level_histogram: histogram,
                distinct_t: 1,
            })
        }
        Err(_) => Ok(ReductionRun::fail(1, histogram, 1)),
    }
}

/// Empirical answer distribution of a masked protocol over `S\T`.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// `S\T`, ascending; `counts` is aligned to it.
    pub elements: Vec<usize>,
    pub counts: Vec<u64>,
    pub successes: u64,
    pub failures: u64,
    /// Chi-square statistic of `counts` against the uniform fit.
    pub chi_square: f64,
}

/// Runs `trials` independent single-sample queries on fixed `s ⊇ t`,
/// holding the masked images `π(t)` (pointwise) and `π(s\t)` (as a set)
/// fixed while re-drawing, per trial, the hidden assignment of `s\t` onto
/// its image and the protocol's seed. Under the masking property the
/// pulled-back answers are uniform over `s\t`; an answer outside the fixed
/// image set would disprove soundness and is a hard error.
pub fn uniformity_probe(
    base: &ProtocolParams,
    s: &[usize],
    t: &[usize],
    trials: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let s_set: BTreeSet<usize> = s.iter().copied().collect();
    let t_set: BTreeSet<usize> = t.iter().copied().collect();
    if !t_set.is_subset(&s_set) {
        return Err(Error::Parameter("t must be a subset of s".into()));
    }
    let difference: Vec<usize> = s_set.difference(&t_set).copied().collect();
    if difference.is_empty() {
        return Err(Error::Parameter("s\\t is empty: nothing to sample".into()));
    }
    if s_set.iter().next_back().is_some_and(|&max| max >= base.n()) {
        return Err(Error::Parameter("probe support exceeds the universe".into()));
    }
    let pi = Permutation::random(base.n(), mix2(seed, domain::BIJECTION));
    let t_images: Vec<usize> = t_set.iter().map(|&j| pi.apply(j)).collect();
    let diff_images: Vec<usize> = difference.iter().map(|&j| pi.apply(j)).collect();
    let x_support: Vec<usize> = t_images.iter().chain(&diff_images).copied().collect();
    let x = SupportVector::new(base.n(), x_support)?;
    let y = SupportVector::new(base.n(), t_images)?;

    let mut counts = vec![0u64; difference.len()];
    let mut successes = 0u64;
    let mut failures = 0u64;
    for trial in 0..trials {
        let trial_seed = mix3(seed, domain::TRIAL, trial as u64);
        let mut rng = DetRng::new(trial_seed);
        // The hidden matching: difference[i] ↦ assigned[i], a fresh uniform
        // pairing with the same image set.
        let mut assigned = diff_images.clone();
        for i in (1..assigned.len()).rev() {
            assigned.swap(i, rng.next_below(i as u64 + 1) as usize);
        }
        let proto = PlainUr::new(ProtocolParams::with_c_rec(
            base.n(),
            base.k(),
            base.delta_target(),
            base.c_rec(),
            base.backend(),
            mix2(trial_seed, 1),
        )?);
        let message = proto.alice(&x)?;
        match proto.bob(&message, &y, 1) {
            Err(_) => failures += 1,
            Ok(answer) => {
                let [masked] = answer.as_slice() else {
                    return Err(Error::Hypothesis("probe expects single-sample answers".into()));
                };
                let Some(position) = assigned.iter().position(|&w| w == *masked) else {
                    return Err(Error::Hypothesis(
                        "protocol answered outside the difference image".into(),
                    ));
                };
                counts[position] += 1;
                successes += 1;
            }
        }
    }
    let chi_square = chi_square_uniform(&counts);
    Ok(ProbeReport { elements: difference, counts, successes, failures, chi_square })
}
