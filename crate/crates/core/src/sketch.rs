//! The linear turnstile-stream sketch, and the stream↔protocol combinators.
//!
//! A [`Sketch`] is nothing more than Alice's message kept live: the same
//! per-level syndromes, updated one coordinate at a time. Because every
//! operation is the one field primitive (`accumulate`), a sketch fed the
//! support of `x` is *bit-identical* to [`alice_encode`](crate::protocol::alice_encode)
//! on `x`, sketches add (merge) and negate, and the update order never
//! matters. Queries run Bob's decoder against the zero vector.
//!
//! Query guarantees hold under the promise that the net vector `z` stays in
//! `{-1,0,1}^n`. Violations are not detected: e.g. three `+1` updates to one
//! coordinate over the GF(3) backend wrap to zero and the sketch is
//! indistinguishable from one that never saw the coordinate.
//!
//! The module also packages the classical reductions between streaming and
//! one-way communication: any streaming support-finder yields a `UR_k^⊂`
//! protocol ([`StreamingUr`]: Alice feeds insertions, ships the state, Bob
//! feeds deletions and queries), and any duplicate-finder over length-(n+1)
//! streams yields a `UR^⊂` protocol ([`FindupUr`]: Alice streams her set, Bob
//! appends enough elements avoiding his own set that the pigeonhole forces a
//! duplicate, which must be a difference index).

use crate::error::Error;
use crate::protocol::{bob_decode_k, ProtocolParams, SupportVector, UrMessage};
use crate::rng::{domain, mix2, Permutation};
use crate::Result;

/// One turnstile update: `z_index ← z_index + delta`, `delta ∈ {-1, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamUpdate {
    pub index: usize,
    pub delta: i8,
}

/// A linear sketch of the net update vector `z`. See the module docs.
#[derive(Debug, Clone)]
pub struct Sketch {
    params: ProtocolParams,
    /// `Some` when built by [`Sketch::new_uniform`]: coordinates are
    /// relabeled through this permutation on the way in and back out.
    sigma: Option<(u64, Permutation)>,
    levels: Vec<Vec<u64>>,
    update_count: u64,
}

impl Sketch {
    /// An empty sketch (z = 0). Queries return deterministic answers.
    pub fn new(params: ProtocolParams) -> Result<Self> {
        let scheme = params.scheme()?;
        let levels = vec![scheme.zero_syndrome(); params.level_count()];
        Ok(Sketch { params, sigma: None, levels, update_count: 0 })
    }

    /// An empty sketch whose coordinates are masked by a shared
    /// seed-derived uniform permutation, making [`Sketch::query_l0_sample`]
    /// available: conditioned on success the returned indices are uniform
    /// over `support(z)` without replacement.
    pub fn new_uniform(params: ProtocolParams, shared_seed: u64) -> Result<Self> {
        let sigma = Permutation::random(params.n(), mix2(shared_seed, domain::SIGMA));
        let mut sketch = Sketch::new(params)?;
        sketch.sigma = Some((shared_seed, sigma));
        Ok(sketch)
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    /// Number of updates applied (diagnostics; merges add them).
    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn is_uniform(&self) -> bool {
        self.sigma.is_some()
    }

    /// Applies one turnstile update in O(levels · rows) field operations.
    pub fn update(&mut self, u: StreamUpdate) -> Result<()> {
        if u.index >= self.params.n() {
            return Err(Error::Dimension(format!(
                "update index {} outside universe {}",
                u.index,
                self.params.n()
            )));
        }
        if u.delta != 1 && u.delta != -1 {
            return Err(Error::Dimension(format!("update delta {} not in {{-1,+1}}", u.delta)));
        }
        let scheme = self.params.scheme()?;
        let i = match &self.sigma {
            Some((_, sigma)) => sigma.apply(u.index),
            None => u.index,
        };
        for level in self.levels.iter_mut().take(self.params.level_cap(i) + 1) {
            scheme.accumulate(level, i, u.delta)?;
        }
        self.update_count += 1;
        Ok(())
    }

    fn compatible(&self, other: &Sketch) -> Result<()> {
        if self.params.fingerprint() != other.params.fingerprint() {
            return Err(Error::Parameter("sketch parameter fingerprints differ".into()));
        }
        let mask = |s: &Sketch| s.sigma.as_ref().map(|(seed, _)| *seed);
        if mask(self) != mask(other) {
            return Err(Error::Parameter("sketch masking permutations differ".into()));
        }
        Ok(())
    }

    /// Levelwise sum: `merge(sketch(z), sketch(z')) = sketch(z + z')`.
    pub fn merge(&self, other: &Sketch) -> Result<Sketch> {
        self.compatible(other)?;
        let f = self.params.scheme()?.field_order();
        let mut out = self.clone();
        for (a, b) in out.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x = (*x + *y) % f;
            }
        }
        out.update_count += other.update_count;
        Ok(out)
    }

    /// The sketch of `-z` (levelwise field negation).
    pub fn negated(&self) -> Sketch {
        let f = self.params.scheme().expect("validated at construction").field_order();
        let mut out = self.clone();
        for level in out.levels.iter_mut() {
            for x in level.iter_mut() {
                *x = (f - *x) % f;
            }
        }
        out
    }

    /// The accumulator as a protocol message (for a uniform sketch, in the
    /// masked coordinate space — pair it with the same shared seed).
    pub fn to_message(&self) -> UrMessage {
        UrMessage { levels: self.levels.clone(), fingerprint: self.params.fingerprint() }
    }

    fn query_raw(&self, k: usize) -> Result<Vec<usize>> {
        let msg = self.to_message();
        let raw = bob_decode_k(&msg, &SupportVector::empty(self.params.n()), &self.params, k)?;
        match &self.sigma {
            Some((_, sigma)) => {
                let mut out: Vec<usize> = raw.into_iter().map(|i| sigma.invert(i)).collect();
                out.sort_unstable();
                Ok(out)
            }
            None => Ok(raw),
        }
    }

    /// Up to `k ≤ params.k()` indices of `support(z)`, or
    /// [`Error::ProtocolFail`]. Requires the promise `z ∈ {-1,0,1}^n`.
    pub fn query_support_find(&self, k: usize) -> Result<Vec<usize>> {
        self.query_raw(k)
    }

    /// As [`Sketch::query_support_find`], but additionally uniform over
    /// `support(z)` conditioned on success. Only available on sketches built
    /// by [`Sketch::new_uniform`] — the plain sketch's answers are
    /// deterministic (smallest indices), not samples.
    pub fn query_l0_sample(&self, k: usize) -> Result<Vec<usize>> {
        if self.sigma.is_none() {
            return Err(Error::Parameter(
                "l0 sampling requires a sketch built with a masking permutation".into(),
            ));
        }
        self.query_raw(k)
    }
}

/// A streaming support-finder: accepts ±1 coordinate updates and answers
/// support queries from its state. [`Sketch`] implements it; so does the
/// full-memory reference [`ExactSupportFind`].
pub trait SupportFindStream: Clone {
    fn stream_update(&mut self, index: usize, delta: i8) -> Result<()>;
    /// Up to `k` indices of the current support, or an honest failure.
    fn stream_query(&self, k: usize) -> Result<Vec<usize>>;
    /// Size of the state if shipped as a message, in bits.
    fn state_bits(&self) -> u64;
}

impl SupportFindStream for Sketch {
    fn stream_update(&mut self, index: usize, delta: i8) -> Result<()> {
        self.update(StreamUpdate { index, delta })
    }

    fn stream_query(&self, k: usize) -> Result<Vec<usize>> {
        self.query_support_find(k)
    }

    fn state_bits(&self) -> u64 {
        self.params.message_bits()
    }
}

/// Full-memory exact support-finder: the oracle that never fails. Useful as
/// the trivial end of the streaming→protocol reduction and in tests.
#[derive(Debug, Clone)]
pub struct ExactSupportFind {
    counts: Vec<i64>,
}

impl ExactSupportFind {
    pub fn new(n: usize) -> Self {
        ExactSupportFind { counts: vec![0; n] }
    }
}

impl SupportFindStream for ExactSupportFind {
    fn stream_update(&mut self, index: usize, delta: i8) -> Result<()> {
        if index >= self.counts.len() {
            return Err(Error::Dimension(format!(
                "update index {index} outside universe {}",
                self.counts.len()
            )));
        }
        self.counts[index] += i64::from(delta);
        Ok(())
    }

    fn stream_query(&self, k: usize) -> Result<Vec<usize>> {
        Ok(self
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, _)| i)
            .take(k)
            .collect())
    }

    fn state_bits(&self) -> u64 {
        (self.counts.len() as u64) * 64
    }
}

/// Streaming → one-way protocol: Alice inserts `support(x)`, the algorithm
/// state is the message, Bob deletes `support(y)` and queries. Correct
/// whenever the underlying algorithm is, because the net vector it holds at
/// query time is exactly `1_x - 1_y`.
pub struct StreamingUr<F> {
    n: usize,
    factory: F,
}

impl<S, F> StreamingUr<F>
where
    S: SupportFindStream,
    F: Fn() -> S,
{
    pub fn new(n: usize, factory: F) -> Self {
        StreamingUr { n, factory }
    }

    /// Alice's side: the algorithm state after inserting `x`.
    pub fn alice(&self, x: &SupportVector) -> Result<S> {
        if x.n() != self.n {
            return Err(Error::Dimension("input universe mismatch".into()));
        }
        let mut state = (self.factory)();
        for &i in x.indices() {
            state.stream_update(i, 1)?;
        }
        Ok(state)
    }

    /// Bob's side: continue the stream with deletions of `y`, then query.
    pub fn bob(&self, state: &S, y: &SupportVector, k: usize) -> Result<Vec<usize>> {
        if y.n() != self.n {
            return Err(Error::Dimension("input universe mismatch".into()));
        }
        let mut state = state.clone();
        for &i in y.indices() {
            state.stream_update(i, -1)?;
        }
        state.stream_query(k)
    }
}

/// A streaming duplicate-finder over a stream of `n + 1` elements of
/// `{0, …, n-1}`: after all pushes, reports some element seen at least twice.
pub trait FindupStream: Clone {
    fn push(&mut self, element: usize) -> Result<()>;
    fn duplicate(&self) -> Result<usize>;
}

/// Exact lookup-table duplicate finder; reports the *first* element to be
/// seen twice (deterministic, never fails on a stream with a duplicate).
#[derive(Debug, Clone)]
pub struct TableFindup {
    counts: Vec<u32>,
    first_dup: Option<usize>,
}

impl TableFindup {
    pub fn new(n: usize) -> Self {
        TableFindup { counts: vec![0; n], first_dup: None }
    }
}

impl FindupStream for TableFindup {
    fn push(&mut self, element: usize) -> Result<()> {
        if element >= self.counts.len() {
            return Err(Error::Dimension(format!(
                "stream element {element} outside universe {}",
                self.counts.len()
            )));
        }
        self.counts[element] += 1;
        if self.counts[element] == 2 && self.first_dup.is_none() {
            self.first_dup = Some(element);
        }
        Ok(())
    }

    fn duplicate(&self) -> Result<usize> {
        self.first_dup.ok_or(Error::ProtocolFail)
    }
}

/// Duplicate-finding → one-way protocol for the single-index problem:
/// Alice streams `support(x)` (her state is the message); Bob, knowing
/// `‖x‖₀` and his own `y ⊊ x`, appends the `n + 1 - ‖x‖₀` smallest elements
/// of the complement of `support(y)`. The combined stream has length `n + 1`
/// over a universe of `n`, so a duplicate exists, and any duplicate lies in
/// both Alice's set and Bob's complement stream — i.e. in `support(x - y)`.
pub struct FindupUr<F> {
    n: usize,
    factory: F,
}

impl<S, F> FindupUr<F>
where
    S: FindupStream,
    F: Fn() -> S,
{
    pub fn new(n: usize, factory: F) -> Self {
        FindupUr { n, factory }
    }

    pub fn alice(&self, x: &SupportVector) -> Result<S> {
        if x.n() != self.n {
            return Err(Error::Dimension("input universe mismatch".into()));
        }
        let mut state = (self.factory)();
        for &i in x.indices() {
            state.push(i)?;
        }
        Ok(state)
    }

    /// `x_weight` is `‖x‖₀`, which Bob knows by the problem's definition.
    /// Requires `y` strictly smaller than `x` (the promise `y ⊊ x`); without
    /// it Bob's stream would not fit in the complement of `y`.
    pub fn bob(&self, state: &S, y: &SupportVector, x_weight: usize) -> Result<usize> {
        if y.n() != self.n {
            return Err(Error::Dimension("input universe mismatch".into()));
        }
        let need = self.n + 1 - x_weight;
        if need > self.n - y.len() {
            return Err(Error::Parameter(
                "promise violated: y must be a strict subset of x".into(),
            ));
        }
        let mut state = state.clone();
        let mut pushed = 0usize;
        for i in 0..self.n {
            if pushed == need {
                break;
            }
            if !y.contains(i) {
                state.push(i)?;
                pushed += 1;
            }
        }
        state.duplicate()
    }
}

/// One line of the stream ingestion format: updates, queries, comments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamCommand {
    Update(StreamUpdate),
    Query(usize),
}

/// Parses the line-oriented stream format: `U <i> <+1|-1>` applies an
/// update, `Q <k>` issues a query, lines starting with `#` (and blank lines)
/// are skipped. Malformed lines report their 1-based line number.
pub fn parse_stream(text: &str) -> Result<Vec<StreamCommand>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::Format(format!("line {}: {msg}", lineno + 1));
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("U") => {
                let index: usize = tokens
                    .next()
                    .ok_or_else(|| bad("missing index"))?
                    .parse()
                    .map_err(|_| bad("bad index"))?;
                let delta = match tokens.next() {
                    Some("+1") => 1,
                    Some("-1") => -1,
                    _ => return Err(bad("delta must be +1 or -1")),
                };
                if tokens.next().is_some() {
                    return Err(bad("trailing tokens"));
                }
                out.push(StreamCommand::Update(StreamUpdate { index, delta }));
            }
            Some("Q") => {
                let k: usize = tokens
                    .next()
                    .ok_or_else(|| bad("missing k"))?
                    .parse()
                    .map_err(|_| bad("bad k"))?;
                if tokens.next().is_some() {
                    return Err(bad("trailing tokens"));
                }
                out.push(StreamCommand::Query(k));
            }
            _ => return Err(bad("expected U, Q, or #")),
        }
    }
    Ok(out)
}
