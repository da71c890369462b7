//! Limited-intersection set families.
//!
//! A family over universe `[u]` consists of `N` subsets of size `m` whose
//! pairwise intersections all have size `< m/2`, so any known half of a
//! member pins the member down uniquely ([`CodeFamily::decode_half`]). The
//! family size is `N = 2^⌊log₂ X⌋` with `X = √((u/(2em))^{m/2} − 1)` — the
//! largest power of two a random family of that size supports — which makes
//! each member addressable by exactly `log₂ N` bits.
//!
//! Construction is by rejection sampling with exhaustive verification: draw
//! uniform `m`-subsets and keep each only if it intersects every previously
//! kept set in fewer than `m/2` elements. The draw is deterministic in the
//! seed, and a built (or deserialized) family always carries a checked
//! certificate of the intersection property.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::E;

use crate::error::Error;
use crate::rng::{domain, DetRng};
use crate::Result;

/// How many candidate draws [`build_family`] spends per target set before
/// giving up.
const DRAW_BUDGET_PER_SET: usize = 100;

const FAMILY_MAGIC: &[u8; 4] = b"URCF";
const FAMILY_VERSION: u8 = 1;
const FAMILY_HEADER_BYTES: usize = 4 + 1 + 4 + 4 + 4 + 8;

/// The target family size `N` for a universe of size `u` and member size
/// `m`: the largest power of two at most `√((u/(2em))^{m/2} − 1)`.
///
/// Requires `1 ≤ m ≤ u/(4e)` and a target of at least one set.
pub fn family_size_target(u: usize, m: usize) -> Result<usize> {
    if m == 0 || (m as f64) > u as f64 / (4.0 * E) {
        return Err(Error::Parameter(format!(
            "set size m = {m} outside 1..=u/(4e) = {:.3} for u = {u}",
            u as f64 / (4.0 * E)
        )));
    }
    let x = ((u as f64 / (2.0 * E * m as f64)).powf(m as f64 / 2.0) - 1.0).sqrt();
    if x < 1.0 {
        return Err(Error::Parameter(format!(
            "universe {u} too small for set size {m}: family size target {x:.3} is empty"
        )));
    }
    let bits = x.log2().floor() as u32;
    if bits >= usize::BITS - 1 {
        return Err(Error::Parameter(format!(
            "family size target 2^{bits} overflows for u = {u}, m = {m}"
        )));
    }
    Ok(1usize << bits)
}

/// A verified limited-intersection family; see the module docs.
#[derive(Debug, Clone)]
pub struct CodeFamily {
    u: usize,
    m: usize,
    seed: u64,
    sets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

/// Size of the intersection of two strictly increasing slices.
fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut common) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    common
}

fn verify_pairwise(sets: &[Vec<usize>], m: usize) -> Result<()> {
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let common = intersection_size(&sets[i], &sets[j]);
            if 2 * common >= m {
                return Err(Error::Construction(format!(
                    "sets {i} and {j} share {common} ≥ m/2 elements"
                )));
            }
        }
    }
    Ok(())
}

/// Builds a family by seeded rejection sampling. Deterministic in `seed`;
/// fails with [`Error::Construction`] if `100·N` candidate draws do not
/// yield `N` admissible sets (vanishingly unlikely within the parameter
/// precondition).
pub fn build_family(u: usize, m: usize, seed: u64) -> Result<CodeFamily> {
    let target = family_size_target(u, m)?;
    let mut rng = DetRng::for_domain(seed, domain::FAMILY);
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(target);
    let mut draws = 0usize;
    while sets.len() < target {
        if draws >= DRAW_BUDGET_PER_SET * target {
            return Err(Error::Construction(format!(
                "no admissible family of {target} sets after {draws} draws (u = {u}, m = {m})"
            )));
        }
        draws += 1;
        let candidate = rng.sample_distinct(u, m);
        if sets.iter().all(|s| 2 * intersection_size(s, &candidate) < m) {
            sets.push(candidate);
        }
    }
    verify_pairwise(&sets, m)?;
    let index = sets.iter().cloned().zip(0..).collect();
    Ok(CodeFamily { u, m, seed, sets, index })
}

impl CodeFamily {
    pub fn u(&self) -> usize {
        self.u
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Family size `N` (a power of two).
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Bits per member index: `log₂ N`.
    pub fn bits(&self) -> u32 {
        self.sets.len().trailing_zeros()
    }

    /// All members in construction order.
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// The member at a construction-order index.
    pub fn index_to_set(&self, idx: usize) -> Result<&[usize]> {
        self.sets.get(idx).map(Vec::as_slice).ok_or(Error::Lookup)
    }

    /// The construction-order index of a member (input order irrelevant).
    pub fn set_to_index(&self, set: &[usize]) -> Result<usize> {
        let mut key = set.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied().ok_or(Error::Lookup)
    }

    /// The unique member containing `t`, if exactly one does. With
    /// `|t| ≥ m/2` the intersection bound rules out a second candidate, so
    /// failure means `t` holds corrupted elements.
    pub fn decode_half(&self, t: &[usize]) -> Result<&[usize]> {
        let t: BTreeSet<usize> = t.iter().copied().collect();
        let mut found: Option<&Vec<usize>> = None;
        for s in &self.sets {
            if t.iter().all(|a| s.binary_search(a).is_ok()) {
                if found.is_some() {
                    return Err(Error::DecodeFailure);
                }
                found = Some(s);
            }
        }
        found.map(Vec::as_slice).ok_or(Error::DecodeFailure)
    }

    /// Serializes as magic, version, `u`, `m`, `N`, seed, then each member
    /// as delta-encoded varints (first element, then gaps).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FAMILY_HEADER_BYTES + self.sets.len() * self.m * 2);
        out.extend_from_slice(FAMILY_MAGIC);
        out.push(FAMILY_VERSION);
        out.extend_from_slice(&(self.u as u32).to_le_bytes());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&(self.sets.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for s in &self.sets {
            let mut prev = 0usize;
            for (pos, &a) in s.iter().enumerate() {
                let delta = if pos == 0 { a } else { a - prev };
                write_varint(&mut out, delta as u64);
                prev = a;
            }
        }
        out
    }

    /// Parses and fully re-verifies a [`CodeFamily::to_bytes`] image —
    /// including the intersection certificate, so a loaded family is as
    /// trustworthy as a built one.
    pub fn from_bytes(bytes: &[u8]) -> Result<CodeFamily> {
        if bytes.len() < FAMILY_HEADER_BYTES {
            return Err(Error::Format("family blob shorter than its header".into()));
        }
        if &bytes[..4] != FAMILY_MAGIC {
            return Err(Error::Format("bad family magic".into()));
        }
        if bytes[4] != FAMILY_VERSION {
            return Err(Error::Format(format!("unsupported family version {}", bytes[4])));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let u = word(5);
        let m = word(9);
        let n = word(13);
        let seed = u64::from_le_bytes(bytes[17..25].try_into().unwrap());
        let target =
            family_size_target(u, m).map_err(|e| Error::Format(format!("bad parameters: {e}")))?;
        if n == 0 || !n.is_power_of_two() || n > target {
            return Err(Error::Format(format!(
                "family size {n} is not a power of two within the target {target}"
            )));
        }
        let mut cursor = FAMILY_HEADER_BYTES;
        let mut sets = Vec::with_capacity(n);
        for _ in 0..n {
            let mut set = Vec::with_capacity(m);
            for pos in 0..m {
                let delta = read_varint(bytes, &mut cursor)? as usize;
                let a = if pos == 0 {
                    delta
                } else {
                    if delta == 0 {
                        return Err(Error::Format("set elements not strictly increasing".into()));
                    }
                    set[pos - 1] + delta
                };
                if a >= u {
                    return Err(Error::Format(format!("element {a} outside universe {u}")));
                }
                set.push(a);
            }
            sets.push(set);
        }
        if cursor != bytes.len() {
            return Err(Error::Format("trailing bytes after family sets".into()));
        }
        verify_pairwise(&sets, m)
            .map_err(|_| Error::Format("stored family violates the intersection bound".into()))?;
        let index = sets.iter().cloned().zip(0..).collect();
        Ok(CodeFamily { u, m, seed, sets, index })
    }
}

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn read_varint(bytes: &[u8], cursor: &mut usize) -> Result<u64> {
    let mut value = 0u64;
    let mut shift = 0u32;
    loop {
        let &byte = bytes
            .get(*cursor)
            .ok_or_else(|| Error::Format("truncated varint".into()))?;
        *cursor += 1;
        if shift >= 63 && byte > 1 {
            return Err(Error::Format("varint overflows 64 bits".into()));
        }
        value |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(value);
        }
        shift += 7;
    }
}
