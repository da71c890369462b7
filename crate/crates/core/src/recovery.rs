//! Exact `s`-sparse recovery over a finite field.
//!
//! A *scheme* is a matrix `Π` with `n` columns such that any vector `w` with
//! entries in `{-1, 0, +1}` and `‖w‖₀ ≤ s_max` can be recovered exactly from
//! `Πw`, and nothing else is ever returned: `recover` either reports the
//! unique valid preimage or fails loudly. Two backends:
//!
//! * [`Backend::Gf3Brute`] — a seeded i.i.d. uniform GF(3) matrix with
//!   `2s + ⌈log₃ C(n, 2s)⌉ + 1` rows. That row count makes the expected number
//!   of ≤2s-sparse kernel vectors less than one, so a random matrix usually
//!   separates every pair of ≤s-sparse inputs; decoding is exhaustive search,
//!   so it is only usable at small `n` and `s_max`. Matrices are *not*
//!   re-verified at construction (the scan is exponential); the few bad seeds
//!   surface as decode failures or, with vanishing probability, as a matching
//!   wrong preimage — acceptable for the brute backend's role as a reference.
//! * [`Backend::RsSyndrome`] — power-sum syndromes over F_p for the smallest
//!   prime `p > n`: row `r` (1-based) of the matrix is `(1^r, 2^r, …, n^r)`,
//!   with `2·s_max` rows. Any `2s` columns form a nonsingular generalized
//!   Vandermonde system, so injectivity on ≤s-sparse vectors is unconditional.
//!   Decoding runs Berlekamp–Massey, finds the locator roots by polynomial
//!   gcd + equal-degree splitting (deterministic shift sequence from the
//!   scheme seed), solves for the coefficient values, and then **always**
//!   re-encodes the candidate and compares syndromes before returning.
//!
//! Matrices are derived from the seed on demand and never stored or
//! serialized; a scheme's wire form is just its parameters.

use crate::error::Error;
use crate::field::{prime_above, Fp};
use crate::rng::{domain, mix2, mix3, DetRng};
use crate::stats::{ceil_of_log, log2_binomial};
use crate::Result;

/// Which matrix family and decoder a scheme uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Random GF(3) matrix, exhaustive decode. Reference-quality, tiny inputs.
    Gf3Brute,
    /// Power-sum syndromes over F_p, algebraic decode. The production path.
    RsSyndrome,
}

impl Backend {
    pub(crate) fn to_byte(self) -> u8 {
        match self {
            Backend::Gf3Brute => 0,
            Backend::RsSyndrome => 1,
        }
    }

    pub(crate) fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Backend::Gf3Brute),
            1 => Ok(Backend::RsSyndrome),
            other => Err(Error::Format(format!("unknown backend byte {other}"))),
        }
    }
}

/// A sparse vector over `{-1, +1}` entries (the only values the recovery
/// contract speaks about). Entries are kept sorted by index with no
/// duplicates; the zero vector has no entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedSparse {
    n: usize,
    entries: Vec<(usize, i8)>,
}

impl SignedSparse {
    /// Builds from (index, ±1) pairs in any order.
    pub fn new(n: usize, mut entries: Vec<(usize, i8)>) -> Result<Self> {
        entries.sort_unstable_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Dimension(format!(
                    "duplicate index {} in sparse vector",
                    pair[0].0
                )));
            }
        }
        for &(i, v) in &entries {
            if i >= n {
                return Err(Error::Dimension(format!("index {i} outside universe {n}")));
            }
            if v != 1 && v != -1 {
                return Err(Error::Dimension(format!("entry {v} not in {{-1,+1}}")));
            }
        }
        Ok(SignedSparse { n, entries })
    }

    pub fn zero(n: usize) -> Self {
        SignedSparse { n, entries: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzero entries.
    pub fn weight(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, i8)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(i, _)| i)
    }
}

/// An exact sparse-recovery scheme; see the module docs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryScheme {
    n: usize,
    s_max: usize,
    backend: Backend,
    seed: u64,
    rows: usize,
    field_order: u64,
    matrix_seed: u64,
}

const SCHEME_MAGIC: &[u8; 4] = b"URSK";
const SCHEME_VERSION: u8 = 1;
/// Serialized size: magic + version + backend + three u64 parameters.
pub const SCHEME_WIRE_BYTES: usize = 4 + 1 + 1 + 8 + 8 + 8;

impl RecoveryScheme {
    /// Builds a scheme for universe size `n` and recovery sparsity `s_max`.
    ///
    /// Requires `1 ≤ s_max ≤ n/2`: recovery needs the matrix injective on
    /// ≤s-sparse inputs, which is impossible past n/2 for these row counts,
    /// and the row formula itself is only defined there.
    pub fn new(n: usize, s_max: usize, backend: Backend, seed: u64) -> Result<Self> {
        if n == 0 || n > (u32::MAX as usize) {
            return Err(Error::Parameter(format!("universe size {n} out of range")));
        }
        if s_max == 0 {
            return Err(Error::Parameter("s_max must be at least 1".into()));
        }
        if 2 * s_max > n {
            return Err(Error::Parameter(format!(
                "s_max = {s_max} exceeds n/2 = {}",
                n / 2
            )));
        }
        let (rows, field_order) = match backend {
            Backend::Gf3Brute => {
                let log3 = log2_binomial(n as u64, 2 * s_max as u64) / 3f64.log2();
                (2 * s_max + ceil_of_log(log3) as usize + 1, 3)
            }
            Backend::RsSyndrome => (2 * s_max, prime_above(n as u64)),
        };
        Ok(RecoveryScheme {
            n,
            s_max,
            backend,
            seed,
            rows,
            field_order,
            matrix_seed: mix2(seed, domain::SCHEME),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s_max(&self) -> usize {
        self.s_max
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of measurement rows (syndrome length).
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Order of the syndrome field (3, or the smallest prime > n).
    pub fn field_order(&self) -> u64 {
        self.field_order
    }

    /// The matrix entry at (`row`, `col`), derived from the seed.
    pub fn matrix_entry(&self, row: usize, col: usize) -> u64 {
        debug_assert!(row < self.rows && col < self.n);
        match self.backend {
            Backend::Gf3Brute => mix3(self.matrix_seed, row as u64, col as u64) % 3,
            Backend::RsSyndrome => {
                let f = Fp::new(self.field_order);
                f.pow(col as u64 + 1, row as u64 + 1)
            }
        }
    }

    /// Size in bits of one packed syndrome: GF(3) packs five trits per byte
    /// (so whole bytes), F_p packs `⌈log₂ p⌉` bits per row.
    pub fn scheme_bit_size(&self) -> usize {
        match self.backend {
            Backend::Gf3Brute => self.rows.div_ceil(5) * 8,
            Backend::RsSyndrome => self.rows * self.value_width() as usize,
        }
    }

    /// Bit width of one packed field value (RS backend).
    pub(crate) fn value_width(&self) -> u32 {
        64 - (self.field_order - 1).leading_zeros()
    }

    /// The all-zeros syndrome buffer.
    pub fn zero_syndrome(&self) -> Vec<u64> {
        vec![0; self.rows]
    }

    /// Adds `delta ∈ {-1, +1}` times column `index` into `buf`. This is the
    /// single primitive behind encoding, streaming updates, and the
    /// subtraction Bob performs, which is what keeps them all consistent.
    pub fn accumulate(&self, buf: &mut [u64], index: usize, delta: i8) -> Result<()> {
        if buf.len() != self.rows {
            return Err(Error::Dimension(format!(
                "syndrome buffer has {} rows, scheme has {}",
                buf.len(),
                self.rows
            )));
        }
        if index >= self.n {
            return Err(Error::Dimension(format!(
                "index {index} outside universe {}",
                self.n
            )));
        }
        if delta != 1 && delta != -1 {
            return Err(Error::Dimension(format!("delta {delta} not in {{-1,+1}}")));
        }
        match self.backend {
            Backend::Gf3Brute => {
                let v = if delta == 1 { 1 } else { 2 };
                for (r, slot) in buf.iter_mut().enumerate() {
                    let e = mix3(self.matrix_seed, r as u64, index as u64) % 3;
                    *slot = (*slot + v * e) % 3;
                }
            }
            Backend::RsSyndrome => {
                let f = Fp::new(self.field_order);
                let v = if delta == 1 { 1 } else { f.neg(1) };
                let alpha = index as u64 + 1;
                let mut pw = alpha;
                for slot in buf.iter_mut() {
                    *slot = f.add(*slot, f.mul(v, pw));
                    pw = f.mul(pw, alpha);
                }
            }
        }
        Ok(())
    }

    /// Computes the syndrome `Πw` of a signed sparse vector. No sparsity
    /// precondition — encoding an overloaded vector is exactly how the
    /// detect-or-correct behaviour of [`recover`](Self::recover) is exercised.
    pub fn encode_syndrome(&self, w: &SignedSparse) -> Result<Vec<u64>> {
        if w.n() != self.n {
            return Err(Error::Dimension(format!(
                "vector universe {} does not match scheme universe {}",
                w.n(),
                self.n
            )));
        }
        let mut buf = self.zero_syndrome();
        for &(i, v) in w.entries() {
            self.accumulate(&mut buf, i, v)?;
        }
        Ok(buf)
    }

    /// Recovers the unique `w` with `‖w‖₀ ≤ s_max` and entries in `{-1,+1}`
    /// whose syndrome equals the input, or fails.
    ///
    /// Both backends verify before returning: the brute decoder only returns
    /// exact syndrome matches by construction, and the algebraic decoder
    /// re-encodes its candidate and compares. A returned vector therefore
    /// always satisfies `encode_syndrome(w) == syndrome` and
    /// `w.weight() ≤ s_max`; syndromes with no such preimage get
    /// [`Error::DecodeFailure`], never a silent wrong answer.
    pub fn recover(&self, syndrome: &[u64]) -> Result<SignedSparse> {
        if syndrome.len() != self.rows {
            return Err(Error::Dimension(format!(
                "syndrome has {} rows, scheme has {}",
                syndrome.len(),
                self.rows
            )));
        }
        if syndrome.iter().any(|&v| v >= self.field_order) {
            return Err(Error::Dimension("syndrome value outside field".into()));
        }
        if syndrome.iter().all(|&v| v == 0) {
            // The zero vector is the unique sparse preimage of the zero
            // syndrome whenever the matrix is injective at all.
            return Ok(SignedSparse::zero(self.n));
        }
        match self.backend {
            Backend::Gf3Brute => self.recover_gf3(syndrome),
            Backend::RsSyndrome => self.recover_rs(syndrome),
        }
    }

    /// Exhaustive search, ascending weight, then lexicographic support, then
    /// value tuples with +1 before -1. Candidate order only matters on
    /// syndromes with no valid preimage from a *bad* random matrix; fixing it
    /// keeps behaviour reproducible anyway.
    fn recover_gf3(&self, syndrome: &[u64]) -> Result<SignedSparse> {
        let mut buf = vec![0u64; self.rows];
        for weight in 1..=self.s_max.min(self.n) {
            let mut comb: Vec<usize> = (0..weight).collect();
            loop {
                // Iterate sign patterns as a base-2 odometer over {+1, -1},
                // most significant on the left.
                let mut vals = vec![1i8; weight];
                loop {
                    buf.iter_mut().for_each(|v| *v = 0);
                    for (pos, &i) in comb.iter().enumerate() {
                        self.accumulate(&mut buf, i, vals[pos])?;
                    }
                    if buf == syndrome {
                        let entries = comb.iter().copied().zip(vals.iter().copied()).collect();
                        return SignedSparse::new(self.n, entries);
                    }
                    if !next_signs(&mut vals) {
                        break;
                    }
                }
                if !next_combination(&mut comb, self.n) {
                    break;
                }
            }
        }
        Err(Error::DecodeFailure)
    }

    fn recover_rs(&self, syndrome: &[u64]) -> Result<SignedSparse> {
        let f = Fp::new(self.field_order);
        let lambda = berlekamp_massey(&f, syndrome);
        let deg = lambda.len() - 1;
        if deg == 0 || deg > self.s_max {
            return Err(Error::DecodeFailure);
        }
        let split_seed = mix2(self.matrix_seed, domain::SPLIT);
        let roots = match distinct_roots(&f, &lambda, split_seed) {
            Some(r) if r.len() == deg => r,
            _ => return Err(Error::DecodeFailure),
        };
        // Λ(x) = Π (1 - X_l x): the locators are the inverses of its roots.
        let mut locators: Vec<u64> = roots.iter().map(|&r| f.inv(r)).collect();
        locators.sort_unstable();
        if locators[0] == 0 || *locators.last().unwrap() > self.n as u64 {
            return Err(Error::DecodeFailure);
        }
        let values = match solve_vandermonde(&f, &locators, &syndrome[..deg]) {
            Some(v) => v,
            None => return Err(Error::DecodeFailure),
        };
        let mut entries = Vec::with_capacity(deg);
        for (&loc, &val) in locators.iter().zip(values.iter()) {
            let sign = if val == 1 {
                1i8
            } else if val == f.neg(1) {
                -1i8
            } else {
                return Err(Error::DecodeFailure);
            };
            entries.push((loc as usize - 1, sign));
        }
        let candidate = SignedSparse::new(self.n, entries)?;
        // Mandatory verification: accept only candidates whose full syndrome
        // reproduces the input bit for bit.
        if self.encode_syndrome(&candidate)? != syndrome {
            return Err(Error::DecodeFailure);
        }
        Ok(candidate)
    }

    /// Serializes parameters only (30 bytes); the matrix is a pure function
    /// of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SCHEME_WIRE_BYTES);
        out.extend_from_slice(SCHEME_MAGIC);
        out.push(SCHEME_VERSION);
        out.push(self.backend.to_byte());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.s_max as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out
    }

    /// Parses and re-validates a serialized scheme.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != SCHEME_WIRE_BYTES {
            return Err(Error::Format(format!(
                "scheme blob has {} bytes, expected {SCHEME_WIRE_BYTES}",
                bytes.len()
            )));
        }
        if &bytes[0..4] != SCHEME_MAGIC {
            return Err(Error::Format("bad scheme magic".into()));
        }
        if bytes[4] != SCHEME_VERSION {
            return Err(Error::Format(format!("unsupported scheme version {}", bytes[4])));
        }
        let backend = Backend::from_byte(bytes[5])?;
        let n = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
        let s_max = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
        let seed = u64::from_le_bytes(bytes[22..30].try_into().unwrap());
        if n > u32::MAX as u64 || s_max > n {
            return Err(Error::Format("scheme parameters out of range".into()));
        }
        RecoveryScheme::new(n as usize, s_max as usize, backend, seed)
            .map_err(|e| Error::Format(format!("invalid scheme parameters: {e}")))
    }
}

fn next_combination(comb: &mut [usize], n: usize) -> bool {
    let e = comb.len();
    let mut i = e;
    while i > 0 {
        i -= 1;
        if comb[i] != i + n - e {
            comb[i] += 1;
            for j in i + 1..e {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn next_signs(vals: &mut [i8]) -> bool {
    let mut i = vals.len();
    while i > 0 {
        i -= 1;
        if vals[i] == 1 {
            vals[i] = -1;
            for v in vals.iter_mut().skip(i + 1) {
                *v = 1;
            }
            return true;
        }
    }
    false
}

/// Minimal LFSR (connection polynomial, little-endian, constant term 1) that
/// generates the sequence. Returned vector has length `L + 1`.
fn berlekamp_massey(f: &Fp, s: &[u64]) -> Vec<u64> {
    let n = s.len();
    let mut c = vec![0u64; n + 1];
    let mut b = vec![0u64; n + 1];
    c[0] = 1;
    b[0] = 1;
    let mut l = 0usize;
    let mut m = 1usize;
    let mut last_d = 1u64;
    for i in 0..n {
        let mut d = s[i];
        for j in 1..=l {
            d = f.add(d, f.mul(c[j], s[i - j]));
        }
        if d == 0 {
            m += 1;
        } else if 2 * l <= i {
            let t = c.clone();
            let coef = f.mul(d, f.inv(last_d));
            for j in 0..=n - m {
                c[j + m] = f.sub(c[j + m], f.mul(coef, b[j]));
            }
            l = i + 1 - l;
            b = t;
            last_d = d;
            m = 1;
        } else {
            let coef = f.mul(d, f.inv(last_d));
            for j in 0..=n - m {
                c[j + m] = f.sub(c[j + m], f.mul(coef, b[j]));
            }
            m += 1;
        }
    }
    c.truncate(l + 1);
    c
}

// ---- dense little-endian polynomial arithmetic over F_p ----

fn poly_trim(p: &mut Vec<u64>) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

fn poly_rem(f: &Fp, mut a: Vec<u64>, b: &[u64]) -> Vec<u64> {
    debug_assert!(!b.is_empty());
    let db = b.len() - 1;
    let lead_inv = f.inv(b[db]);
    while a.len() > db {
        let da = a.len() - 1;
        let coef = f.mul(a[da], lead_inv);
        if coef != 0 {
            for j in 0..=db {
                let t = f.mul(coef, b[j]);
                a[da - db + j] = f.sub(a[da - db + j], t);
            }
        }
        a.pop();
        poly_trim(&mut a);
        if a.is_empty() {
            break;
        }
    }
    a
}

fn poly_mulmod(f: &Fp, a: &[u64], b: &[u64], modulus: &[u64]) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = f.add(prod[i + j], f.mul(ai, bj));
        }
    }
    poly_trim(&mut prod);
    poly_rem(f, prod, modulus)
}

fn poly_powmod(f: &Fp, base: &[u64], mut exp: u64, modulus: &[u64]) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut base = poly_rem(f, base.to_vec(), modulus);
    while exp > 0 {
        if exp & 1 == 1 {
            result = poly_mulmod(f, &result, &base, modulus);
        }
        base = poly_mulmod(f, &base, &base, modulus);
        exp >>= 1;
    }
    result
}

fn poly_monic(f: &Fp, mut p: Vec<u64>) -> Vec<u64> {
    poly_trim(&mut p);
    if let Some(&lead) = p.last() {
        if lead != 1 {
            let inv = f.inv(lead);
            for c in p.iter_mut() {
                *c = f.mul(*c, inv);
            }
        }
    }
    p
}

fn poly_gcd(f: &Fp, a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    let mut a = poly_monic(f, a);
    let mut b = poly_monic(f, b);
    while !b.is_empty() {
        let r = poly_rem(f, a, &b);
        a = b;
        b = poly_monic(f, r);
    }
    a
}

fn poly_sub_const(f: &Fp, mut p: Vec<u64>, c: u64) -> Vec<u64> {
    if p.is_empty() {
        p = vec![f.neg(c)];
    } else {
        p[0] = f.sub(p[0], c);
    }
    poly_trim(&mut p);
    p
}

fn poly_div_exact(f: &Fp, a: &[u64], b: &[u64]) -> Vec<u64> {
    // Quotient of a by b where b | a; both monic-ish, used to peel gcd factors.
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let lead_inv = f.inv(b[db]);
    let mut q = vec![0u64; a.len() - db];
    while rem.len() > db {
        let da = rem.len() - 1;
        let coef = f.mul(rem[da], lead_inv);
        q[da - db] = coef;
        for j in 0..=db {
            let t = f.mul(coef, b[j]);
            rem[da - db + j] = f.sub(rem[da - db + j], t);
        }
        rem.pop();
        poly_trim(&mut rem);
        if rem.is_empty() {
            break;
        }
    }
    q
}

/// All roots of `poly` in F_p, provided `poly` splits into distinct linear
/// factors over F_p^*; returns `None` when it doesn't (or the deterministic
/// splitting budget runs out, which for a genuine split-into-linears is
/// astronomically unlikely).
fn distinct_roots(f: &Fp, poly: &[u64], seed: u64) -> Option<Vec<u64>> {
    let monic = poly_monic(f, poly.to_vec());
    if monic.len() < 2 {
        return None;
    }
    // x^(p-1) mod poly; gcd with poly isolates distinct roots in F_p^*.
    let x = vec![0u64, 1];
    let xp = poly_powmod(f, &x, f.p - 1, &monic);
    let g = poly_gcd(f, poly_sub_const(f, xp, 1), monic.clone());
    if g.len() != monic.len() {
        return None;
    }
    let mut roots = Vec::with_capacity(g.len() - 1);
    let mut rng = DetRng::new(seed);
    if split_linear(f, g, &mut rng, &mut roots, 0) {
        roots.sort_unstable();
        Some(roots)
    } else {
        None
    }
}

fn split_linear(f: &Fp, g: Vec<u64>, rng: &mut DetRng, out: &mut Vec<u64>, depth: usize) -> bool {
    let d = g.len() - 1;
    if d == 0 {
        return true;
    }
    if d == 1 {
        out.push(f.neg(g[0]));
        return true;
    }
    if depth > 128 {
        return false;
    }
    for _ in 0..128 {
        let c = rng.next_below(f.p);
        // (x + c)^((p-1)/2) - 1 shares a nontrivial factor with g unless the
        // shift is unlucky; all roots of g are simple and in F_p^*.
        let h = poly_powmod(f, &[c, 1], (f.p - 1) / 2, &g);
        let d1 = poly_gcd(f, poly_sub_const(f, h, 1), g.clone());
        let split = d1.len() - 1;
        if split > 0 && split < d {
            let other = poly_div_exact(f, &g, &d1);
            return split_linear(f, d1, rng, out, depth + 1)
                && split_linear(f, poly_monic(f, other), rng, out, depth + 1);
        }
    }
    false
}

/// Solves `Σ_l v_l · x_l^(r+1) = s_r` for `r = 0..e-1` by Gaussian
/// elimination; the generalized Vandermonde system is nonsingular for
/// distinct nonzero locators, so `None` only arises from corrupt inputs.
fn solve_vandermonde(f: &Fp, locators: &[u64], rhs: &[u64]) -> Option<Vec<u64>> {
    let e = locators.len();
    debug_assert_eq!(rhs.len(), e);
    let mut aug = vec![vec![0u64; e + 1]; e];
    for (r, row) in aug.iter_mut().enumerate() {
        for (l, &x) in locators.iter().enumerate() {
            row[l] = f.pow(x, r as u64 + 1);
        }
        row[e] = rhs[r];
    }
    for col in 0..e {
        let pivot = (col..e).find(|&r| aug[r][col] != 0)?;
        aug.swap(col, pivot);
        let inv = f.inv(aug[col][col]);
        for j in col..=e {
            aug[col][j] = f.mul(aug[col][j], inv);
        }
        for r in 0..e {
            if r != col && aug[r][col] != 0 {
                let factor = aug[r][col];
                for j in col..=e {
                    let t = f.mul(factor, aug[col][j]);
                    aug[r][j] = f.sub(aug[r][j], t);
                }
            }
        }
    }
    Some(aug.iter().map(|row| row[e]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::mix2 as rmix2;

    fn sparse(n: usize, entries: &[(usize, i8)]) -> SignedSparse {
        SignedSparse::new(n, entries.to_vec()).unwrap()
    }

    #[test]
    fn row_formula_examples() {
        let s = RecoveryScheme::new(9, 1, Backend::Gf3Brute, 7).unwrap();
        assert_eq!(s.rows(), 7); // 2 + ceil(log3 36) + 1
        assert_eq!(s.field_order(), 3);
        assert_eq!(s.scheme_bit_size(), 16); // ceil(7/5) * 8

        let s = RecoveryScheme::new(18, 2, Backend::Gf3Brute, 1).unwrap();
        assert_eq!(s.rows(), 13); // 4 + ceil(log3 3060) + 1

        let s = RecoveryScheme::new(1024, 64, Backend::RsSyndrome, 3).unwrap();
        assert_eq!(s.rows(), 128);
        assert_eq!(s.field_order(), 1031);
        assert_eq!(s.scheme_bit_size(), 128 * 11);
    }

    #[test]
    fn rows_always_positive() {
        for n in [2usize, 3, 9, 64, 1000] {
            for s_max in 1..=(n / 2).min(6) {
                for backend in [Backend::Gf3Brute, Backend::RsSyndrome] {
                    let s = RecoveryScheme::new(n, s_max, backend, 0).unwrap();
                    assert!(s.rows() >= 1);
                }
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            RecoveryScheme::new(9, 0, Backend::Gf3Brute, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            RecoveryScheme::new(9, 5, Backend::Gf3Brute, 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            RecoveryScheme::new(0, 1, Backend::RsSyndrome, 0),
            Err(Error::Parameter(_))
        ));
        // s_max = n/2 is the boundary and is allowed.
        assert!(RecoveryScheme::new(8, 4, Backend::RsSyndrome, 0).is_ok());
    }

    /// The derived example: the seed-7 scheme at (n=9, s_max=1) separates all
    /// ≤2-sparse signed vectors — no ≤2-sparse kernel vector exists — so
    /// brute recovery is exact there.
    #[test]
    fn gf3_seed7_kernel_scan() {
        let s = RecoveryScheme::new(9, 1, Backend::Gf3Brute, 7).unwrap();
        let mut buf = vec![0u64; s.rows()];
        let mut checked = 0;
        // Weight 1: c·e_i for c in GF(3)*.
        for i in 0..9 {
            for v in [1i8, -1] {
                buf.iter_mut().for_each(|x| *x = 0);
                s.accumulate(&mut buf, i, v).unwrap();
                assert!(buf.iter().any(|&x| x != 0), "kernel vector at ({i},{v})");
                checked += 1;
            }
        }
        // Weight 2: all sign patterns on distinct index pairs.
        for i in 0..9 {
            for j in i + 1..9 {
                for vi in [1i8, -1] {
                    for vj in [1i8, -1] {
                        buf.iter_mut().for_each(|x| *x = 0);
                        s.accumulate(&mut buf, i, vi).unwrap();
                        s.accumulate(&mut buf, j, vj).unwrap();
                        assert!(
                            buf.iter().any(|&x| x != 0),
                            "kernel vector at ({i},{vi}),({j},{vj})"
                        );
                        checked += 1;
                    }
                }
            }
        }
        assert_eq!(checked, 18 + 36 * 4);
        // And the concrete single recovery from the example: encode(+e3).
        let w = sparse(9, &[(3, 1)]);
        let syn = s.encode_syndrome(&w).unwrap();
        assert_eq!(s.recover(&syn).unwrap(), w);
    }

    #[test]
    fn gf3_roundtrip_all_one_sparse() {
        let s = RecoveryScheme::new(9, 1, Backend::Gf3Brute, 7).unwrap();
        // All 19 vectors with weight ≤ 1.
        assert_eq!(s.recover(&s.zero_syndrome()).unwrap(), SignedSparse::zero(9));
        for i in 0..9 {
            for v in [1i8, -1] {
                let w = sparse(9, &[(i, v)]);
                let syn = s.encode_syndrome(&w).unwrap();
                assert_eq!(s.recover(&syn).unwrap(), w, "index {i} value {v}");
            }
        }
    }

    #[test]
    fn rs_roundtrip_exhaustive_small() {
        let s = RecoveryScheme::new(10, 2, Backend::RsSyndrome, 5).unwrap();
        assert_eq!(s.field_order(), 11);
        let mut cases = 0;
        for i in 0..10 {
            for vi in [1i8, -1] {
                let w = sparse(10, &[(i, vi)]);
                let syn = s.encode_syndrome(&w).unwrap();
                assert_eq!(s.recover(&syn).unwrap(), w);
                for j in i + 1..10 {
                    for vj in [1i8, -1] {
                        let w = sparse(10, &[(i, vi), (j, vj)]);
                        let syn = s.encode_syndrome(&w).unwrap();
                        assert_eq!(s.recover(&syn).unwrap(), w);
                        cases += 1;
                    }
                }
            }
        }
        assert_eq!(cases, 4 * 45);
    }

    #[test]
    fn rs_overload_is_detected_or_corrected() {
        // 3-sparse inputs against an s_max=1 scheme: never a silent error.
        let s = RecoveryScheme::new(32, 1, Backend::RsSyndrome, 11).unwrap();
        let mut rng = DetRng::new(99);
        for _ in 0..500 {
            let idx = rng.sample_distinct(32, 3);
            let entries: Vec<(usize, i8)> = idx
                .into_iter()
                .map(|i| (i, if rng.next_u64() & 1 == 0 { 1 } else { -1 }))
                .collect();
            let w = SignedSparse::new(32, entries).unwrap();
            let syn = s.encode_syndrome(&w).unwrap();
            match s.recover(&syn) {
                Err(Error::DecodeFailure) => {}
                Ok(got) => {
                    assert!(got.weight() <= 1);
                    assert_eq!(s.encode_syndrome(&got).unwrap(), syn);
                }
                Err(e) => panic!("unexpected error {e:?}"),
            }
        }
    }

    #[test]
    fn linearity_on_disjoint_supports() {
        for backend in [Backend::Gf3Brute, Backend::RsSyndrome] {
            let s = RecoveryScheme::new(24, 2, backend, 17).unwrap();
            let f = Fp::new(s.field_order());
            let mut rng = DetRng::new(4);
            for _ in 0..50 {
                let idx = rng.sample_distinct(24, 4);
                let w1 = sparse(24, &[(idx[0], 1), (idx[2], -1)]);
                let w2 = sparse(24, &[(idx[1], -1), (idx[3], 1)]);
                let sum = sparse(24, &[(idx[0], 1), (idx[2], -1), (idx[1], -1), (idx[3], 1)]);
                let s1 = s.encode_syndrome(&w1).unwrap();
                let s2 = s.encode_syndrome(&w2).unwrap();
                let s12 = s.encode_syndrome(&sum).unwrap();
                let added: Vec<u64> = s1.iter().zip(&s2).map(|(&a, &b)| f.add(a, b)).collect();
                assert_eq!(added, s12);
            }
        }
    }

    #[test]
    fn determinism_and_matrix_entries() {
        let a = RecoveryScheme::new(64, 3, Backend::Gf3Brute, 123).unwrap();
        let b = RecoveryScheme::new(64, 3, Backend::Gf3Brute, 123).unwrap();
        let c = RecoveryScheme::new(64, 3, Backend::Gf3Brute, 124).unwrap();
        let mut same = true;
        let mut diff = false;
        for r in 0..a.rows() {
            for i in 0..64 {
                same &= a.matrix_entry(r, i) == b.matrix_entry(r, i);
                diff |= a.matrix_entry(r, i) != c.matrix_entry(r, i);
                assert!(a.matrix_entry(r, i) < 3);
            }
        }
        assert!(same);
        assert!(diff);
        // RS entries are the power sums regardless of seed.
        let r = RecoveryScheme::new(10, 1, Backend::RsSyndrome, 0).unwrap();
        assert_eq!(r.matrix_entry(0, 4), 5); // 5^1
        assert_eq!(r.matrix_entry(1, 4), 3); // 5^2 mod 11
    }

    #[test]
    fn scheme_serialization_roundtrip() {
        for backend in [Backend::Gf3Brute, Backend::RsSyndrome] {
            let s = RecoveryScheme::new(100, 4, backend, 42).unwrap();
            let bytes = s.to_bytes();
            assert_eq!(bytes.len(), SCHEME_WIRE_BYTES);
            assert_eq!(RecoveryScheme::from_bytes(&bytes).unwrap(), s);
        }
        // Corruption is rejected.
        let s = RecoveryScheme::new(100, 4, Backend::RsSyndrome, 42).unwrap();
        let mut bytes = s.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(RecoveryScheme::from_bytes(&bytes), Err(Error::Format(_))));
        let mut bytes = s.to_bytes();
        bytes[5] = 9;
        assert!(matches!(RecoveryScheme::from_bytes(&bytes), Err(Error::Format(_))));
        let mut bytes = s.to_bytes();
        bytes[14] = 200; // s_max larger than n/2
        assert!(matches!(RecoveryScheme::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(matches!(RecoveryScheme::from_bytes(&[]), Err(Error::Format(_))));
    }

    #[test]
    fn signed_sparse_validation() {
        assert!(SignedSparse::new(4, vec![(0, 1), (0, -1)]).is_err());
        assert!(SignedSparse::new(4, vec![(4, 1)]).is_err());
        assert!(SignedSparse::new(4, vec![(1, 2)]).is_err());
        let w = SignedSparse::new(4, vec![(3, 1), (1, -1)]).unwrap();
        assert_eq!(w.entries(), &[(1, -1), (3, 1)]);
        assert_eq!(w.weight(), 2);
    }

    #[test]
    fn recover_rejects_bad_shapes() {
        let s = RecoveryScheme::new(16, 2, Backend::RsSyndrome, 0).unwrap();
        assert!(matches!(s.recover(&[0; 3]), Err(Error::Dimension(_))));
        let mut syn = s.zero_syndrome();
        syn[0] = s.field_order(); // out of field
        assert!(matches!(s.recover(&syn), Err(Error::Dimension(_))));
    }

    #[test]
    fn berlekamp_massey_known_sequence() {
        // Sequence from w = +e2 - e7 in F_11 (locators 3 and 8):
        // s_r = 3^r - 8^r.
        let f = Fp::new(11);
        let s: Vec<u64> = (1..=4u64)
            .map(|r| f.sub(f.pow(3, r), f.pow(8, r)))
            .collect();
        let lambda = berlekamp_massey(&f, &s);
        assert_eq!(lambda.len(), 3); // degree 2
        // Λ(x) = (1 - 3x)(1 - 8x) = 1 - 11x + 24x^2 = 1 + 0x + 2x^2 mod 11.
        assert_eq!(lambda, vec![1, 0, 2]);
    }

    #[test]
    fn split_seed_differs_from_matrix_seed() {
        // Regression guard for domain separation.
        assert_ne!(rmix2(1, domain::SCHEME), rmix2(1, domain::SPLIT));
    }
}
