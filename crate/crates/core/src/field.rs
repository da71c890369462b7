//! Scalar arithmetic for the two syndrome fields, plus payload packing.
//!
//! The brute-force recovery scheme works over GF(3); the syndrome scheme works
//! over F_p for the smallest prime p exceeding the universe size. Both are
//! represented as `u64` residues. GF(3) payloads pack five trits per byte
//! (3^5 = 243 ≤ 256), which is what makes the per-level message size come out
//! to ⌈rows/5⌉ bytes.

use crate::error::Error;
use crate::Result;

/// Smallest prime strictly greater than `n`. Trial division; the crate only
/// ever calls this once per scheme construction.
pub fn prime_above(n: u64) -> u64 {
    let mut c = n + 1;
    if c <= 2 {
        return 2;
    }
    if c % 2 == 0 {
        c += 1;
    }
    loop {
        if is_prime(c) {
            return c;
        }
        c += 2;
    }
}

fn is_prime(n: u64) -> bool {
    if n < 4 {
        return n >= 2;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut d = 5u64;
    while d * d <= n {
        if n % d == 0 || n % (d + 2) == 0 {
            return false;
        }
        d += 6;
    }
    true
}

/// Prime-field helpers. `p` is small enough that `u128` products never wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fp {
    pub p: u64,
}

impl Fp {
    pub fn new(p: u64) -> Self {
        debug_assert!(is_prime(p));
        Fp { p }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of `a != 0` via Fermat.
    #[inline]
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.p != 0);
        self.pow(a, self.p - 2)
    }
}

/// A vector of trits (values in {0,1,2}) with the canonical 5-per-byte packing.
///
/// Packing is little-endian in the trit index: byte `b` holds trits
/// `5b..5b+5` as `t0 + 3 t1 + 9 t2 + 27 t3 + 81 t4`. Unused positions in the
/// final byte must be zero, so packing is a bijection and `unpack ∘ pack` is
/// the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TritVector {
    trits: Vec<u8>,
}

impl TritVector {
    /// Builds from raw trit values, rejecting anything outside {0,1,2}.
    pub fn new(trits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = trits.iter().find(|&&t| t > 2) {
            return Err(Error::Parameter(format!("trit value {bad} out of range")));
        }
        Ok(TritVector { trits })
    }

    pub fn zeros(len: usize) -> Self {
        TritVector {
            trits: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.trits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trits.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.trits
    }

    /// Number of bytes the packed form occupies: ⌈len/5⌉.
    pub fn packed_len(len: usize) -> usize {
        len.div_ceil(5)
    }

    pub fn pack(&self) -> Vec<u8> {
        let mut out = vec![0u8; Self::packed_len(self.trits.len())];
        for (i, &t) in self.trits.iter().enumerate() {
            out[i / 5] += t * POW3[i % 5];
        }
        out
    }

    /// Inverse of [`pack`](Self::pack). Rejects bytes that encode a trit ≥ 3
    /// in any used position or anything nonzero in unused positions, so every
    /// accepted byte string is the packing of exactly one vector.
    pub fn unpack(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() != Self::packed_len(len) {
            return Err(Error::Format(format!(
                "packed trit payload has {} bytes, expected {}",
                bytes.len(),
                Self::packed_len(len)
            )));
        }
        let mut trits = vec![0u8; len];
        for (b, &byte) in bytes.iter().enumerate() {
            let mut rem = byte;
            let lo = b * 5;
            for i in lo..lo + 5 {
                let t = rem % 3;
                rem /= 3;
                if i < len {
                    trits[i] = t;
                } else if t != 0 {
                    return Err(Error::Format(
                        "nonzero padding trit in final byte".into(),
                    ));
                }
            }
            if rem != 0 {
                return Err(Error::Format(format!(
                    "byte {byte} at position {b} is not a valid trit pack"
                )));
            }
        }
        Ok(TritVector { trits })
    }
}

const POW3: [u8; 5] = [1, 3, 9, 27, 81];

/// Packs values of fixed bit-width `width` into bytes, little-endian in bit
/// order. Used for prime-field syndrome payloads (width = ⌈log2 p⌉).
pub fn pack_fixed_width(values: &[u64], width: u32) -> Vec<u8> {
    debug_assert!(width >= 1 && width <= 64);
    let total_bits = values.len() * width as usize;
    let mut out = vec![0u8; total_bits.div_ceil(8)];
    let mut bit = 0usize;
    for &v in values {
        debug_assert!(width == 64 || v < (1u64 << width));
        for b in 0..width as usize {
            if (v >> b) & 1 == 1 {
                out[(bit + b) / 8] |= 1 << ((bit + b) % 8);
            }
        }
        bit += width as usize;
    }
    out
}

/// Inverse of [`pack_fixed_width`]. `max_value` bounds each decoded value
/// (exclusive); out-of-range values and nonzero padding are format errors.
pub fn unpack_fixed_width(
    bytes: &[u8],
    width: u32,
    count: usize,
    max_value: u64,
) -> Result<Vec<u64>> {
    let total_bits = count * width as usize;
    if bytes.len() != total_bits.div_ceil(8) {
        return Err(Error::Format(format!(
            "packed payload has {} bytes, expected {}",
            bytes.len(),
            total_bits.div_ceil(8)
        )));
    }
    for tail in total_bits..bytes.len() * 8 {
        if (bytes[tail / 8] >> (tail % 8)) & 1 == 1 {
            return Err(Error::Format("nonzero padding bit".into()));
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut bit = 0usize;
    for _ in 0..count {
        let mut v = 0u64;
        for b in 0..width as usize {
            if (bytes[(bit + b) / 8] >> ((bit + b) % 8)) & 1 == 1 {
                v |= 1 << b;
            }
        }
        if v >= max_value {
            return Err(Error::Format(format!(
                "packed value {v} out of range (< {max_value})"
            )));
        }
        out.push(v);
        bit += width as usize;
    }
    Ok(out)
}
