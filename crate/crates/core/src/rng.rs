//! Deterministic randomness.
//!
//! Every random choice in this crate is derived from explicit `u64` seeds via
//! a counter-mode mixer, so identical parameters give bit-identical schemes,
//! messages and transcripts on every platform and in every release. Nothing
//! here is cryptographic; the mixer is the standard splitmix64 finalizer,
//! which is more than enough statistical quality for subsampling and
//! Fisher–Yates shuffles at desk scale.

/// splitmix64 finalizer: a fixed bijection on `u64` with good avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes two words into one; used for (seed, index) derivations.
#[inline]
pub fn mix2(a: u64, b: u64) -> u64 {
    mix64(a.wrapping_mul(0xd6e8_feb8_6659_fd93).wrapping_add(mix64(b)))
}

/// Mixes three words; used for (seed, row, column) matrix entries.
#[inline]
pub fn mix3(a: u64, b: u64, c: u64) -> u64 {
    mix2(mix2(a, b), c)
}

/// Domain-separation tags so unrelated derivations from one user seed never
/// collide. Arbitrary fixed odd constants.
pub mod domain {
    pub const SCHEME: u64 = 0x5343_4845_4d45_0001;
    pub const LEVELS: u64 = 0x4c45_5645_4c53_0003;
    pub const SIGMA: u64 = 0x5349_474d_4100_0005;
    pub const PRIORITY: u64 = 0x5052_494f_5249_0007;
    pub const CHAIN: u64 = 0x4348_4149_4e00_0009;
    pub const FAMILY: u64 = 0x4641_4d49_4c59_000b;
    pub const BIJECTION: u64 = 0x4249_4a45_4354_000d;
    pub const TRIAL: u64 = 0x5452_4941_4c00_000f;
    pub const SPLIT: u64 = 0x5350_4c49_5400_0011;
}

/// Small deterministic generator: splitmix64 in counter mode.
#[derive(Debug, Clone)]
pub struct DetRng {
    state: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng { state: seed }
    }

    /// Derives a generator for a named subcomputation of `seed`.
    pub fn for_domain(seed: u64, tag: u64) -> Self {
        DetRng::new(mix2(seed, tag))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform draw from `0..bound` without modulo bias (rejection on the
    /// wrap-around remainder), `bound > 0`.
    #[inline]
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `k` distinct values from `0..n`, ascending. Uses a partial shuffle for
    /// dense draws and rejection for sparse ones.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        if k * 3 >= n {
            let mut all: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = i + self.next_below((n - i) as u64) as usize;
                all.swap(i, j);
            }
            let mut out = all[..k].to_vec();
            out.sort_unstable();
            out
        } else {
            let mut seen = std::collections::BTreeSet::new();
            while seen.len() < k {
                seen.insert(self.next_below(n as u64) as usize);
            }
            seen.into_iter().collect()
        }
    }
}

/// A permutation of `0..n` with O(1) forward and inverse application.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    /// Identity on `0..n`.
    pub fn identity(n: usize) -> Self {
        let forward: Vec<u32> = (0..n as u32).collect();
        Permutation {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Uniform permutation of `0..n` by a seeded Fisher–Yates shuffle.
    pub fn random(n: usize, seed: u64) -> Self {
        assert!(n <= u32::MAX as usize, "universe too large for permutation");
        let mut rng = DetRng::new(seed);
        let mut forward: Vec<u32> = (0..n as u32).collect();
        for i in (1..n).rev() {
            let j = rng.next_below((i + 1) as u64) as usize;
            forward.swap(i, j);
        }
        let mut inverse = vec![0u32; n];
        for (i, &f) in forward.iter().enumerate() {
            inverse[f as usize] = i as u32;
        }
        Permutation { forward, inverse }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.forward[i] as usize
    }

    #[inline]
    pub fn invert(&self, i: usize) -> usize {
        self.inverse[i] as usize
    }

    /// Overrides the image of `i` (used when re-drawing part of a bijection
    /// while holding the rest fixed). Caller must keep the map a bijection.
    pub fn set_image(&mut self, i: usize, image: usize) {
        self.forward[i] = image as u32;
        self.inverse[image] = i as u32;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix64_is_stable() {
        // Frozen outputs: these must never change, or every seeded artifact
        // in the crate silently changes with them.
        assert_eq!(mix64(0), 0xe220a8397b1dcdaf);
        assert_eq!(mix64(1), 0x910a2dec89025cc1);
        assert_eq!(mix64(0xdeadbeef), 0x4adfb90f68c9eb9b);
    }

    #[test]
    fn det_rng_matches_mix_stream() {
        let mut rng = DetRng::new(7);
        let a = rng.next_u64();
        let b = rng.next_u64();
        assert_ne!(a, b);
        let mut rng2 = DetRng::new(7);
        assert_eq!(rng2.next_u64(), a);
        assert_eq!(rng2.next_u64(), b);
    }

    #[test]
    fn next_below_is_in_range_and_hits_all_residues() {
        let mut rng = DetRng::new(42);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.next_below(7) as usize;
            assert!(v < 7);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn permutation_roundtrips() {
        let p = Permutation::random(257, 99);
        for i in 0..257 {
            assert_eq!(p.invert(p.apply(i)), i);
        }
        let mut hit = vec![false; 257];
        for i in 0..257 {
            hit[p.apply(i)] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn permutation_is_seed_deterministic() {
        let a = Permutation::random(64, 5);
        let b = Permutation::random(64, 5);
        let c = Permutation::random(64, 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_distinct_both_regimes() {
        let mut rng = DetRng::new(11);
        let dense = rng.sample_distinct(10, 9);
        assert_eq!(dense.len(), 9);
        assert!(dense.windows(2).all(|w| w[0] < w[1]));
        let sparse = rng.sample_distinct(10_000, 5);
        assert_eq!(sparse.len(), 5);
        assert!(sparse.windows(2).all(|w| w[0] < w[1]));
        assert!(sparse.iter().all(|&v| v < 10_000));
    }
}
