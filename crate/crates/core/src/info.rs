//! Exact numerical verification of the information-theoretic facts the
//! adaptive codecs lean on.
//!
//! Everything here is a finite-table computation — no sampling: joint
//! distributions are explicit pmf tables, predicates explicit 0/1 tables,
//! and each checker returns the two sides of its inequality together with a
//! `holds` verdict at 1e-9 tolerance.
//!
//! The adaptivity bound ([`check_adaptivity_bound`]) controls how much a
//! rare event can become likely under adaptively chosen inputs: for uniform
//! `X` and any `Y`, if every fixed `y` satisfies `Pr(f(X,y)=1) ≤ δ`, then
//! `q = Pr(f(X,Y)=1)` obeys `q·log₂(1/δ) ≤ I(X;Y) + H₂(q)`. (The `H₂` term
//! must take the achieved probability `q`, not `δ`: the underlying encoding
//! argument spends a flag bit whose expected cost is `H₂(Pr(flag))`, and the
//! identity-mixture example below is a witness — with `q ≈ 1/2` an `H₂(δ)`
//! numerator would be violated while the `H₂(q)` form is tight to 4 decimal
//! places.)

use crate::error::Error;
use crate::rng::{domain, DetRng};
use crate::stats::log2_binomial;
use crate::Result;

/// `H₂(p) = −p·log₂p − (1−p)·log₂(1−p)`, with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0,1]")));
    }
    let half = |q: f64| if q == 0.0 { 0.0 } else { -q * q.log2() };
    Ok(half(p) + half(1.0 - p))
}

/// `H(p) = −Σ p_i·log₂ p_i` of any sub-pmf (zeros skipped).
pub fn shannon_entropy(pmf: &[f64]) -> f64 {
    pmf.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

const PMF_TOLERANCE: f64 = 1e-12;
const CHECK_TOLERANCE: f64 = 1e-9;

/// A finite joint pmf of `(X, Y)` with `|X|` rows and `|Y|` columns.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    /// Row-major `p(x, y)`.
    pmf: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, pmf: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || pmf.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "pmf table of {} entries does not fill {rows}×{cols}",
                pmf.len()
            )));
        }
        if pmf.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Domain("pmf entries must be nonnegative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::Domain(format!("pmf sums to {total}, not 1")));
        }
        Ok(JointDistribution { rows, cols, pmf })
    }

    /// Uniform `X` on `[n]`; `Y = X` with probability `p`, otherwise an
    /// independent uniform draw. The equality predicate on this pair is the
    /// standard witness that adaptivity bounds must charge for the achieved
    /// hit probability.
    pub fn identity_mixture(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("bad mixture: n = {n}, p = {p}")));
        }
        let nf = n as f64;
        let off = (1.0 - p) / nf / nf;
        let diag = p / nf + off;
        let mut pmf = vec![off; n * n];
        for x in 0..n {
            pmf[x * n + x] = diag;
        }
        // Dyadic-friendly construction still accumulates float error for
        // general p; renormalize so the validator's 1e-12 gate is honest.
        let total: f64 = pmf.iter().sum();
        for q in &mut pmf {
            *q /= total;
        }
        JointDistribution::new(n, n, pmf)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn p(&self, x: usize, y: usize) -> f64 {
        self.pmf[x * self.cols + y]
    }

    pub fn x_marginal(&self) -> Vec<f64> {
        (0..self.rows).map(|x| self.pmf[x * self.cols..(x + 1) * self.cols].iter().sum()).collect()
    }

    pub fn y_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for x in 0..self.rows {
            for (y, slot) in out.iter_mut().enumerate() {
                *slot += self.p(x, y);
            }
        }
        out
    }

    /// `I(X;Y) = Σ p(x,y)·log₂(p(x,y)/(p(x)p(y)))` in bits, clamped at 0
    /// against rounding on (near-)independent tables.
    pub fn mutual_information(&self) -> f64 {
        let px = self.x_marginal();
        let py = self.y_marginal();
        let mut bits = 0.0;
        for x in 0..self.rows {
            for y in 0..self.cols {
                let p = self.p(x, y);
                if p > 0.0 {
                    bits += p * (p / (px[x] * py[y])).log2();
                }
            }
        }
        bits.max(0.0)
    }
}

/// A 0/1 predicate `f(x, y)` tabulated over the same supports.
#[derive(Debug, Clone)]
pub struct PredicateTable {
    rows: usize,
    cols: usize,
    table: Vec<bool>,
}

impl PredicateTable {
    pub fn new(rows: usize, cols: usize, table: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 || table.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "predicate table of {} entries does not fill {rows}×{cols}",
                table.len()
            )));
        }
        Ok(PredicateTable { rows, cols, table })
    }

    /// The equality predicate on `[n] × [n]`.
    pub fn equality(n: usize) -> Self {
        let mut table = vec![false; n * n];
        for x in 0..n {
            table[x * n + x] = true;
        }
        PredicateTable { rows: n, cols: n, table }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn value(&self, x: usize, y: usize) -> bool {
        self.table[x * self.cols + y]
    }

    /// `Pr(f(X,y) = 1)` under uniform `X`, per column.
    pub fn column_means(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|y| {
                (0..self.rows).filter(|&x| self.value(x, y)).count() as f64 / self.rows as f64
            })
            .collect()
    }
}

/// Both sides of the adaptivity bound on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptivityRecord {
    /// `Pr(f(X,Y) = 1)` under the joint table.
    pub lhs: f64,
    /// `(I(X;Y) + H₂(lhs)) / log₂(1/δ)`.
    pub rhs: f64,
    /// `max_y Pr(f(X,y) = 1)` under uniform `X`.
    pub delta: f64,
    pub mutual_information: f64,
    pub holds: bool,
}

/// Evaluates the adaptivity bound exactly. Errors with
/// [`Error::Hypothesis`] when the bound's preconditions are violated — a
/// non-uniform `X` marginal or a sure column (`δ = 1`) — so misuse is never
/// reported as a counterexample.
pub fn check_adaptivity_bound(
    f: &PredicateTable,
    d: &JointDistribution,
) -> Result<AdaptivityRecord> {
    if f.rows() != d.rows() || f.cols() != d.cols() {
        return Err(Error::Dimension(format!(
            "predicate is {}×{}, distribution is {}×{}",
            f.rows(),
            f.cols(),
            d.rows(),
            d.cols()
        )));
    }
    let uniform = 1.0 / d.rows() as f64;
    if d.x_marginal().iter().any(|&p| (p - uniform).abs() > CHECK_TOLERANCE) {
        return Err(Error::Hypothesis("X marginal is not uniform".into()));
    }
    let delta = f.column_means().into_iter().fold(0.0f64, f64::max);
    if delta >= 1.0 {
        return Err(Error::Hypothesis(
            "some column is all ones (δ = 1): the bound is vacuous".into(),
        ));
    }
    let mut lhs = 0.0;
    for x in 0..d.rows() {
        for y in 0..d.cols() {
            if f.value(x, y) {
                lhs += d.p(x, y);
            }
        }
    }
    let mutual_information = d.mutual_information();
    if delta == 0.0 {
        // f ≡ 0 on every column, so lhs = 0 and any positive budget covers it.
        return Ok(AdaptivityRecord {
            lhs,
            rhs: f64::INFINITY,
            delta,
            mutual_information,
            holds: true,
        });
    }
    let rhs = (mutual_information + binary_entropy(lhs)?) / (1.0 / delta).log2();
    Ok(AdaptivityRecord { lhs, rhs, delta, mutual_information, holds: lhs <= rhs + CHECK_TOLERANCE })
}

/// A seeded instance for the adaptivity sweep: a uniform-`X` joint with
/// random conditionals (`2 ≤ |X| ≤ 16`, `1 ≤ |Y| ≤ 16`) and a random
/// predicate, with sure columns broken so the hypothesis always holds.
pub fn random_adaptivity_instance(seed: u64) -> (PredicateTable, JointDistribution) {
    let mut rng = DetRng::for_domain(seed, domain::TRIAL);
    let rows = 2 + rng.next_below(15) as usize;
    let cols = 1 + rng.next_below(16) as usize;
    let mut pmf = vec![0.0f64; rows * cols];
    for x in 0..rows {
        let row = &mut pmf[x * cols..(x + 1) * cols];
        for p in row.iter_mut() {
            *p = rng.next_f64() + 1e-3;
        }
        let row_total: f64 = row.iter().sum();
        for p in row.iter_mut() {
            *p /= row_total * rows as f64;
        }
    }
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    let mut table: Vec<bool> = (0..rows * cols).map(|_| rng.next_u64() & 1 == 1).collect();
    for y in 0..cols {
        if (0..rows).all(|x| table[x * cols + y]) {
            let x = rng.next_below(rows as u64) as usize;
            table[x * cols + y] = false;
        }
    }
    (
        PredicateTable::new(rows, cols, table).expect("shape is consistent"),
        JointDistribution::new(rows, cols, pmf).expect("normalized by construction"),
    )
}

/// The truncated product and its cap for one decay constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PochhammerRecord {
    /// Certified upper estimate of `∏_{j≥1} 1/(1 − 2^{−j/K})`.
    pub product: f64,
    /// `2^{5K}`.
    pub bound: f64,
    pub terms_used: usize,
    pub holds: bool,
}

/// Bounds the infinite product `∏_{j≥1} 1/(1 − 2^{−j/K})` — the masking
/// overhead constant — by `2^{5K}`. Terms are multiplied until they fall
/// within 1e-15 of 1, then the remainder is absorbed by the analytic cap
/// `exp(2·Σ_{j>J} 2^{−j/K})`, valid because `1/(1−x) ≤ e^{2x}` on the whole
/// tail (every remaining `x` is far below 1/2).
pub fn check_pochhammer(k: usize) -> Result<PochhammerRecord> {
    if k == 0 {
        return Err(Error::Parameter("decay constant K must be positive".into()));
    }
    let ratio = (-1.0 / k as f64).exp2();
    let mut product = 1.0f64;
    let mut x = ratio; // 2^{-j/K}
    let mut terms_used = 0usize;
    loop {
        let term = 1.0 / (1.0 - x);
        if term - 1.0 < 1e-15 {
            break;
        }
        product *= term;
        terms_used += 1;
        x *= ratio;
    }
    // x is now 2^{-(J+1)/K}; the geometric tail sums to x/(1-ratio).
    let tail_cap = (2.0 * x / (1.0 - ratio)).exp();
    product *= tail_cap;
    let bound = (5.0 * k as f64).exp2();
    Ok(PochhammerRecord { product, bound, terms_used, holds: product <= bound })
}

/// Both sides of the source-coding savings bound on one `W` distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct BitsSavingRecord {
    /// `E(log₂C(n,m) − log₂C(n,W))`.
    pub lhs: f64,
    /// `(m − EW)·log₂(n/m − 1)`.
    pub rhs: f64,
    pub holds: bool,
}

/// Verifies that replacing an `m`-subset code by a `W`-subset code saves at
/// least `log₂(n/m − 1)` bits per deferred element, exactly over the given
/// pmf of `W` (indexed `0..=len-1`; any mass above `m` is a domain error).
pub fn check_bits_saving(n: usize, m: usize, w_pmf: &[f64]) -> Result<BitsSavingRecord> {
    if m == 0 || m >= n {
        return Err(Error::Parameter(format!("need 1 ≤ m < n, got m = {m}, n = {n}")));
    }
    if w_pmf.is_empty() || w_pmf.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Domain("pmf must be nonempty and nonnegative".into()));
    }
    let total: f64 = w_pmf.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::Domain(format!("pmf sums to {total}, not 1")));
    }
    if w_pmf.iter().enumerate().any(|(w, &p)| w > m && p > 0.0) {
        return Err(Error::Domain(format!("pmf has mass above m = {m}")));
    }
    let base = log2_binomial(n as u64, m as u64);
    let mut lhs = 0.0;
    let mut expected_w = 0.0;
    for (w, &p) in w_pmf.iter().enumerate() {
        if p > 0.0 {
            lhs += p * (base - log2_binomial(n as u64, w as u64));
            expected_w += p * w as f64;
        }
    }
    let rhs = (m as f64 - expected_w) * (n as f64 / m as f64 - 1.0).log2();
    Ok(BitsSavingRecord { lhs, rhs, holds: lhs >= rhs - CHECK_TOLERANCE })
}

/// A seeded instance for the savings sweep: `n ≤ 200`, `1 ≤ m < n`, and a
/// random pmf supported on `0..=m`.
pub fn random_bits_saving_instance(seed: u64) -> (usize, usize, Vec<f64>) {
    let mut rng = DetRng::for_domain(seed, domain::TRIAL);
    let n = 2 + rng.next_below(199) as usize;
    let m = 1 + rng.next_below(n as u64 - 1) as usize;
    let mut pmf: Vec<f64> = (0..=m).map(|_| rng.next_f64() + 1e-3).collect();
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    (n, m, pmf)
}
