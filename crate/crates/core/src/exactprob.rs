//! Exact randomness: every accept/reject decision in the samplers is a
//! comparison against an exact rational, driven by a seedable bit stream.
//!
//! The bit stream is ChaCha8 (`rand_chacha`), seeded through
//! `SeedableRng::seed_from_u64`. Worker streams for parallel sampling use
//! the ChaCha stream id, so `(seed, worker)` fully determines the output.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Builds `num / den` as a reduced rational.
pub fn ratio(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Rational {
    Rational::new(num.into().into(), den.into().into())
}

pub fn rational_from(x: impl Into<BigUint>) -> Rational {
    Rational::from_integer(x.into().into())
}

/// Seedable source of uniform bits.
#[derive(Debug, Clone)]
pub struct BitSource {
    rng: ChaCha8Rng,
    seed: u64,
}

impl BitSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Independent stream `stream` for the same seed (used per worker).
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `0..k` by masked rejection. `k` must be positive.
    pub fn below(&mut self, k: u64) -> u64 {
        assert!(k > 0, "below(0)");
        if k == 1 {
            return 0;
        }
        let bits = 64 - (k - 1).leading_zeros();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        loop {
            let x = self.next_u64() & mask;
            if x < k {
                return x;
            }
        }
    }

    pub fn below_usize(&mut self, k: usize) -> usize {
        self.below(k as u64) as usize
    }

    /// Uniform on `0..k` for arbitrary-precision `k >= 1`: draws
    /// `ceil(log2 k)` bits and rejects values `>= k`.
    pub fn uniform_below(&mut self, k: &BigUint) -> BigUint {
        assert!(!k.is_zero(), "uniform_below(0)");
        if let Some(small) = k.to_u64() {
            return BigUint::from(self.below(small));
        }
        let bits = (k - 1u32).bits();
        let words = bits.div_ceil(64) as usize;
        let top_bits = bits - 64 * (words as u64 - 1);
        let top_mask = if top_bits == 64 {
            u64::MAX
        } else {
            (1u64 << top_bits) - 1
        };
        let mut digits = vec![0u64; words];
        loop {
            for d in digits.iter_mut() {
                *d = self.next_u64();
            }
            digits[words - 1] &= top_mask;
            let x = BigUint::from_slice(&to_u32_digits(&digits));
            if &x < k {
                return x;
            }
        }
    }

    /// True with probability exactly `p`.
    pub fn bernoulli(&mut self, p: &Rational) -> Result<bool> {
        if p.is_negative() || p > &Rational::one() {
            return Err(Error::ProbabilityOutOfRange(p.to_string()));
        }
        if p.is_zero() {
            return Ok(false);
        }
        if p.is_one() {
            return Ok(true);
        }
        let bound = Boundary::from_rational(p);
        Ok(self.locate(std::slice::from_ref(&bound)) == 0)
    }

    /// Index `i` with probability `probs[i]`; `None` (the residual) with
    /// probability `1 - sum(probs)`.
    pub fn categorical(&mut self, probs: &[Rational]) -> Result<Option<usize>> {
        let bounds = cumulative(probs)?;
        let i = self.locate(&bounds);
        Ok((i < probs.len()).then_some(i))
    }

    /// Index `i` with probability `weights[i] / sum(weights)`, via a single
    /// `uniform_below(sum)` draw.
    pub fn choose_weighted(&mut self, weights: &[BigUint]) -> Result<usize> {
        let total: BigUint = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::Infeasible);
        }
        let u = self.uniform_below(&total);
        Ok(bucket_of(weights, &u))
    }

    /// Same as [`choose_weighted`](Self::choose_weighted) for machine-word
    /// weights.
    pub fn choose_weighted_u64(&mut self, weights: &[u64]) -> usize {
        let total: u64 = weights.iter().sum();
        let mut u = self.below(total);
        for (i, &w) in weights.iter().enumerate() {
            if u < w {
                return i;
            }
            u -= w;
        }
        unreachable!("u < total")
    }

    /// Draws `U` uniform on `[0, 1)` lazily, 64 bits at a time, and returns
    /// the first `i` with `U < bounds[i]` (or `bounds.len()`). Bounds must be
    /// nondecreasing. Equivalent to drawing `u = uniform_below(D)` over a
    /// common denominator `D` and bucketing it, but only touches as many
    /// bits as are needed to separate `U` from the boundaries.
    fn locate(&mut self, bounds: &[Boundary]) -> usize {
        let mut words: Vec<u64> = Vec::with_capacity(2);
        let mut first_open = 0usize;
        loop {
            words.push(self.next_u64());
            match locate_interval(bounds, &words, first_open) {
                Located::Bucket(i) => return i,
                Located::Undecided(i) => first_open = i,
            }
        }
    }
}

fn to_u32_digits(words: &[u64]) -> Vec<u32> {
    words
        .iter()
        .flat_map(|&w| [w as u32, (w >> 32) as u32])
        .collect()
}

/// Bucket of `u` for cumulative weight intervals `[W_{i-1}, W_i)`.
pub fn bucket_of(weights: &[BigUint], u: &BigUint) -> usize {
    let mut acc = BigUint::zero();
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < &acc {
            return i;
        }
    }
    weights.len()
}

/// A cumulative probability `c = num / den` in `[0, 1]`, together with
/// `floor(c * 2^64)` so the first 64 random bits are compared without
/// big-integer arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundary {
    num: BigUint,
    den: BigUint,
    scaled: u128,
    exact: bool,
}

impl Boundary {
    /// Whether this boundary equals `num / den`.
    pub fn equals_ratio(&self, num: &BigUint, den: &BigUint) -> bool {
        &self.num * den == &self.den * num
    }

    pub fn from_rational(p: &Rational) -> Self {
        let num = p.numer().to_biguint().expect("nonnegative");
        let den = p.denom().to_biguint().expect("positive");
        let (q, r) = (&num << 64usize).div_rem(&den);
        let scaled = q.to_u128().expect("boundary above 1");
        Self {
            num,
            den,
            scaled,
            exact: r.is_zero(),
        }
    }
}

/// Prepared cumulative boundaries of a categorical distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Categorical {
    bounds: Vec<Boundary>,
}

impl Categorical {
    pub fn new(probs: &[Rational]) -> Result<Self> {
        Ok(Self {
            bounds: cumulative(probs)?,
        })
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

impl Boundary {
    /// `num / den` without normalization; requires `num <= den`, `den > 0`.
    pub fn from_ratio(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() || num > den {
            return Err(Error::ProbabilityOutOfRange(format!("{num}/{den}")));
        }
        let (q, r) = (&num << 64usize).div_rem(&den);
        Ok(Self {
            scaled: q.to_u128().expect("ratio at most 1"),
            exact: r.is_zero(),
            num,
            den,
        })
    }
}

impl BitSource {
    /// True with probability `bound`.
    pub fn bernoulli_prepared(&mut self, bound: &Boundary) -> bool {
        self.locate(std::slice::from_ref(bound)) == 0
    }

    /// Draws from a prepared distribution; `None` is the residual.
    pub fn draw(&mut self, dist: &Categorical) -> Option<usize> {
        let i = self.locate(&dist.bounds);
        (i < dist.bounds.len()).then_some(i)
    }
}

fn cumulative(probs: &[Rational]) -> Result<Vec<Boundary>> {
    let mut acc = Rational::zero();
    let mut out = Vec::with_capacity(probs.len());
    for p in probs {
        if p.is_negative() {
            return Err(Error::ProbabilityOutOfRange(p.to_string()));
        }
        acc += p;
        if acc > Rational::one() {
            return Err(Error::InvalidDistribution(acc.to_string()));
        }
        out.push(Boundary::from_rational(&acc));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Located {
    Bucket(usize),
    /// Boundaries before this index are known to lie at or below `U`.
    Undecided(usize),
}

/// Given the first `64 * words.len()` bits `w` of `U`, so that
/// `U` lies in `[w / 2^K, (w + 1) / 2^K)`, decide the bucket if the
/// interval does not straddle a boundary.
pub fn locate_interval(bounds: &[Boundary], words: &[u64], first_open: usize) -> Located {
    if words.len() > 1 {
        return locate_interval_big(bounds, words, first_open);
    }
    let w = u128::from(words[0]);
    for (i, bound) in bounds.iter().enumerate().skip(first_open) {
        // U < c for sure when w + 1 <= c 2^64; U >= c when w >= c 2^64
        if w + 1 <= bound.scaled {
            return Located::Bucket(i);
        }
        if w > bound.scaled || (w == bound.scaled && bound.exact) {
            continue;
        }
        return Located::Undecided(i);
    }
    Located::Bucket(bounds.len())
}

fn locate_interval_big(bounds: &[Boundary], words: &[u64], first_open: usize) -> Located {
    // words[0] holds the most significant bits
    let mut le: Vec<u64> = words.to_vec();
    le.reverse();
    let w = BigUint::from_slice(&to_u32_digits(&le));
    let shift = 64 * words.len();
    for (i, bound) in bounds.iter().enumerate().skip(first_open) {
        let x = &bound.num << shift;
        let lo = &w * &bound.den;
        if x <= lo {
            continue;
        }
        if x >= lo + &bound.den {
            return Located::Bucket(i);
        }
        return Located::Undecided(i);
    }
    Located::Bucket(bounds.len())
}

/// Exact test helper: `floor` and `ceil` for a nonnegative rational.
pub fn floor_ceil(p: &Rational) -> (BigUint, BigUint) {
    let num = p.numer().to_biguint().expect("nonnegative");
    let den = p.denom().to_biguint().expect("positive");
    let (q, r) = num.div_rem(&den);
    let c = if r.is_zero() { q.clone() } else { &q + 1u32 };
    (q, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: u64, b: u64) -> Rational {
        ratio(a, b)
    }

    #[test]
    fn below_one_is_zero() {
        let mut src = BitSource::new(1);
        for _ in 0..100 {
            assert!(src.uniform_below(&BigUint::one()).is_zero());
        }
    }

    #[test]
    fn uniform_below_range_for_huge_k() {
        let mut src = BitSource::new(2);
        let k = BigUint::from(10u32).pow(30);
        for _ in 0..2_000 {
            assert!(src.uniform_below(&k) < k);
        }
    }

    #[test]
    fn uniform_below_two_is_balanced() {
        let mut src = BitSource::new(3);
        let n = 100_000u64;
        let ones: u64 = (0..n)
            .map(|_| src.uniform_below(&BigUint::from(2u32)).to_u64().unwrap())
            .sum();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((ones as f64 - n as f64 / 2.0).abs() < 5.0 * sd, "ones = {ones}");
    }

    #[test]
    fn bernoulli_endpoints_and_range() {
        let mut src = BitSource::new(4);
        for _ in 0..1000 {
            assert!(!src.bernoulli(&Rational::zero()).unwrap());
            assert!(src.bernoulli(&Rational::one()).unwrap());
        }
        assert!(matches!(
            src.bernoulli(&q(3, 2)),
            Err(Error::ProbabilityOutOfRange(_))
        ));
        let neg = -Rational::one();
        assert!(src.bernoulli(&neg).is_err());
    }

    #[test]
    fn bernoulli_one_third_frequency() {
        let mut src = BitSource::new(5);
        let n = 300_000u64;
        let hits = (0..n).filter(|_| src.bernoulli(&q(1, 3)).unwrap()).count() as f64;
        let p = 1.0 / 3.0;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - n as f64 * p).abs() < 5.0 * sd, "hits = {hits}");
    }

    #[test]
    fn categorical_cases() {
        let mut src = BitSource::new(6);
        for _ in 0..100 {
            assert_eq!(src.categorical(&[Rational::one()]).unwrap(), Some(0));
            assert_eq!(src.categorical(&[]).unwrap(), None);
        }
        let n = 100_000u64;
        let probs = [q(1, 2), q(1, 4)];
        let residual = (0..n)
            .filter(|_| src.categorical(&probs).unwrap().is_none())
            .count() as f64;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        assert!((residual - n as f64 * 0.25).abs() < 5.0 * sd);
        assert!(matches!(
            src.categorical(&[q(2, 3), q(1, 2)]),
            Err(Error::InvalidDistribution(_))
        ));
    }

    #[test]
    fn bucket_of_counts_match_weights_exhaustively() {
        // every residue u in [0, total) lands in exactly weight-many slots
        for ws in [[3u32, 0, 5, 2], [1, 1, 1, 1], [0, 0, 7, 0]] {
            let weights: Vec<BigUint> = ws.iter().map(|&w| BigUint::from(w)).collect();
            let total: u32 = ws.iter().sum();
            let mut counts = [0u32; 4];
            for u in 0..total {
                counts[bucket_of(&weights, &BigUint::from(u))] += 1;
            }
            assert_eq!(counts, ws);
        }
    }

    /// Reference decision for the 64-bit interval `[w, w+1) / 2^64`.
    fn reference(num: u64, den: u64, w: u64) -> Located {
        let x = u128::from(num) << 64;
        let (lo, hi) = (u128::from(w) * u128::from(den), (u128::from(w) + 1) * u128::from(den));
        if hi <= x {
            Located::Bucket(0)
        } else if lo >= x {
            Located::Bucket(1)
        } else {
            Located::Undecided(0)
        }
    }

    #[test]
    fn interval_decisions_are_exact_near_every_boundary() {
        for den in 2..=200u64 {
            for num in 1..den {
                let p = q(num, den);
                let (n, d) = (
                    p.numer().to_u64().unwrap(),
                    p.denom().to_u64().unwrap(),
                );
                let bound = Boundary::from_rational(&p);
                let edge = ((u128::from(n) << 64) / u128::from(d)) as u64;
                for w in edge.saturating_sub(2)..=edge.saturating_add(2) {
                    let got = locate_interval(std::slice::from_ref(&bound), &[w], 0);
                    assert_eq!(got, reference(n, d, w), "p={p} w={w}");
                }
            }
        }
    }

    #[test]
    fn second_word_resolves_straddling_interval() {
        let p = q(1, 3);
        let bound = Boundary::from_rational(&p);
        let edge = u64::MAX / 3;
        assert_eq!(
            locate_interval(std::slice::from_ref(&bound), &[edge], 0),
            Located::Undecided(0)
        );
        // 1/3 = 0.010101..b, so the second word continues with 0x5555...
        let below = locate_interval(std::slice::from_ref(&bound), &[edge, 0x5555_5555_5555_5554], 0);
        let above = locate_interval(std::slice::from_ref(&bound), &[edge, 0x5555_5555_5555_5556], 0);
        assert_eq!(below, Located::Bucket(0));
        assert_eq!(above, Located::Bucket(1));
    }

    #[test]
    fn residue_bucketing_matches_numerator_exhaustively() {
        // choose_weighted with weights (a, D - a) succeeds on exactly a residues
        for den in [1u32, 2, 3, 10, 97, 1000, 9973, 10_000] {
            for num in [0, 1, den / 2, den - 1, den] {
                let weights = [BigUint::from(num), BigUint::from(den - num)];
                let hits = (0..den)
                    .filter(|&u| bucket_of(&weights, &BigUint::from(u)) == 0)
                    .count() as u32;
                assert_eq!(hits, num);
            }
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut s = BitSource::new(9);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut s = BitSource::new(9);
            (0..8).map(|_| s.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut s = BitSource::with_stream(9, 1);
            (0..8).map(|_| s.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
