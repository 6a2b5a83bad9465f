//! Exact probability distributions over fixed-length bit strings.
//!
//! A string `x = x_1 x_2 ... x_n` is encoded as an integer with `x_1` as the
//! most significant bit. Every module in the crate uses this convention; with
//! it, the strings sharing a prefix occupy a contiguous index range.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::condenser::CondenserMap;
use crate::error::{Error, Result};

/// Tolerance on total mass and on probability bounds.
pub const MASS_TOL: f64 = 1e-9;
/// Tolerance on entropy identities and entropy bounds.
pub const ENTROPY_TOL: f64 = 1e-6;
/// Default cap on the width of exactly represented distributions.
pub const DEFAULT_MAX_N: u32 = 20;
/// The cap can be raised with `SVC_MAX_N`, but never past this.
pub const HARD_MAX_N: u32 = 24;

/// Width limit for exact analysis: `SVC_MAX_N` if set (clamped to
/// [`HARD_MAX_N`]), else [`DEFAULT_MAX_N`]. Read once per process.
pub fn max_exact_n() -> u32 {
    static LIMIT: OnceLock<u32> = OnceLock::new();
    *LIMIT.get_or_init(|| {
        std::env::var("SVC_MAX_N")
            .ok()
            .and_then(|v| v.trim().parse::<u32>().ok())
            .map(|v| v.min(HARD_MAX_N))
            .unwrap_or(DEFAULT_MAX_N)
    })
}

pub(crate) fn check_width(n: u32) -> Result<()> {
    let max = max_exact_n();
    if n > max {
        return Err(Error::TooWide { n, max });
    }
    Ok(())
}

/// Compensated (Neumaier) summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A string of `len` bits, `len <= 24`. The empty string is allowed and
/// stands for the empty prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: u32,
    value: u32,
}

impl BitString {
    pub const MAX_LEN: u32 = HARD_MAX_N;

    pub fn new(len: u32, value: u32) -> Result<Self> {
        if len > Self::MAX_LEN {
            return Err(Error::InvalidBitString(format!(
                "length {len} exceeds {}",
                Self::MAX_LEN
            )));
        }
        if len < 32 && value >> len != 0 {
            return Err(Error::InvalidBitString(format!(
                "value {value} does not fit in {len} bits"
            )));
        }
        Ok(BitString { len, value })
    }

    pub fn empty() -> Self {
        BitString { len: 0, value: 0 }
    }

    pub fn zeros(len: u32) -> Result<Self> {
        Self::new(len, 0)
    }

    /// The unit vector `e_i` (1-indexed from the left); `e_0` is all zeros.
    pub fn unit(len: u32, i: u32) -> Result<Self> {
        if i > len {
            return Err(Error::InvalidBitString(format!(
                "unit index {i} out of range for length {len}"
            )));
        }
        if i == 0 {
            return Self::new(len, 0);
        }
        Self::new(len, 1 << (len - i))
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    /// Bit `x_i`, 1-indexed from the most significant end.
    pub fn bit(&self, i: u32) -> bool {
        assert!(i >= 1 && i <= self.len, "bit index {i} out of 1..={}", self.len);
        (self.value >> (self.len - i)) & 1 == 1
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::WidthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(BitString {
            len: self.len,
            value: self.value ^ other.value,
        })
    }

    /// `self ∘ other`.
    pub fn concat(&self, other: &BitString) -> Result<BitString> {
        Self::new(self.len + other.len, (self.value << other.len) | other.value)
    }

    /// The first `k` bits.
    pub fn prefix(&self, k: u32) -> BitString {
        assert!(k <= self.len);
        BitString {
            len: k,
            value: if k == 0 { 0 } else { self.value >> (self.len - k) },
        }
    }

    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut value = 0u32;
        let mut len = 0u32;
        for c in s.chars() {
            let b = match c {
                '0' => 0,
                '1' => 1,
                _ => return Err(Error::InvalidBitString(format!("{s:?}"))),
            };
            len += 1;
            if len > Self::MAX_LEN {
                return Err(Error::InvalidBitString(format!("{s:?} is too long")));
            }
            value = (value << 1) | b;
        }
        Self::new(len, value)
    }
}

/// A probability vector over `{0,1}^n`, indexed by the MSB-first encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    n: u32,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    n: u32,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Validates non-negativity, length `2^n`, and total mass `1 ± 1e-9`.
    pub fn new(n: u32, probs: Vec<f64>) -> Result<Self> {
        check_width(n)?;
        if probs.len() != 1usize << n {
            return Err(Error::InvalidDistribution(format!(
                "expected {} entries for n = {n}, got {}",
                1usize << n,
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(Error::InvalidDistribution(format!(
                "entry {i} is {p}, expected a finite non-negative number"
            )));
        }
        let total = stable_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}, expected 1"
            )));
        }
        Ok(JointDistribution { n, probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(n: u32, weights: Vec<f64>) -> Result<Self> {
        let total = stable_sum(weights.iter().copied());
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, cannot normalize"
            )));
        }
        Self::new(n, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: u32) -> Result<Self> {
        check_width(n)?;
        let size = 1usize << n;
        Ok(JointDistribution {
            n,
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn point_mass(x: BitString) -> Result<Self> {
        check_width(x.len())?;
        let mut probs = vec![0.0; 1usize << x.len()];
        probs[x.value() as usize] = 1.0;
        Ok(JointDistribution { n: x.len(), probs })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, x: BitString) -> f64 {
        assert_eq!(x.len(), self.n, "string width does not match distribution");
        self.probs[x.value() as usize]
    }

    /// Total mass of a set of strings given by their encodings.
    pub fn mass_of<I: IntoIterator<Item = u32>>(&self, set: I) -> f64 {
        stable_sum(set.into_iter().map(|x| self.probs[x as usize]))
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    /// `H_∞(μ) = -log2 max_x μ(x)`.
    pub fn min_entropy(&self) -> f64 {
        let h = -self.max_prob().log2();
        // -log2(1.0) is -0.0
        if h == 0.0 {
            0.0
        } else {
            h
        }
    }

    /// Shannon entropy in bits, with `0·log(1/0) = 0`.
    pub fn shannon_entropy(&self) -> f64 {
        shannon_of(&self.probs)
    }

    /// `Σ |μ(x) - ν(x)|`; half of this is the statistical distance.
    pub fn l1_distance(&self, other: &JointDistribution) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(stable_sum(
            self.probs
                .iter()
                .zip(&other.probs)
                .map(|(a, b)| (a - b).abs()),
        ))
    }

    /// `Σ |μ(x) - 2^-n|`, without materializing the uniform distribution.
    pub fn l1_to_uniform(&self) -> f64 {
        l1_to_uniform(&self.probs)
    }

    /// The distribution of `f(X)` for an `m`-bit valued function given on
    /// encodings.
    pub fn pushforward_by<F: Fn(u32) -> u32>(&self, m: u32, f: F) -> Result<JointDistribution> {
        check_width(m)?;
        let mut out = vec![0.0; 1usize << m];
        let mut comp = vec![0.0; 1usize << m];
        for (x, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let y = f(x as u32) as usize;
            assert!(y < out.len(), "map output {y} does not fit in {m} bits");
            // Neumaier accumulation per output cell
            let s = out[y];
            let t = s + p;
            if s.abs() >= p {
                comp[y] += (s - t) + p;
            } else {
                comp[y] += (p - t) + s;
            }
            out[y] = t;
        }
        for (o, c) in out.iter_mut().zip(comp) {
            *o += c;
        }
        Ok(JointDistribution { n: m, probs: out })
    }

    /// Marginal of the first `a` bits.
    pub fn marginal_prefix(&self, a: u32) -> JointDistribution {
        assert!(a <= self.n);
        let chunk = 1usize << (self.n - a);
        let probs = self
            .probs
            .chunks(chunk)
            .map(|c| stable_sum(c.iter().copied()))
            .collect();
        JointDistribution { n: a, probs }
    }

    /// Distribution of the remaining `n - k` bits given that the first `k`
    /// bits equal `prefix`.
    pub fn condition_on_prefix(&self, prefix: BitString) -> Result<JointDistribution> {
        let k = prefix.len();
        if k >= self.n {
            return Err(Error::InvalidParameter(format!(
                "prefix length {k} must be below n = {}",
                self.n
            )));
        }
        let rest = self.n - k;
        let start = (prefix.value() as usize) << rest;
        let slice = &self.probs[start..start + (1usize << rest)];
        let mass = stable_sum(slice.iter().copied());
        if mass <= 0.0 {
            return Err(Error::InconsistentConditioning(prefix.to_string()));
        }
        Ok(JointDistribution {
            n: rest,
            probs: slice.iter().map(|p| p / mass).collect(),
        })
    }

    /// `Pr[X_i = 1 | X_j = rest_j for all j ≠ i]`, where `rest` lists the
    /// other `n - 1` coordinates in order. `None` when both completions have
    /// zero mass.
    pub fn conditional_bit_given_rest(&self, i: u32, rest: BitString) -> Option<f64> {
        assert!(i >= 1 && i <= self.n, "coordinate {i} out of range");
        assert_eq!(rest.len() + 1, self.n, "rest must assign n - 1 coordinates");
        let x0 = insert_bit(rest.value(), self.n, i, false);
        self.conditional_bit_at(x0, i)
    }

    /// Same as [`conditional_bit_given_rest`](Self::conditional_bit_given_rest)
    /// with the conditioning given as a full string whose bit `i` is ignored.
    pub(crate) fn conditional_bit_at(&self, x: u32, i: u32) -> Option<f64> {
        let mask = 1u32 << (self.n - i);
        let p0 = self.probs[(x & !mask) as usize];
        let p1 = self.probs[(x | mask) as usize];
        let total = p0 + p1;
        if total > 0.0 {
            Some(p1 / total)
        } else {
            None
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text)?;
        Self::new(file.n, file.probs)
    }

    /// JSON with every probability written to 17 significant digits.
    pub fn to_json(&self) -> String {
        let body: Vec<String> = self.probs.iter().map(|p| format!("{p:.16e}")).collect();
        format!("{{\"n\":{},\"probs\":[{}]}}", self.n, body.join(","))
    }
}

/// The distribution of `h(X)` for `X ~ mu`.
pub fn pushforward(mu: &JointDistribution, f: &CondenserMap) -> Result<JointDistribution> {
    if f.n() != mu.n() {
        return Err(Error::WidthMismatch {
            expected: f.n(),
            got: mu.n(),
        });
    }
    mu.pushforward_by(f.m(), |x| f.apply(x))
}

pub(crate) fn shannon_of(probs: &[f64]) -> f64 {
    let h = stable_sum(
        probs
            .iter()
            .filter(|p| **p > 0.0)
            .map(|&p| -p * p.log2()),
    );
    h.max(0.0)
}

pub(crate) fn l1_to_uniform(probs: &[f64]) -> f64 {
    let u = 1.0 / probs.len() as f64;
    stable_sum(probs.iter().map(|p| (p - u).abs()))
}

/// Inserts bit `b` as coordinate `i` (1-indexed from the left) into the
/// `n - 1`-bit value `rest`.
pub(crate) fn insert_bit(rest: u32, n: u32, i: u32, b: bool) -> u32 {
    let low_len = n - i;
    let low = rest & ((1u32 << low_len) - 1);
    let high = rest >> low_len;
    (high << (low_len + 1)) | ((b as u32) << low_len) | low
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iid(n: u32, p1: f64) -> JointDistribution {
        let probs = (0..1u32 << n)
            .map(|x| {
                let w = x.count_ones() as i32;
                p1.powi(w) * (1.0 - p1).powi(n as i32 - w)
            })
            .collect();
        JointDistribution::new(n, probs).unwrap()
    }

    #[test]
    fn bitstring_msb_first() {
        let x: BitString = "1011".parse().unwrap();
        assert_eq!(x.value(), 0b1011);
        assert!(x.bit(1));
        assert!(!x.bit(2));
        assert!(x.bit(4));
        assert_eq!(x.to_string(), "1011");
        assert_eq!(BitString::unit(3, 1).unwrap().value(), 0b100);
        assert_eq!(BitString::unit(3, 3).unwrap().value(), 0b001);
        assert_eq!(BitString::unit(3, 0).unwrap().value(), 0);
        assert_eq!(x.prefix(2).to_string(), "10");
        assert_eq!("".parse::<BitString>().unwrap(), BitString::empty());
        assert!(BitString::new(2, 4).is_err());
        assert!("012".parse::<BitString>().is_err());
    }

    #[test]
    fn min_entropy_examples() {
        assert_eq!(JointDistribution::uniform(3).unwrap().min_entropy(), 3.0);
        let mu = iid(4, 0.75);
        let direct = -mu.probs().iter().copied().fold(0.0, f64::max).log2();
        assert!((mu.min_entropy() - 4.0 * (4.0f64 / 3.0).log2()).abs() < 1e-12);
        assert!((mu.min_entropy() - direct).abs() < 1e-15);
        assert!((mu.min_entropy() - 1.6601).abs() < 1e-4);
        let pm = JointDistribution::point_mass("101".parse().unwrap()).unwrap();
        assert_eq!(pm.min_entropy(), 0.0);
    }

    #[test]
    fn shannon_entropy_examples() {
        assert!((JointDistribution::uniform(3).unwrap().shannon_entropy() - 3.0).abs() < 1e-12);
        let pm = JointDistribution::point_mass("11".parse().unwrap()).unwrap();
        assert_eq!(pm.shannon_entropy(), 0.0);
        let b = JointDistribution::new(1, vec![0.75, 0.25]).unwrap();
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((b.shannon_entropy() - expected).abs() < 1e-12);
        assert!((b.shannon_entropy() - 0.8113).abs() < 1e-4);
    }

    #[test]
    fn l1_examples() {
        let u = JointDistribution::uniform(1).unwrap();
        assert_eq!(u.l1_distance(&u).unwrap(), 0.0);
        let a = JointDistribution::point_mass("0".parse().unwrap()).unwrap();
        let b = JointDistribution::point_mass("1".parse().unwrap()).unwrap();
        assert_eq!(a.l1_distance(&b).unwrap(), 2.0);
        let c = JointDistribution::new(1, vec![0.75, 0.25]).unwrap();
        assert!((c.l1_distance(&u).unwrap() - 0.5).abs() < 1e-15);
        assert!(c.l1_distance(&JointDistribution::uniform(2).unwrap()).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let x: BitString = "110".parse().unwrap();
        let pm = JointDistribution::point_mass(x).unwrap();
        let out = pm.pushforward_by(2, |v| v & 0b11).unwrap();
        assert_eq!(out.prob("10".parse().unwrap()), 1.0);

        let u = JointDistribution::uniform(5).unwrap();
        let c = u.pushforward_by(3, |_| 5).unwrap();
        assert_eq!(c.min_entropy(), 0.0);
        assert_eq!(c.prob("101".parse().unwrap()), 1.0);
    }

    #[test]
    fn conditioning_on_prefix() {
        let u = JointDistribution::uniform(4).unwrap();
        let c = u.condition_on_prefix("10".parse().unwrap()).unwrap();
        assert_eq!(c, JointDistribution::uniform(2).unwrap());

        let mu = iid(4, 0.75);
        let c = mu.condition_on_prefix("1".parse().unwrap()).unwrap();
        let expect = iid(3, 0.75);
        assert!(c.l1_distance(&expect).unwrap() < 1e-12);

        let mu = JointDistribution::new(2, vec![0.3, 0.1, 0.0, 0.6]).unwrap();
        // mass only on 00, 01 plus 11, conditioned on "0"
        let c = mu.condition_on_prefix("0".parse().unwrap()).unwrap();
        assert!((c.probs()[0] - 0.75).abs() < 1e-12);
        assert!((c.probs()[1] - 0.25).abs() < 1e-12);

        let mu = JointDistribution::new(2, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!(matches!(
            mu.condition_on_prefix("1".parse().unwrap()),
            Err(Error::InconsistentConditioning(_))
        ));
        assert!(mu.condition_on_prefix("01".parse().unwrap()).is_err());
    }

    #[test]
    fn conditional_bit_examples() {
        let u = JointDistribution::uniform(3).unwrap();
        for i in 1..=3 {
            for r in 0..4 {
                let rest = BitString::new(2, r).unwrap();
                assert_eq!(u.conditional_bit_given_rest(i, rest), Some(0.5));
            }
        }
        let mu = iid(3, 0.75);
        for i in 1..=3 {
            for r in 0..4 {
                let p = mu
                    .conditional_bit_given_rest(i, BitString::new(2, r).unwrap())
                    .unwrap();
                assert!((p - 0.75).abs() < 1e-12);
            }
        }
        let pm = JointDistribution::point_mass("000".parse().unwrap()).unwrap();
        assert_eq!(pm.conditional_bit_given_rest(2, "11".parse().unwrap()), None);
        assert_eq!(pm.conditional_bit_given_rest(2, "00".parse().unwrap()), Some(0.0));
    }

    #[test]
    fn insert_bit_positions() {
        // rest = x1 x3 = "10", insert x2 = 1 -> "110"
        assert_eq!(insert_bit(0b10, 3, 2, true), 0b110);
        assert_eq!(insert_bit(0b10, 3, 1, false), 0b010);
        assert_eq!(insert_bit(0b10, 3, 3, true), 0b101);
    }

    #[test]
    fn rejects_invalid_vectors() {
        assert!(JointDistribution::new(1, vec![0.5]).is_err());
        assert!(JointDistribution::new(1, vec![0.7, 0.7]).is_err());
        assert!(JointDistribution::new(1, vec![1.5, -0.5]).is_err());
        assert!(JointDistribution::new(1, vec![f64::NAN, 1.0]).is_err());
        assert!(matches!(
            JointDistribution::uniform(HARD_MAX_N + 1),
            Err(Error::TooWide { .. })
        ));
    }

    #[test]
    fn json_keeps_full_precision() {
        let mu = JointDistribution::from_weights(2, vec![1.0, 2.0, 3.0, 7.0]).unwrap();
        let text = mu.to_json();
        assert!(text.contains("7.6923076923076927e-2"));
        let back = JointDistribution::from_json(&text).unwrap();
        assert_eq!(back, mu);
        let err = JointDistribution::from_json("{\"n\": 1, \"probs\": [0.5,").unwrap_err();
        assert!(err.to_string().contains("line 1"));
    }
}
