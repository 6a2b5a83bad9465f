//! Santha-Vazirani and strong Santha-Vazirani distributions: constructors
//! and exact membership checkers.
//!
//! Conditioning events of zero mass are skipped by both checkers; the
//! conditional probability is undefined there and imposes no constraint.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitdist::{check_width, stable_sum, BitString, JointDistribution, MASS_TOL};
use crate::error::{Error, Result};

/// Bias parameter together with the width it applies to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SVParams {
    n: u32,
    delta: f64,
}

impl SVParams {
    pub fn new(n: u32, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(SVParams { n, delta })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(1 - δ) / 2`
    pub fn p(&self) -> f64 {
        lower_prob(self.delta)
    }

    /// `(1 + δ) / 2`
    pub fn q(&self) -> f64 {
        upper_prob(self.delta)
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "bias must lie in [0, 1), got {delta}"
        )));
    }
    Ok(())
}

pub fn lower_prob(delta: f64) -> f64 {
    (1.0 - delta) / 2.0
}

pub fn upper_prob(delta: f64) -> f64 {
    (1.0 + delta) / 2.0
}

/// `(1 + δ) / (1 - δ)`, the largest probability ratio across a hypercube edge.
pub fn edge_ratio(delta: f64) -> f64 {
    (1.0 + delta) / (1.0 - delta)
}

fn in_band(prob: f64, delta: f64) -> bool {
    prob >= lower_prob(delta) - MASS_TOL && prob <= upper_prob(delta) + MASS_TOL
}

/// A conditional next-bit (or other-bit) probability outside the allowed band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// The coordinate `i` whose conditional was out of range (1-indexed).
    pub coordinate: u32,
    /// For plain SV: the prefix `x_1..x_{i-1}`. For strong SV: the other
    /// `n - 1` coordinates in order.
    pub condition: String,
    /// `Pr[X_i = 1 | condition]`.
    pub probability: f64,
}

/// Marginals of every prefix length: `levels[k][z]` is the mass of prefix `z`
/// of length `k`.
fn prefix_marginals(mu: &JointDistribution) -> Vec<Vec<f64>> {
    let n = mu.n() as usize;
    let mut levels = vec![Vec::new(); n + 1];
    levels[n] = mu.probs().to_vec();
    for k in (0..n).rev() {
        let next = &levels[k + 1];
        levels[k] = next.chunks(2).map(|c| c[0] + c[1]).collect();
    }
    levels
}

/// First prefix at which the next-bit probability leaves `[p, q]`, scanning
/// coordinates in order and prefixes in increasing encoding.
pub fn check_sv(mu: &JointDistribution, delta: f64) -> Option<Violation> {
    let levels = prefix_marginals(mu);
    for i in 1..=mu.n() {
        let prefixes = &levels[(i - 1) as usize];
        let extended = &levels[i as usize];
        for (z, &mass) in prefixes.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            let p1 = extended[2 * z + 1] / mass;
            if !in_band(p1, delta) {
                return Some(Violation {
                    coordinate: i,
                    condition: BitString::new(i - 1, z as u32).unwrap().to_string(),
                    probability: p1,
                });
            }
        }
    }
    None
}

pub fn is_sv(mu: &JointDistribution, delta: f64) -> bool {
    check_sv(mu, delta).is_none()
}

/// First `(i, rest)` at which `Pr[X_i = 1 | all other bits]` leaves `[p, q]`.
pub fn check_strong_sv(mu: &JointDistribution, delta: f64) -> Option<Violation> {
    let n = mu.n();
    for i in 1..=n {
        let mask = 1u32 << (n - i);
        for x in (0..1u32 << n).filter(|x| x & mask == 0) {
            if let Some(p1) = mu.conditional_bit_at(x, i) {
                if !in_band(p1, delta) {
                    return Some(Violation {
                        coordinate: i,
                        condition: remove_bit(x, n, i).to_string(),
                        probability: p1,
                    });
                }
            }
        }
    }
    None
}

pub fn is_strong_sv(mu: &JointDistribution, delta: f64) -> bool {
    check_strong_sv(mu, delta).is_none()
}

fn remove_bit(x: u32, n: u32, i: u32) -> BitString {
    let low_len = n - i;
    let low = x & ((1u32 << low_len) - 1);
    let high = x >> (low_len + 1);
    BitString::new(n - 1, (high << low_len) | low).unwrap()
}

/// `n` independent bits, each equal to 1 with probability `p1`.
pub fn iid_biased(n: u32, p1: f64) -> Result<JointDistribution> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidParameter(format!(
            "bit probability must lie in [0, 1], got {p1}"
        )));
    }
    check_width(n)?;
    let mut probs = vec![1.0];
    for _ in 0..n {
        probs = probs.iter().flat_map(|&w| [w * (1.0 - p1), w * p1]).collect();
    }
    JointDistribution::new(n, probs)
}

/// An SV strategy: for every prefix of length `0..n`, the probability that
/// the next bit is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixAdversary {
    n: u32,
    delta: f64,
    // heap layout: prefix of length k and value v lives at (1 << k) - 1 + v
    strategy: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AdversaryFile {
    n: u32,
    delta: f64,
    strategy: BTreeMap<String, f64>,
}

fn slot(prefix: BitString) -> usize {
    (1usize << prefix.len()) - 1 + prefix.value() as usize
}

impl PrefixAdversary {
    /// Builds an adversary from a rule evaluated at every prefix.
    pub fn from_fn<F: FnMut(BitString) -> f64>(n: u32, delta: f64, mut rule: F) -> Result<Self> {
        check_delta(delta)?;
        check_width(n)?;
        let mut strategy = Vec::with_capacity((1usize << n) - 1);
        for k in 0..n {
            for v in 0..1u32 << k {
                strategy.push(rule(BitString::new(k, v)?));
            }
        }
        let adv = PrefixAdversary { n, delta, strategy };
        adv.validate()?;
        Ok(adv)
    }

    /// Reads off the next-bit conditionals of `mu`. Zero-mass prefixes get
    /// 1/2. Fails if some conditional is outside the SV band.
    pub fn from_distribution(mu: &JointDistribution, delta: f64) -> Result<Self> {
        let levels = prefix_marginals(mu);
        Self::from_fn(mu.n(), delta, |z| {
            let mass = levels[z.len() as usize][z.value() as usize];
            if mass > 0.0 {
                levels[z.len() as usize + 1][2 * z.value() as usize + 1] / mass
            } else {
                0.5
            }
        })
    }

    /// Seeded strategy: each prefix draws uniformly from `[p, q]`, or takes
    /// an endpoint with probability 1/4 each.
    pub fn random(n: u32, delta: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, q) = (lower_prob(delta), upper_prob(delta));
        Self::from_fn(n, delta, |_| match rng.gen_range(0..4) {
            0 => p,
            1 => q,
            _ => p + (q - p) * rng.gen::<f64>(),
        })
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.n {
            for v in 0..1u32 << k {
                let z = BitString::new(k, v)?;
                let s = self.strategy[slot(z)];
                if !(s.is_finite() && in_band(s, self.delta)) {
                    return Err(Error::InvalidParameter(format!(
                        "strategy at prefix {z:?} is {s}, outside [{}, {}]",
                        lower_prob(self.delta),
                        upper_prob(self.delta)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `Pr[next bit = 1 | prefix]`.
    pub fn next_one_prob(&self, prefix: BitString) -> f64 {
        assert!(prefix.len() < self.n);
        self.strategy[slot(prefix)]
    }

    /// Every stored probability, in order of prefix length then value.
    pub fn values(&self) -> &[f64] {
        &self.strategy
    }

    /// The joint distribution `Π_i Pr[x_i | x_1..x_{i-1}]`.
    pub fn materialize(&self) -> JointDistribution {
        let mut probs = vec![1.0];
        for k in 0..self.n {
            let base = (1usize << k) - 1;
            probs = probs
                .iter()
                .enumerate()
                .flat_map(|(v, &w)| {
                    let s = self.strategy[base + v];
                    [w * (1.0 - s), w * s]
                })
                .collect();
        }
        // products of [p, q] values sum to 1 up to rounding
        let total = stable_sum(probs.iter().copied());
        JointDistribution::new(self.n, probs.into_iter().map(|w| w / total).collect())
            .expect("materialized adversary is a distribution")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AdversaryFile = serde_json::from_str(text)?;
        check_delta(file.delta)?;
        check_width(file.n)?;
        let expected = (1usize << file.n) - 1;
        if file.strategy.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "strategy has {} prefixes, expected {expected}",
                file.strategy.len()
            )));
        }
        let mut strategy = vec![f64::NAN; expected];
        for (key, value) in &file.strategy {
            let z: BitString = key.parse()?;
            if z.len() >= file.n {
                return Err(Error::InvalidParameter(format!(
                    "prefix {key:?} is not shorter than n = {}",
                    file.n
                )));
            }
            strategy[slot(z)] = *value;
        }
        let adv = PrefixAdversary {
            n: file.n,
            delta: file.delta,
            strategy,
        };
        adv.validate()?;
        Ok(adv)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let mut strategy = BTreeMap::new();
        for k in 0..self.n {
            for v in 0..1u32 << k {
                let z = BitString::new(k, v).unwrap();
                strategy.insert(z.to_string(), self.strategy[slot(z)]);
            }
        }
        serde_json::to_value(AdversaryFile {
            n: self.n,
            delta: self.delta,
            strategy,
        })
        .expect("adversary serializes")
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().to_string()
    }
}

/// A real function on the cube whose values differ by at most 1 across every
/// hypercube edge. Exponentiating it with base `(1+δ)/(1-δ)` yields a strong
/// SV distribution with bias `δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialStrongSV {
    n: u32,
    delta: f64,
    potential: Vec<f64>,
}

impl PotentialStrongSV {
    pub fn new(n: u32, delta: f64, potential: Vec<f64>) -> Result<Self> {
        check_delta(delta)?;
        check_width(n)?;
        if potential.len() != 1usize << n {
            return Err(Error::InvalidParameter(format!(
                "potential has {} entries, expected {}",
                potential.len(),
                1usize << n
            )));
        }
        let spread = max_edge_difference(n, &potential);
        if spread.is_nan() || spread > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "potential changes by {spread} across an edge, limit is 1"
            )));
        }
        Ok(PotentialStrongSV {
            n,
            delta,
            potential,
        })
    }

    /// Linear terms plus sparse clipped pairwise terms, rescaled so the
    /// steepest edge has a difference in `[0.5, 1]`.
    pub fn random(n: u32, delta: f64, seed: u64) -> Result<Self> {
        check_width(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.5) {
                    let w: f64 = rng.gen_range(-1.5..=1.5);
                    pairs.push((i, j, w.clamp(-1.0, 1.0)));
                }
            }
        }
        let target = if rng.gen_bool(0.5) {
            1.0
        } else {
            rng.gen_range(0.5..=1.0)
        };
        let bit = |x: u32, i: u32| ((x >> (n - 1 - i)) & 1) as f64;
        let mut potential: Vec<f64> = (0..1u32 << n)
            .map(|x| {
                let lin: f64 = (0..n).map(|i| linear[i as usize] * bit(x, i)).sum();
                let quad: f64 = pairs.iter().map(|&(i, j, w)| w * bit(x, i) * bit(x, j)).sum();
                lin + quad
            })
            .collect();
        let spread = max_edge_difference(n, &potential);
        if spread > 0.0 {
            let scale = target / spread;
            potential.iter_mut().for_each(|v| *v *= scale);
        }
        Self::new(n, delta, potential)
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// `probs(x) ∝ ((1+δ)/(1-δ))^potential(x)`.
    pub fn distribution(&self) -> JointDistribution {
        let rate = edge_ratio(self.delta).ln();
        let top = self.potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights = self
            .potential
            .iter()
            .map(|v| (rate * (v - top)).exp())
            .collect();
        JointDistribution::from_weights(self.n, weights).expect("exponential weights are positive")
    }
}

fn max_edge_difference(n: u32, potential: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for x in 0..1u32 << n {
        for i in 0..n {
            let y = x ^ (1 << i);
            if y > x {
                worst = worst.max((potential[x as usize] - potential[y as usize]).abs());
            }
        }
    }
    worst
}

/// A seeded strong SV distribution from [`PotentialStrongSV::random`].
pub fn random_potential_strong_sv(n: u32, delta: f64, seed: u64) -> Result<JointDistribution> {
    Ok(PotentialStrongSV::random(n, delta, seed)?.distribution())
}
