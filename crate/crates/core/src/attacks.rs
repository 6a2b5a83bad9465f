//! Greedy SV adversaries concentrating mass on a target set, and the attack
//! that uses them to defeat any deterministic condenser for plain SV sources.

use serde::{Deserialize, Serialize};

use crate::bitdist::{check_width, pushforward, BitString, MASS_TOL, ENTROPY_TOL};
use crate::condenser::CondenserMap;
use crate::error::{Error, Result};
use crate::sv_models::{check_delta, lower_prob, upper_prob, PrefixAdversary};

/// A non-empty set of `n`-bit strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TargetSet {
    n: u32,
    members: Vec<u32>,
}

impl TargetSet {
    pub fn new<I: IntoIterator<Item = u32>>(n: u32, members: I) -> Result<Self> {
        check_width(n)?;
        let mut members: Vec<u32> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptySet);
        }
        if let Some(x) = members.iter().find(|x| (**x as u64) >> n != 0) {
            return Err(Error::InvalidParameter(format!("{x} is not an {n}-bit string")));
        }
        Ok(TargetSet { n, members })
    }

    pub fn from_strings(strings: &[BitString]) -> Result<Self> {
        let n = strings.first().ok_or(Error::EmptySet)?.len();
        if let Some(s) = strings.iter().find(|s| s.len() != n) {
            return Err(Error::WidthMismatch {
                expected: n,
                got: s.len(),
            });
        }
        Self::new(n, strings.iter().map(BitString::value))
    }

    /// The whole cube `{0,1}^n`.
    pub fn full(n: u32) -> Result<Self> {
        Self::new(n, 0..1u32 << n)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    /// `q^(n - log2|A|)`, with a real exponent.
    pub fn lemma_bound(&self, delta: f64) -> f64 {
        let exponent = self.n as f64 - (self.members.len() as f64).log2();
        (exponent * upper_prob(delta).ln()).exp()
    }
}

/// The adversary that, at each prefix `u`, sends probability `q` to the
/// branch with more completions inside the set (the 0-branch on ties).
pub fn greedy_sv_for_set(set: &TargetSet, delta: f64) -> Result<PrefixAdversary> {
    check_delta(delta)?;
    let n = set.n();
    // counts[k][u] = |{v : u v ∈ A}| for prefixes u of length k
    let mut counts = vec![Vec::new(); n as usize + 1];
    let mut leaves = vec![0u32; 1usize << n];
    for &x in set.members() {
        leaves[x as usize] = 1;
    }
    counts[n as usize] = leaves;
    for k in (0..n as usize).rev() {
        counts[k] = counts[k + 1].chunks(2).map(|c| c[0] + c[1]).collect();
    }
    let (p, q) = (lower_prob(delta), upper_prob(delta));
    PrefixAdversary::from_fn(n, delta, |u| {
        let child = &counts[u.len() as usize + 1];
        let zeros = child[2 * u.value() as usize];
        let ones = child[2 * u.value() as usize + 1];
        // the value stored is Pr[next = 1]
        if zeros >= ones {
            p
        } else {
            q
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub mass: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Mass the greedy adversary puts on `set`, against `q^(n - log2|A|)`.
pub fn verify_lemma_e1(set: &TargetSet, delta: f64) -> Result<LemmaCheck> {
    let mu = greedy_sv_for_set(set, delta)?.materialize();
    let mass = mu.mass_of(set.members().iter().copied());
    let bound = set.lemma_bound(delta);
    Ok(LemmaCheck {
        mass,
        bound,
        holds: mass >= bound - MASS_TOL,
    })
}

/// Outcome of attacking a condenser `F: {0,1}^n -> {0,1}^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackResult {
    pub n: u32,
    pub m: u32,
    pub delta: f64,
    /// Output value `s` whose preimage the adversary targets.
    pub target_output: BitString,
    pub fiber_size: usize,
    pub adversary: PrefixAdversary,
    /// `Pr[F(X) = s]` under the adversary.
    pub target_set_mass: f64,
    /// `q^(n - log2|F^-1(s)|)`
    pub lemma_bound: f64,
    pub achieved_min_entropy: f64,
    /// `m · log2(2/(1+δ))`
    pub theorem_bound: f64,
}

impl AttackResult {
    /// Both guarantees of the attack are met.
    pub fn holds(&self) -> bool {
        self.target_set_mass >= self.lemma_bound - MASS_TOL
            && self.achieved_min_entropy <= self.theorem_bound + ENTROPY_TOL
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "version": "attack_v1",
            "n": self.n,
            "m": self.m,
            "delta": self.delta,
            "target_output": self.target_output.to_string(),
            "fiber_size": self.fiber_size,
            "target_set_mass": self.target_set_mass,
            "lemma_bound": self.lemma_bound,
            "achieved_min_entropy": self.achieved_min_entropy,
            "theorem_bound": self.theorem_bound,
            "holds": self.holds(),
            "adversary": self.adversary.to_json_value(),
        })
    }
}

/// Picks the largest fiber of `f` (smallest output on ties) and aims the
/// greedy adversary at it.
pub fn attack_condenser(f: &CondenserMap, delta: f64) -> Result<AttackResult> {
    check_delta(delta)?;
    let (n, m) = (f.n(), f.m());
    let mut sizes = vec![0usize; 1usize << m];
    for x in 0..1u32 << n {
        sizes[f.apply(x) as usize] += 1;
    }
    let (target, fiber_size) = sizes
        .iter()
        .enumerate()
        .fold((0usize, 0usize), |best, (s, &c)| if c > best.1 { (s, c) } else { best });
    let fiber = TargetSet::new(n, (0..1u32 << n).filter(|&x| f.apply(x) as usize == target))?;
    let adversary = greedy_sv_for_set(&fiber, delta)?;
    let mu = adversary.materialize();
    let out = pushforward(&mu, f)?;
    Ok(AttackResult {
        n,
        m,
        delta,
        target_output: BitString::new(m, target as u32)?,
        fiber_size,
        target_set_mass: out.probs()[target],
        lemma_bound: fiber.lemma_bound(delta),
        achieved_min_entropy: out.min_entropy(),
        theorem_bound: m as f64 * (2.0 / (1.0 + delta)).log2(),
        adversary,
    })
}
