//! Deterministic verification suites: exhaustive or seeded sweeps that check
//! every bound the crate implements against exact computation.

use std::time::Instant;

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::{attack_condenser, greedy_sv_for_set, verify_lemma_e1, TargetSet};
use crate::bitdist::{pushforward, BitString, JointDistribution, ENTROPY_TOL, MASS_TOL};
use crate::bounds::{condensed_min_entropy_floor, imbalanced_floor, sv_min_entropy_floor};
use crate::condenser::{condense, condense_bytes, imbalance_ratio, theoretical_rate, CondenserMap};
use crate::error::{Error, Result};
use crate::extractors::{
    claim_bound_cond_extr, claim_bound_extr_cond, conditional_slice_entropies,
    entropy_condenser_from_vse, pinsker_sandwich, very_strong_error, vse_from_condenser,
};
use crate::hamming::HammingCode;
use crate::sv_models::{edge_ratio, is_strong_sv, is_sv, random_potential_strong_sv, PrefixAdversary};

pub const SUITES: [&str; 9] = [
    "lemma-e1",
    "theorem1",
    "theorem2",
    "imbalance",
    "pinsker",
    "cond-extr",
    "extr-cond",
    "partition",
    "stream-equiv",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyConfig {
    pub max_n: u32,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { max_n: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub name: String,
    pub passed: bool,
    pub cases: u64,
    /// Smallest observed `measured - bound` margin (negative means violated
    /// beyond the tolerance if below `-tolerance`).
    pub worst_slack: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub seed: u64,
    pub max_n: u32,
    pub passed: bool,
    pub properties: Vec<PropertyOutcome>,
}

impl SuiteOutcome {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.properties {
            out.push_str(&format!(
                "{} {}/{} cases={} worst_slack={:.3e} {}\n",
                if p.passed { "PASS" } else { "FAIL" },
                self.suite,
                p.name,
                p.cases,
                p.worst_slack,
                p.detail
            ));
        }
        out
    }
}

/// Running minimum of `measured - bound` over the cases of one property.
struct Tally {
    name: String,
    tolerance: f64,
    cases: u64,
    worst: f64,
    first_failure: Option<String>,
    detail: String,
}

impl Tally {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Tally {
            name: name.into(),
            tolerance,
            cases: 0,
            worst: f64::INFINITY,
            first_failure: None,
            detail: String::new(),
        }
    }

    /// Records a case whose margin must be at least `-tolerance`.
    fn slack(&mut self, margin: f64, what: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = self.worst.min(margin);
        if (margin.is_nan() || margin < -self.tolerance) && self.first_failure.is_none() {
            self.first_failure = Some(what());
        }
    }

    fn truth(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.slack(if ok { 0.0 } else { f64::NEG_INFINITY }, what);
    }

    fn finish(self) -> PropertyOutcome {
        let passed = self.first_failure.is_none() && self.cases > 0;
        let detail = match self.first_failure {
            Some(f) => format!("first failure: {f}"),
            None => self.detail,
        };
        PropertyOutcome {
            name: self.name,
            passed,
            cases: self.cases,
            worst_slack: if self.cases == 0 { 0.0 } else { self.worst },
            tolerance: self.tolerance,
            detail,
        }
    }
}

fn instance_seed(base: u64, i: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i)
}

/// Seeded test distribution mixing three shapes: dense exponential weights,
/// sparse supports, and one dominant atom.
pub fn random_distribution(n: u32, seed: u64) -> Result<JointDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = 1usize << n;
    let shape = rng.gen_range(0..3);
    let mut weights: Vec<f64> = (0..size).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    match shape {
        1 => {
            let keep = rng.gen_range(0.1..0.9);
            weights.iter_mut().for_each(|w| {
                if rng.gen::<f64>() > keep {
                    *w = 0.0
                }
            });
            if weights.iter().all(|w| *w == 0.0) {
                weights[rng.gen_range(0..size)] = 1.0;
            }
        }
        2 => {
            let atom = rng.gen_range(0..size);
            weights[atom] *= rng.gen_range(1.0..(4.0 * size as f64));
        }
        _ => {}
    }
    JointDistribution::from_weights(n, weights)
}

pub fn run_suite(name: &str, cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let properties = match name {
        "lemma-e1" => lemma_e1(cfg)?,
        "theorem1" => theorem1(cfg)?,
        "theorem2" => theorem2(cfg)?,
        "imbalance" => imbalance(cfg)?,
        "pinsker" => pinsker(cfg)?,
        "cond-extr" => cond_extr(cfg)?,
        "extr-cond" => extr_cond(cfg)?,
        "partition" => partition(cfg)?,
        "stream-equiv" => stream_equiv(cfg)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite {other:?}; expected one of {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(SuiteOutcome {
        suite: name.to_string(),
        seed: cfg.seed,
        max_n: cfg.max_n,
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn partition(_cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let mut out = Vec::new();
    for d in 2..=4 {
        let code = HammingCode::new(d)?;
        let cosets = code.coset_partition()?;
        let expected = 1usize << code.dimension();
        let mut t = Tally::new(format!("perfect d={d}"), 0.0);
        let mut seen = vec![false; 1usize << code.block_len()];
        for (i, c) in cosets.iter().enumerate() {
            t.truth(c.len() == expected, || format!("coset {i} has {} elements", c.len()));
            for &x in c {
                t.truth(!seen[x as usize], || format!("{x} in two cosets"));
                seen[x as usize] = true;
            }
        }
        t.truth(seen.iter().all(|s| *s), || "cosets do not cover the cube".into());
        t.detail = format!("{} cosets of size {expected}", cosets.len());
        out.push(t.finish());
    }
    Ok(out)
}

const LEMMA_DELTAS: [f64; 3] = [0.1, 0.5, 0.9];

fn lemma_e1(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let exhaustive_n = cfg.max_n.clamp(1, 4);
    let mut mass = Tally::new(format!("greedy mass bound, exhaustive n<={exhaustive_n}"), MASS_TOL);
    let mut sv = Tally::new("greedy distribution is SV", MASS_TOL);
    for n in 1..=exhaustive_n {
        let cube = 1u64 << n;
        for mask in 1u64..(1u64 << cube) {
            let set = TargetSet::new(n, (0..cube as u32).filter(|x| mask >> x & 1 == 1))?;
            for &delta in &LEMMA_DELTAS {
                let adv = greedy_sv_for_set(&set, delta)?;
                let mu = adv.materialize();
                let got = mu.mass_of(set.members().iter().copied());
                let bound = set.lemma_bound(delta);
                mass.slack(got - bound, || format!("n={n} A={mask:#x} δ={delta}: {got} < {bound}"));
                sv.truth(is_sv(&mu, delta), || format!("n={n} A={mask:#x} δ={delta}"));
            }
        }
    }
    let mut out = vec![mass.finish(), sv.finish()];
    if cfg.max_n > 4 {
        let top = cfg.max_n.min(12);
        let mut t = Tally::new(format!("greedy mass bound, random sets 5<=n<={top}"), MASS_TOL);
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, 1));
        for n in 5..=top {
            for _ in 0..200 {
                let density = rng.gen_range(0.0..0.5);
                let mut members: Vec<u32> = (0..1u32 << n).filter(|_| rng.gen::<f64>() < density).collect();
                if members.is_empty() {
                    members.push(rng.gen_range(0..1u32 << n));
                }
                let set = TargetSet::new(n, members)?;
                let delta = rng.gen_range(0.01..0.99);
                let c = verify_lemma_e1(&set, delta)?;
                t.slack(c.mass - c.bound, || format!("n={n} |A|={} δ={delta}", set.len()));
            }
        }
        out.push(t.finish());
    }
    Ok(out)
}

fn theorem1(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let top = cfg.max_n.clamp(1, 8);
    let mut part1 = Tally::new(format!("SV min-entropy floor n<={top}"), ENTROPY_TOL);
    for i in 0..200u64 {
        let n = 1 + (i as u32 % top);
        let delta = [0.1, 0.3, 0.5, 0.7, 0.9][i as usize % 5];
        let mu = PrefixAdversary::random(n, delta, instance_seed(cfg.seed, i))?.materialize();
        let floor = sv_min_entropy_floor(n, delta);
        part1.slack(mu.min_entropy() - floor, || format!("instance {i}: n={n} δ={delta}"));
        part1.truth(is_sv(&mu, delta), || format!("instance {i} not SV"));
    }

    let n = top;
    let m = (n / 2).max(1);
    let delta: f64 = 0.5;
    let bound = m as f64 * (2.0 / (1.0 + delta)).log2();
    let mut part2 = Tally::new(format!("attack on random F: {{0,1}}^{n} -> {{0,1}}^{m}"), ENTROPY_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, 2));
    for i in 0..1000 {
        let table = (0..1u32 << n).map(|_| rng.gen_range(0..1u32 << m)).collect();
        let f = CondenserMap::table(n, m, table)?;
        let r = attack_condenser(&f, delta)?;
        part2.slack(bound - r.achieved_min_entropy, || format!("table {i}: {}", r.achieved_min_entropy));
        part2.slack(r.target_set_mass - r.lemma_bound, || format!("table {i}: lemma mass"));
    }
    part2.detail = format!("bound {bound:.6}");

    let mut tight = Tally::new("identity attains the bound", 1e-9);
    for n in 1..=top {
        let r = attack_condenser(&CondenserMap::identity(n)?, delta)?;
        let gap = (r.achieved_min_entropy - r.theorem_bound).abs();
        tight.slack(-gap, || format!("n={n}: gap {gap}"));
    }
    Ok(vec![part1.finish(), part2.finish(), tight.finish()])
}

fn imbalance(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let mut ratio = Tally::new("g_d output is δ-imbalanced", ENTROPY_TOL);
    let mut floor = Tally::new("g_d min-entropy floor", ENTROPY_TOL);
    for d in [2u32, 3] {
        let n = (1 << d) - 1;
        let g = CondenserMap::structured(d, 1)?;
        for delta in [0.25, 0.5] {
            let r = edge_ratio(delta);
            for i in 0..200u64 {
                let mu = random_potential_strong_sv(n, delta, instance_seed(cfg.seed, i + 1000 * d as u64))?;
                let nu = pushforward(&mu, &g)?;
                let imb = imbalance_ratio(&nu);
                ratio.slack(r - imb, || format!("d={d} δ={delta} #{i}: {imb}"));
                let h = nu.min_entropy();
                floor.slack(h - imbalanced_floor(d, delta), || format!("d={d} δ={delta} #{i}: {h}"));
            }
        }
    }

    let mut hand = Tally::new("iid(0.75)^3 through g_2", 1e-12);
    let nu = pushforward(&crate::sv_models::iid_biased(3, 0.75)?, &CondenserMap::structured(2, 1)?)?;
    for (got, want) in nu.probs().iter().zip([0.4375, 0.1875, 0.1875, 0.1875]) {
        hand.slack(-(got - want).abs(), || format!("{:?}", nu.probs()));
    }
    hand.detail = format!("H_inf = {:.4}", nu.min_entropy());

    let mut el3 = Tally::new("imbalance ratio bounds min-entropy", ENTROPY_TOL);
    for i in 0..500u64 {
        let d = 1 + (i as u32 % 6);
        let nu = random_distribution(d, instance_seed(cfg.seed, 5000 + i))?;
        let r = imbalance_ratio(&nu);
        if r.is_finite() {
            el3.slack(nu.min_entropy() - (d as f64 - r.log2()), || format!("#{i}: ratio {r}"));
        }
    }
    Ok(vec![ratio.finish(), floor.finish(), hand.finish(), el3.finish()])
}

fn theorem2(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let mut out = Vec::new();
    for (d, k) in [(2u32, 2u32), (2, 1), (3, 1)] {
        let h = CondenserMap::structured(d, k)?;
        if h.n() > cfg.max_n.max(7) {
            continue;
        }
        let mut entropy = Tally::new(format!("f_{d} min-entropy floor k={k}"), ENTROPY_TOL);
        let mut rate = Tally::new(format!("f_{d} rate bound k={k}"), ENTROPY_TOL);
        for delta in [0.25, 0.5, 0.75] {
            let rate_bound = theoretical_rate(d, delta)?.rate_bound;
            let floor = condensed_min_entropy_floor(d, k, delta);
            for i in 0..200u64 {
                let mu = random_potential_strong_sv(h.n(), delta, instance_seed(cfg.seed, i + 7 * h.n() as u64 * 1000))?;
                let got = pushforward(&mu, &h)?.min_entropy();
                entropy.slack(got - floor, || format!("δ={delta} #{i}: {got} < {floor}"));
                rate.slack(got / h.m() as f64 - rate_bound, || format!("δ={delta} #{i}"));
            }
        }
        out.push(entropy.finish());
        out.push(rate.finish());
    }

    let mut strong_implies_plain = Tally::new("strong SV implies SV", MASS_TOL);
    for i in 0..200u64 {
        let n = 1 + (i as u32 % 6);
        let delta = [0.1, 0.5, 0.9][i as usize % 3];
        let mu = random_potential_strong_sv(n, delta, instance_seed(cfg.seed, 9000 + i))?;
        strong_implies_plain.truth(is_strong_sv(&mu, delta) && is_sv(&mu, delta), || format!("#{i}"));
    }
    out.push(strong_implies_plain.finish());
    Ok(out)
}

fn pinsker(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let top = cfg.max_n.clamp(1, 6);
    let mut lower = Tally::new(format!("lower <= deficit, n<={top}"), MASS_TOL);
    let mut upper = Tally::new(format!("deficit <= upper, n<={top}"), MASS_TOL);
    let mut check = |mu: &JointDistribution, label: &dyn Fn() -> String| {
        let s = pinsker_sandwich(mu);
        lower.slack(s.deficit - s.lower, label);
        upper.slack(s.upper - s.deficit, label);
    };
    for i in 0..1000u64 {
        let n = 1 + (i as u32 % top);
        let mu = random_distribution(n, instance_seed(cfg.seed, i))?;
        check(&mu, &|| format!("random #{i}"));
    }
    for n in 1..=top {
        check(&JointDistribution::uniform(n)?, &|| format!("uniform n={n}"));
        check(&JointDistribution::point_mass(BitString::zeros(n)?)?, &|| format!("point mass n={n}"));
    }
    Ok(vec![lower.finish(), upper.finish()])
}

/// Strong SV instances on 6 bits for the extractor suites.
fn extractor_instances(cfg: &VerifyConfig) -> Result<Vec<(f64, JointDistribution)>> {
    (0..100u64)
        .map(|i| {
            let delta = [0.1, 0.25, 0.5, 0.75][i as usize % 4];
            Ok((delta, random_potential_strong_sv(6, delta, instance_seed(cfg.seed, 20_000 + i))?))
        })
        .collect()
}

fn cond_extr(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let h = CondenserMap::structured(2, 2)?;
    let m = h.m();
    let mut claim = Tally::new("very strong error <= claim bound", ENTROPY_TOL);
    let mut chain = Tally::new("chain rule over slices", ENTROPY_TOL);
    for (i, (_, mu)) in extractor_instances(cfg)?.iter().enumerate() {
        let out_entropy = pushforward(mu, &h)?.shannon_entropy();
        let eps = (1.0 - out_entropy / m as f64).max(0.0);
        for seeds in [1u32, 2, 4] {
            let g = vse_from_condenser(&h, seeds)?;
            let err = very_strong_error(&g, mu)?;
            let bound = claim_bound_cond_extr(eps, m, seeds).bound;
            claim.slack(bound - err, || format!("#{i} D={seeds}: {err} > {bound}"));
            let conds = conditional_slice_entropies(&g, mu)?;
            let avg: f64 = conds.iter().sum::<f64>() / seeds as f64;
            chain.slack(-(avg - out_entropy / seeds as f64).abs(), || format!("#{i} D={seeds}"));
        }
    }
    Ok(vec![claim.finish(), chain.finish()])
}

fn extr_cond(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let h = CondenserMap::structured(2, 2)?;
    let mut rate = Tally::new("concatenation entropy floor", ENTROPY_TOL);
    let mut round_trip = Tally::new("concatenation inverts slicing", 0.0);
    for (i, (_, mu)) in extractor_instances(cfg)?.iter().enumerate() {
        for seeds in [1u32, 2, 4] {
            let g = vse_from_condenser(&h, seeds)?;
            let err = very_strong_error(&g, mu)?;
            let hg = entropy_condenser_from_vse(&g)?;
            round_trip.truth(hg.same_function(&h), || format!("#{i} D={seeds}"));
            let entropy = pushforward(mu, &hg)?.shannon_entropy();
            let floor = claim_bound_extr_cond(err.min(1.0), g.m_out())?.rate * hg.m() as f64;
            rate.slack(entropy - floor, || format!("#{i} D={seeds}: {entropy} < {floor}"));
        }
    }
    Ok(vec![rate.finish(), round_trip.finish()])
}

fn stream_equiv(cfg: &VerifyConfig) -> Result<Vec<PropertyOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.seed, 3));
    let mut data = vec![0u8; 1 << 20];
    rng.fill(&mut data[..]);
    let mut out = Vec::new();
    for d in 2..=crate::hamming::MAX_D {
        let mut t = Tally::new(format!("stream == blockwise d={d}"), 0.0);
        let start = Instant::now();
        let (streamed, summary) = condense_bytes(d, &data)?;
        let secs = start.elapsed().as_secs_f64();
        let bits = data.view_bits::<Msb0>();
        let usable = bits.len() - summary.dropped.input_tail as usize;
        let blockwise = condense(d, &bits[..usable])?;
        let whole = blockwise.len() / 8 * 8;
        t.truth(blockwise.len() - whole == summary.dropped.output_tail as usize, || {
            "output tail count differs".into()
        });
        t.truth(streamed.as_slice() == &blockwise.as_raw_slice()[..whole / 8], || {
            "streamed bytes differ from blockwise condense".into()
        });
        t.detail = format!(
            "{} blocks, {:.1} MiB/s",
            summary.blocks,
            data.len() as f64 / (1 << 20) as f64 / secs.max(1e-9)
        );
        out.push(t.finish());
    }
    Ok(out)
}
