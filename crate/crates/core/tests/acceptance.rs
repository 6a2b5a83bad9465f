//! Acceptance criteria, one pass/fail line each. Runs without the default
//! harness so every line is printed even when earlier criteria fail.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bitvec::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svcond::attacks::{attack_condenser, greedy_sv_for_set, TargetSet};
use svcond::condenser::{condense_bytes, imbalance_ratio, CondenserMap};
use svcond::extractors::{
    conditional_slice_entropies, entropy_condenser_from_vse, pinsker_sandwich, very_strong_error,
    vse_from_condenser,
};
use svcond::hamming::HammingCode;
use svcond::sv_models::{iid_biased, is_sv, random_potential_strong_sv, PrefixAdversary};
use svcond::verify::random_distribution;
use svcond::{pushforward, BitString, JointDistribution};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: svcond::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn log2_ratio(delta: f64) -> f64 {
    ((1.0 + delta) / (1.0 - delta)).log2()
}

fn perfect_partition() -> Outcome {
    for d in 2..=4u32 {
        let n = (1u32 << d) - 1;
        let mut sizes = vec![0u64; 1 << d];
        for x in 0..1u32 << n {
            sizes[common::syndrome(&common::bits_of(x, n)) as usize] += 1;
        }
        let expected = 1u64 << (n - d);
        ensure(sizes.iter().all(|&s| s == expected), || format!("d={d}: fiber sizes {sizes:?}"))?;
        let cosets = lib(lib(HammingCode::new(d))?.coset_partition())?;
        for (i, c) in cosets.iter().enumerate() {
            ensure(c.len() as u64 == expected, || format!("d={d}: library coset {i} size {}", c.len()))?;
            for &x in c {
                let s = common::syndrome(&common::bits_of(x, n));
                ensure(s as usize == i, || format!("d={d}: {x} listed in coset {i}, syndrome {s}"))?;
            }
        }
    }
    Ok("fiber sizes 2, 16, 2048".into())
}

fn greedy_lemma() -> Outcome {
    let n = 4u32;
    let mut worst = f64::INFINITY;
    for mask in 1u32..(1 << 16) {
        let members: Vec<u32> = (0..16).filter(|x| mask >> x & 1 == 1).collect();
        let set = lib(TargetSet::new(n, members.iter().copied()))?;
        for delta in [0.1, 0.5, 0.9] {
            let q: f64 = (1.0 + delta) / 2.0;
            let bound = q.powf(n as f64 - (members.len() as f64).log2());
            let mu = lib(greedy_sv_for_set(&set, delta))?.materialize();
            let mass = mu.mass_of(members.iter().copied());
            ensure(mass >= bound - 1e-9, || format!("A={mask:#06x} δ={delta}: {mass} < {bound}"))?;
            ensure(is_sv(&mu, delta), || format!("A={mask:#06x} δ={delta}: not SV"))?;
            if mask % 61 == 0 {
                let oracle = common::greedy_distribution(n, &members, delta);
                let gap = oracle.iter().zip(mu.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                ensure(gap < 1e-12, || format!("A={mask:#06x} δ={delta}: oracle gap {gap}"))?;
            }
            worst = worst.min(mass - bound);
        }
    }
    Ok(format!("65535 sets × 3 biases, min slack {worst:.3e}"))
}

fn attack_random_tables() -> Outcome {
    let (n, m, delta) = (8u32, 4u32, 0.5);
    let bound = 4.0 * (4.0f64 / 3.0).log2();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let table: Vec<u32> = (0..1 << n).map(|_| rng.gen_range(0..1 << m)).collect();
        let f = lib(CondenserMap::table(n, m, table.clone()))?;
        let r = lib(attack_condenser(&f, delta))?;
        ensure(r.achieved_min_entropy <= bound + 1e-6, || {
            format!("table {i}: {} > {bound}", r.achieved_min_entropy)
        })?;
        if i % 50 == 0 {
            let fiber: Vec<u32> = (0..1 << n).filter(|&x| table[x as usize] == r.target_output.value()).collect();
            let mu = common::greedy_distribution(n, &fiber, delta);
            let oracle = common::min_entropy(&common::pushforward(&mu, m, |x| table[x as usize]));
            ensure((oracle - r.achieved_min_entropy).abs() < 1e-9, || format!("table {i}: oracle {oracle}"))?;
        }
        worst = worst.max(r.achieved_min_entropy);
    }
    let id = lib(attack_condenser(&lib(CondenserMap::identity(n))?, delta))?;
    let exact = n as f64 * (2.0f64 / 1.5).log2();
    ensure((id.achieved_min_entropy - exact).abs() <= 1e-9, || {
        format!("identity: {} vs {exact}", id.achieved_min_entropy)
    })?;
    Ok(format!("max achieved {worst:.4} ≤ {bound:.4}; identity gap {:.1e}", (id.achieved_min_entropy - exact).abs()))
}

fn sv_min_entropy() -> Outcome {
    let mut worst = f64::INFINITY;
    for i in 0..200u64 {
        let n = 1 + (i % 8) as u32;
        let delta = [0.1, 0.3, 0.5, 0.7, 0.9][(i % 5) as usize];
        let mu = lib(PrefixAdversary::random(n, delta, 400 + i))?.materialize();
        ensure(is_sv(&mu, delta), || format!("#{i} not SV"))?;
        let floor = n as f64 * (2.0 / (1.0 + delta)).log2();
        let h = common::min_entropy(mu.probs());
        ensure(h >= floor - 1e-6, || format!("#{i}: {h} < {floor}"))?;
        worst = worst.min(h - floor);
    }
    Ok(format!("200 sources, min slack {worst:.3e}"))
}

fn imbalance() -> Outcome {
    let mut worst_ratio = f64::INFINITY;
    for d in [2u32, 3] {
        let n = (1 << d) - 1;
        for delta in [0.25, 0.5] {
            for i in 0..200u64 {
                let mu = lib(random_potential_strong_sv(n, delta, 1000 * d as u64 + i))?;
                let nu = common::pushforward(mu.probs(), d, |x| common::f_d(x, n, d));
                let max = nu.iter().cloned().fold(0.0, f64::max);
                let min = nu.iter().cloned().fold(1.0, f64::min);
                let r = (1.0 + delta) / (1.0 - delta);
                ensure(max / min <= r + 1e-6, || format!("d={d} δ={delta} #{i}: ratio {}", max / min))?;
                let lib_ratio = imbalance_ratio(&lib(JointDistribution::new(d, nu.clone()))?);
                ensure((lib_ratio - max / min).abs() < 1e-9, || format!("library ratio {lib_ratio}"))?;
                let h = common::min_entropy(&nu);
                ensure(h >= d as f64 - log2_ratio(delta) - 1e-6, || format!("d={d} δ={delta} #{i}: H∞ {h}"))?;
                worst_ratio = worst_ratio.min(r - max / min);
            }
        }
    }
    let mu = lib(iid_biased(3, 0.75))?;
    let nu = lib(pushforward(&mu, &lib(CondenserMap::structured(2, 1))?))?;
    for (got, want) in nu.probs().iter().zip([0.4375, 0.1875, 0.1875, 0.1875]) {
        ensure((got - want).abs() < 1e-12, || format!("iid(0.75)^3 coset vector {:?}", nu.probs()))?;
    }
    let h = nu.min_entropy();
    ensure((h - 1.1926).abs() < 1e-4, || format!("iid(0.75)^3 H∞ {h}"))?;
    Ok(format!("800 sources, min ratio slack {worst_ratio:.3e}; iid(0.75)^3 H∞ = {h:.4}"))
}

fn condenser_rate() -> Outcome {
    let (d, n) = (2u32, 6u32);
    let mut worst = f64::INFINITY;
    for delta in [0.25, 0.5, 0.75] {
        let rate_bound = 1.0 - log2_ratio(delta) / d as f64;
        for i in 0..200u64 {
            let mu = lib(random_potential_strong_sv(n, delta, 7000 + i))?;
            let nu = common::pushforward(mu.probs(), 4, |x| common::f_d(x, n, d));
            let h = common::min_entropy(&nu);
            if delta == 0.5 {
                let floor = 4.0 - 2.0 * 3f64.log2();
                ensure(h >= floor - 1e-6, || format!("#{i}: {h} < {floor}"))?;
            }
            ensure(h / 4.0 >= rate_bound - 1e-6, || format!("δ={delta} #{i}: rate {}", h / 4.0))?;
            worst = worst.min(h / 4.0 - rate_bound);
        }
    }
    Ok(format!("600 sources, min rate slack {worst:.3e}"))
}

fn pinsker() -> Outcome {
    let log2e = std::f64::consts::LOG2_E;
    let mut cases: Vec<JointDistribution> = Vec::new();
    for i in 0..1000u64 {
        cases.push(lib(random_distribution(1 + (i % 6) as u32, 50_000 + i))?);
    }
    for n in 1..=6 {
        cases.push(lib(JointDistribution::uniform(n))?);
        cases.push(lib(JointDistribution::point_mass(lib(BitString::zeros(n))?))?);
    }
    let mut worst = f64::INFINITY;
    for (i, mu) in cases.iter().enumerate() {
        let n = mu.n() as f64;
        let u = 1.0 / mu.probs().len() as f64;
        let l1: f64 = mu.probs().iter().map(|p| (p - u).abs()).sum();
        let deficit = n - common::shannon(mu.probs());
        let lower = log2e / 2.0 * l1 * l1;
        let upper = 0.5 * l1 * n + (2.0 * log2e * l1 * n).sqrt();
        ensure(deficit - lower >= -1e-9 && upper - deficit >= -1e-9, || {
            format!("case {i}: {lower} ≤ {deficit} ≤ {upper} fails")
        })?;
        let s = pinsker_sandwich(mu);
        ensure((s.deficit - deficit).abs() < 1e-9 && (s.l1 - l1).abs() < 1e-9, || {
            format!("case {i}: library sandwich {s:?}")
        })?;
        worst = worst.min((deficit - lower).min(upper - deficit));
    }
    Ok(format!("{} distributions, min slack {worst:.3e}", cases.len()))
}

fn extractor_instances() -> Result<Vec<JointDistribution>, String> {
    (0..100u64)
        .map(|i| lib(random_potential_strong_sv(6, [0.1, 0.25, 0.5, 0.75][(i % 4) as usize], 90_000 + i)))
        .collect()
}

fn cond_extr() -> Outcome {
    let h = lib(CondenserMap::structured(2, 2))?;
    let m = 4u32;
    let mut worst = f64::INFINITY;
    for (i, mu) in extractor_instances()?.iter().enumerate() {
        let out = common::pushforward(mu.probs(), m, |x| common::f_d(x, 6, 2));
        let entropy = common::shannon(&out);
        let eps = 1.0 - entropy / m as f64;
        for seeds in [1u32, 2, 4] {
            let m_out = m / seeds;
            let g = lib(vse_from_condenser(&h, seeds))?;
            let slice = |x: u32, s: u32| (common::f_d(x, 6, 2) >> (m - s * m_out)) & ((1 << m_out) - 1);
            let oracle = common::very_strong_error(mu.probs(), seeds, m_out, slice);
            let err = lib(very_strong_error(&g, mu))?;
            ensure((oracle - err).abs() < 1e-12, || format!("#{i} D={seeds}: library {err} vs oracle {oracle}"))?;
            let bound = (std::f64::consts::LN_2 / 2.0 * eps * m as f64 / seeds as f64).sqrt();
            ensure(err <= bound + 1e-6, || format!("#{i} D={seeds}: {err} > {bound}"))?;
            let conds = lib(conditional_slice_entropies(&g, mu))?;
            let avg = conds.iter().sum::<f64>() / seeds as f64;
            ensure((avg - entropy / seeds as f64).abs() <= 1e-6, || {
                format!("#{i} D={seeds}: chain rule {avg} vs {}", entropy / seeds as f64)
            })?;
            worst = worst.min(bound - err);
        }
    }
    Ok(format!("300 instances, min slack {worst:.3e}"))
}

fn extr_cond() -> Outcome {
    let h = lib(CondenserMap::structured(2, 2))?;
    let m = 4u32;
    let log2e = std::f64::consts::LOG2_E;
    let mut worst = f64::INFINITY;
    for (i, mu) in extractor_instances()?.iter().enumerate() {
        for seeds in [1u32, 2, 4] {
            let m_out = m / seeds;
            let g = lib(vse_from_condenser(&h, seeds))?;
            let back = lib(entropy_condenser_from_vse(&g))?;
            ensure((0..64).all(|x| back.apply(x) == common::f_d(x, 6, 2)), || {
                format!("D={seeds}: round trip differs from f_2")
            })?;
            let delta_meas = lib(very_strong_error(&g, mu))?;
            let entropy = common::shannon(&common::pushforward(mu.probs(), m, |x| back.apply(x)));
            let floor = (seeds * m_out) as f64
                * (1.0 - delta_meas - (4.0 * log2e * delta_meas / m_out as f64).sqrt());
            ensure(entropy >= floor - 1e-6, || format!("#{i} D={seeds}: {entropy} < {floor}"))?;
            worst = worst.min(entropy - floor);
        }
    }
    Ok(format!("300 instances, min slack {worst:.3e}"))
}

fn streaming() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut data = vec![0u8; 1 << 20];
    rng.fill(&mut data[..]);
    let bits: Vec<bool> = data.view_bits::<Msb0>().iter().map(|b| *b).collect();
    let mut rates = Vec::new();
    for d in 2..=8u32 {
        let block = (1usize << d) - 1;
        let start = Instant::now();
        let (streamed, summary) = lib(condense_bytes(d, &data))?;
        let secs = start.elapsed().as_secs_f64();
        let mut out: BitVec<u8, Msb0> = BitVec::new();
        for chunk in bits.chunks_exact(block) {
            let s = common::syndrome(chunk);
            for k in (0..d).rev() {
                out.push(s >> k & 1 == 1);
            }
        }
        let whole = out.len() / 8;
        ensure(summary.dropped.input_tail as usize == bits.len() % block, || format!("d={d}: input tail"))?;
        ensure(summary.dropped.output_tail as usize == out.len() % 8, || format!("d={d}: output tail"))?;
        ensure(streamed.as_slice() == &out.as_raw_slice()[..whole], || format!("d={d}: bytes differ"))?;
        rates.push(format!("d={d} {:.1} MiB/s", 1.0 / secs.max(1e-9)));
    }
    Ok(rates.join(", "))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "perfect-partition", limit: Some(Duration::from_secs(1)), run: perfect_partition },
        Criterion { id: 2, name: "greedy-lemma", limit: Some(Duration::from_secs(30)), run: greedy_lemma },
        Criterion { id: 3, name: "attack-random-tables", limit: Some(Duration::from_secs(60)), run: attack_random_tables },
        Criterion { id: 4, name: "sv-min-entropy", limit: None, run: sv_min_entropy },
        Criterion { id: 5, name: "imbalance", limit: None, run: imbalance },
        Criterion { id: 6, name: "condenser-rate", limit: None, run: condenser_rate },
        Criterion { id: 7, name: "pinsker-sandwich", limit: None, run: pinsker },
        Criterion { id: 8, name: "condenser-to-extractor", limit: None, run: cond_extr },
        Criterion { id: 9, name: "extractor-to-condenser", limit: None, run: extr_cond },
        Criterion { id: 10, name: "streaming-equivalence", limit: None, run: streaming },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d.clone()),
            Err(e) => ("FAIL", e.clone()),
        };
        if result.is_err() {
            failed += 1;
        }
        println!("criterion {:>2} {:<24} {tag} ({elapsed:.2?}) {detail}", c.id, c.name);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
