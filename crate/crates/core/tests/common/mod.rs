//! Brute-force reference computations, written without the library's
//! internals so they can serve as oracles.

#![allow(dead_code)]

use std::collections::HashMap;

pub fn bits_of(x: u32, n: u32) -> Vec<bool> {
    (0..n).map(|i| (x >> (n - 1 - i)) & 1 == 1).collect()
}

/// Syndrome as XOR of the 1-based positions of set bits.
pub fn syndrome(bits: &[bool]) -> u32 {
    bits.iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .fold(0, |acc, (i, _)| acc ^ (i as u32 + 1))
}

/// `f_d` on an `n`-bit integer: concatenated block syndromes.
pub fn f_d(x: u32, n: u32, d: u32) -> u32 {
    let bits = bits_of(x, n);
    bits.chunks((1 << d) - 1).fold(0, |acc, block| (acc << d) | syndrome(block))
}

pub fn pushforward(probs: &[f64], m: u32, f: impl Fn(u32) -> u32) -> Vec<f64> {
    let mut out = vec![0.0; 1 << m];
    for (x, p) in probs.iter().enumerate() {
        out[f(x as u32) as usize] += p;
    }
    out
}

pub fn min_entropy(probs: &[f64]) -> f64 {
    -probs.iter().cloned().fold(0.0, f64::max).log2()
}

pub fn shannon(probs: &[f64]) -> f64 {
    probs.iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum()
}

/// Greedy adversary distribution for `set`, computed path by path.
pub fn greedy_distribution(n: u32, set: &[u32], delta: f64) -> Vec<f64> {
    let (p, q) = ((1.0 - delta) / 2.0, (1.0 + delta) / 2.0);
    let mut count = vec![vec![0usize; 1 << n]; n as usize + 1];
    for &a in set {
        for len in 0..=n {
            count[len as usize][(a >> (n - len)) as usize] += 1;
        }
    }
    (0..1u32 << n)
        .map(|x| {
            (0..n)
                .map(|k| {
                    let u = if k == 0 { 0 } else { x >> (n - k) };
                    let zeros = count[k as usize + 1][(u << 1) as usize];
                    let ones = count[k as usize + 1][((u << 1) | 1) as usize];
                    let favoured = if zeros >= ones { 0 } else { 1 };
                    if (x >> (n - 1 - k)) & 1 == favoured {
                        q
                    } else {
                        p
                    }
                })
                .product()
        })
        .collect()
}

/// Very strong extractor error by literal enumeration over seeds and inputs.
pub fn very_strong_error(probs: &[f64], seeds: u32, m_out: u32, g: impl Fn(u32, u32) -> u32) -> f64 {
    let mut total = 0.0;
    for t in 1..=seeds {
        let mut cells: HashMap<Vec<u32>, Vec<f64>> = HashMap::new();
        for (z, &pz) in probs.iter().enumerate() {
            let history: Vec<u32> = (1..t).map(|s| g(z as u32, s)).collect();
            let cell = cells.entry(history).or_insert_with(|| vec![0.0; 1 << m_out]);
            cell[g(z as u32, t) as usize] += pz;
        }
        for cell in cells.values() {
            let mass: f64 = cell.iter().sum();
            if mass > 0.0 {
                let u = 1.0 / cell.len() as f64;
                total += mass * 0.5 * cell.iter().map(|c| (c / mass - u).abs()).sum::<f64>();
            }
        }
    }
    total / seeds as f64
}
