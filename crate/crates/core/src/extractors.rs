//! Seeded maps built from condensers and back, with exact evaluation of the
//! strong and very strong extractor errors.
//!
//! Seeds are numbered `1..=D`. Slicing a condenser output `h(x)` into `D`
//! pieces of `m/D` bits gives the seeded map `g(x, s)`; concatenating the
//! outputs of a seeded map over all seeds gives back a deterministic map.

use serde::{Deserialize, Serialize};

use crate::bitdist::{check_width, shannon_of, stable_sum, JointDistribution, MASS_TOL};
use crate::condenser::CondenserMap;
use crate::error::{Error, Result};

/// Size limits for exact very-strong-error evaluation.
pub const MAX_VSE_INPUT_BITS: u32 = 16;
pub const MAX_VSE_OUTPUT_BITS: u32 = 16;
/// Widest concatenated output accepted by [`entropy_condenser_from_vse`].
pub const MAX_CONCAT_BITS: u32 = 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SeededBody {
    /// `g(x, s)` is the `s`-th consecutive slice of `h(x)`.
    Sliced(CondenserMap),
    /// `tables[s - 1][x]`
    Table(Vec<Vec<u32>>),
}

/// A map `{0,1}^n × [D] -> {0,1}^m_out`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededMap {
    n: u32,
    seeds: u32,
    m_out: u32,
    body: SeededBody,
}

#[derive(Serialize, Deserialize)]
struct SeededFile {
    n: u32,
    #[serde(rename = "D")]
    seeds: u32,
    m_out: u32,
    table: Vec<Vec<u32>>,
}

impl SeededMap {
    pub fn table(n: u32, m_out: u32, tables: Vec<Vec<u32>>) -> Result<Self> {
        check_width(n)?;
        if tables.is_empty() {
            return Err(Error::InvalidParameter("seed count must be positive".into()));
        }
        if m_out == 0 || m_out > 24 {
            return Err(Error::InvalidParameter(format!(
                "output width must be in 1..=24, got {m_out}"
            )));
        }
        for (s, t) in tables.iter().enumerate() {
            if t.len() != 1usize << n {
                return Err(Error::InvalidParameter(format!(
                    "seed {} table has {} entries, expected {}",
                    s + 1,
                    t.len(),
                    1usize << n
                )));
            }
            if let Some(y) = t.iter().find(|y| **y >> m_out != 0) {
                return Err(Error::InvalidParameter(format!(
                    "seed {} output {y} does not fit in {m_out} bits",
                    s + 1
                )));
            }
        }
        Ok(SeededMap {
            n,
            seeds: tables.len() as u32,
            m_out,
            body: SeededBody::Table(tables),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of seeds `D`.
    pub fn seeds(&self) -> u32 {
        self.seeds
    }

    pub fn m_out(&self) -> u32 {
        self.m_out
    }

    pub fn body(&self) -> &SeededBody {
        &self.body
    }

    /// `g(x, s)` for `s` in `1..=D`.
    pub fn output(&self, x: u32, s: u32) -> u32 {
        assert!(s >= 1 && s <= self.seeds, "seed {s} out of 1..={}", self.seeds);
        match &self.body {
            SeededBody::Sliced(h) => {
                let shift = (self.seeds - s) * self.m_out;
                (h.apply(x) >> shift) & ((1u32 << self.m_out) - 1)
            }
            SeededBody::Table(t) => t[(s - 1) as usize][x as usize],
        }
    }

    /// `g(x, 1) ∘ ... ∘ g(x, D)` as a `D·m_out`-bit value.
    pub fn concatenated(&self, x: u32) -> u64 {
        (1..=self.seeds).fold(0u64, |acc, s| (acc << self.m_out) | self.output(x, s) as u64)
    }

    fn check_source(&self, mu: &JointDistribution) -> Result<()> {
        if mu.n() != self.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: mu.n(),
            });
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SeededFile = serde_json::from_str(text)?;
        if file.table.len() as u32 != file.seeds {
            return Err(Error::InvalidParameter(format!(
                "D = {} but {} seed tables given",
                file.seeds,
                file.table.len()
            )));
        }
        Self::table(file.n, file.m_out, file.table)
    }

    pub fn to_json(&self) -> String {
        let table = (1..=self.seeds)
            .map(|s| (0..1u32 << self.n).map(|x| self.output(x, s)).collect())
            .collect();
        serde_json::to_string(&SeededFile {
            n: self.n,
            seeds: self.seeds,
            m_out: self.m_out,
            table,
        })
        .expect("seeded map serializes")
    }
}

/// Slices `h` into `D` consecutive pieces, seed 1 taking the leftmost bits.
pub fn vse_from_condenser(h: &CondenserMap, seeds: u32) -> Result<SeededMap> {
    if seeds == 0 || !h.m().is_multiple_of(seeds) {
        return Err(Error::InvalidParameter(format!(
            "seed count {seeds} must divide the output width {}",
            h.m()
        )));
    }
    Ok(SeededMap {
        n: h.n(),
        seeds,
        m_out: h.m() / seeds,
        body: SeededBody::Sliced(h.clone()),
    })
}

/// `(1/D) Σ_s ½‖ν_s - U‖₁` where `ν_s` is the distribution of `g(X, s)`.
pub fn strong_error(g: &SeededMap, mu: &JointDistribution) -> Result<f64> {
    g.check_source(mu)?;
    let per_seed = (1..=g.seeds())
        .map(|s| {
            let nu = mu.pushforward_by(g.m_out(), |x| g.output(x, s))?;
            Ok(0.5 * nu.l1_to_uniform())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(stable_sum(per_seed) / g.seeds() as f64)
}

/// Joint masses of (outputs for seeds `1..t`, output for seed `t`), laid
/// out as `history << m_out | y`.
fn seed_history_joint(g: &SeededMap, mu: &JointDistribution, t: u32) -> Vec<f64> {
    let hist_bits = (t - 1) * g.m_out();
    let mut joint = vec![0.0; 1usize << (hist_bits + g.m_out())];
    let drop = (g.seeds() - t) * g.m_out();
    for (x, &p) in mu.probs().iter().enumerate() {
        if p > 0.0 {
            let key = g.concatenated(x as u32) >> drop;
            joint[key as usize] += p;
        }
    }
    joint
}

fn check_vse_size(g: &SeededMap) -> Result<()> {
    let total = g.seeds() * g.m_out();
    if g.n() > MAX_VSE_INPUT_BITS || total > MAX_VSE_OUTPUT_BITS {
        return Err(Error::TooLarge(format!(
            "very strong error needs n <= {MAX_VSE_INPUT_BITS} and D·m_out <= \
             {MAX_VSE_OUTPUT_BITS}, got n = {}, D·m_out = {total}",
            g.n()
        )));
    }
    Ok(())
}

/// `E_{T, Z~μ} ½‖ν_{T, g(Z,1..T-1)} - U‖₁`, evaluated exactly.
///
/// The conditioning events are generated by actual inputs, so each has
/// positive mass; inputs with equal history share one conditional and are
/// aggregated.
pub fn very_strong_error(g: &SeededMap, mu: &JointDistribution) -> Result<f64> {
    g.check_source(mu)?;
    check_vse_size(g)?;
    let width = 1usize << g.m_out();
    let uniform = 1.0 / width as f64;
    let mut per_seed = Vec::with_capacity(g.seeds() as usize);
    for t in 1..=g.seeds() {
        let joint = seed_history_joint(g, mu, t);
        let err = stable_sum(joint.chunks(width).map(|cell| {
            let mass = stable_sum(cell.iter().copied());
            if mass <= 0.0 {
                return 0.0;
            }
            // mass · ½‖cell/mass - U‖₁
            0.5 * stable_sum(cell.iter().map(|j| (j - mass * uniform).abs()))
        }));
        per_seed.push(err);
    }
    Ok(stable_sum(per_seed) / g.seeds() as f64)
}

/// `H(g(X, t) | g(X, 1), ..., g(X, t - 1))` for each `t` in `1..=D`.
pub fn conditional_slice_entropies(g: &SeededMap, mu: &JointDistribution) -> Result<Vec<f64>> {
    g.check_source(mu)?;
    check_vse_size(g)?;
    let width = 1usize << g.m_out();
    Ok((1..=g.seeds())
        .map(|t| {
            let joint = seed_history_joint(g, mu, t);
            stable_sum(joint.chunks(width).map(|cell| {
                let mass = stable_sum(cell.iter().copied());
                if mass <= 0.0 {
                    return 0.0;
                }
                let cond: Vec<f64> = cell.iter().map(|j| j / mass).collect();
                mass * shannon_of(&cond)
            }))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimBound {
    pub bound: f64,
    /// `(ln 2 / 2)·ε ≤ D/m`; outside it the bound exceeds 1.
    pub precondition_met: bool,
}

/// Very strong extractor error guaranteed for the `D`-slicing of an
/// entropy condenser with entropy deficiency rate `ε`:
/// `sqrt((ln 2 / 2)·ε·m/D)`.
pub fn claim_bound_cond_extr(entropy_deficit_rate: f64, m: u32, seeds: u32) -> ClaimBound {
    let eps = entropy_deficit_rate.max(0.0);
    let ln2 = std::f64::consts::LN_2;
    ClaimBound {
        bound: (ln2 / 2.0 * eps * m as f64 / seeds as f64).sqrt(),
        precondition_met: ln2 / 2.0 * eps <= seeds as f64 / m as f64 + MASS_TOL,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRateBound {
    pub rate: f64,
    pub vacuous: bool,
}

/// Entropy rate guaranteed for the concatenation of a very strong
/// `δ`-extractor with `m`-bit outputs: `1 - δ - sqrt(4·log2(e)·δ/m)`.
pub fn claim_bound_extr_cond(delta_vse: f64, m: u32) -> Result<EntropyRateBound> {
    if !(0.0..=1.0).contains(&delta_vse) || m == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= δ <= 1 and m >= 1, got δ = {delta_vse}, m = {m}"
        )));
    }
    let log2e = std::f64::consts::LOG2_E;
    let rate = 1.0 - delta_vse - (4.0 * log2e * delta_vse / m as f64).sqrt();
    Ok(EntropyRateBound {
        rate,
        vacuous: rate <= 0.0,
    })
}

/// `h_g(x) = g(x, 1) ∘ ... ∘ g(x, D)` as a table.
pub fn entropy_condenser_from_vse(g: &SeededMap) -> Result<CondenserMap> {
    let width = g.seeds() * g.m_out();
    if width > MAX_CONCAT_BITS {
        return Err(Error::TooLarge(format!(
            "concatenated width {width} exceeds {MAX_CONCAT_BITS}"
        )));
    }
    let table = (0..1u32 << g.n()).map(|x| g.concatenated(x) as u32).collect();
    CondenserMap::table(g.n(), width, table)
}

/// Entropy deficit of `μ` against the uniform distribution on its cube,
/// with the two-sided estimate in terms of `‖μ - U‖₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    /// `(log2 e / 2)·‖μ - U‖₁²`
    pub lower: f64,
    /// `n - H(μ)`
    pub deficit: f64,
    /// `½‖μ - U‖₁·n + sqrt(2·log2 e·‖μ - U‖₁·n)`
    pub upper: f64,
    pub l1: f64,
}

impl Sandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.deficit + MASS_TOL && self.deficit <= self.upper + MASS_TOL
    }
}

pub fn pinsker_sandwich(mu: &JointDistribution) -> Sandwich {
    let log2e = std::f64::consts::LOG2_E;
    let log_size = mu.n() as f64;
    let l1 = mu.l1_to_uniform();
    Sandwich {
        lower: log2e / 2.0 * l1 * l1,
        deficit: (log_size - mu.shannon_entropy()).max(0.0),
        upper: 0.5 * l1 * log_size + (2.0 * log2e * l1 * log_size).sqrt(),
        l1,
    }
}

/// Exact extractor quality of the `D`-slicing of `h` on one source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VSEReport {
    pub seeds: u32,
    pub m_out: u32,
    pub strong_error: f64,
    pub very_strong_error: f64,
    /// `1 - H(h(X))/m`
    pub entropy_deficit_rate: f64,
    pub claim_bound: f64,
    pub precondition_met: bool,
    /// Entropy rate floor for the concatenation given the measured
    /// very strong error.
    pub concat_rate_floor: f64,
    pub concat_entropy_rate: f64,
    pub holds: bool,
}

pub fn vse_report(h: &CondenserMap, seeds: u32, mu: &JointDistribution) -> Result<VSEReport> {
    let g = vse_from_condenser(h, seeds)?;
    let strong = strong_error(&g, mu)?;
    let very_strong = very_strong_error(&g, mu)?;
    let out_entropy = crate::bitdist::pushforward(mu, h)?.shannon_entropy();
    let m = h.m() as f64;
    let eps = (1.0 - out_entropy / m).max(0.0);
    let claim = claim_bound_cond_extr(eps, h.m(), seeds);
    let floor = claim_bound_extr_cond(very_strong.min(1.0), g.m_out())?;
    let holds = very_strong <= claim.bound + crate::bitdist::ENTROPY_TOL
        && out_entropy >= m * floor.rate - crate::bitdist::ENTROPY_TOL;
    Ok(VSEReport {
        seeds,
        m_out: g.m_out(),
        strong_error: strong,
        very_strong_error: very_strong,
        entropy_deficit_rate: eps,
        claim_bound: claim.bound,
        precondition_met: claim.precondition_met,
        concat_rate_floor: floor.rate,
        concat_entropy_rate: out_entropy / m,
        holds,
    })
}
