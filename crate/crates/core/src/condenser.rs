//! The block condenser `f_d`: split the input into blocks of `2^d - 1` bits
//! and replace each block by its Hamming syndrome.
//!
//! Three forms are provided: [`CondenserMap`] for exact analysis on small
//! widths, [`condense`] on in-memory bit sequences, and [`StreamCondenser`]
//! / [`condense_stream`] for byte streams of any length.

use std::io::{self, Read, Write};

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitdist::{check_width, pushforward, JointDistribution, ENTROPY_TOL, HARD_MAX_N};
use crate::error::{Error, Result};
use crate::hamming::{fold_positions, HammingCode, MAX_D};
use crate::sv_models::{check_delta, edge_ratio, is_strong_sv};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CondenserBody {
    /// `f_d` on `k` blocks.
    Structured { d: u32, k: u32 },
    /// Explicit outputs for all `2^n` inputs.
    Table(Vec<u32>),
}

/// A function `{0,1}^n -> {0,1}^m` on widths small enough to enumerate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CondenserMap {
    n: u32,
    m: u32,
    body: CondenserBody,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    n: u32,
    m: u32,
    table: Vec<u32>,
}

impl CondenserMap {
    /// `f_d` with `n = k(2^d - 1)` and `m = kd`; `n` is capped at 24.
    pub fn structured(d: u32, k: u32) -> Result<Self> {
        let code = HammingCode::new(d)?;
        if k == 0 {
            return Err(Error::InvalidParameter("block count must be positive".into()));
        }
        let n = k * code.block_len();
        if n > HARD_MAX_N {
            return Err(Error::TooWide { n, max: HARD_MAX_N });
        }
        Ok(CondenserMap {
            n,
            m: k * d,
            body: CondenserBody::Structured { d, k },
        })
    }

    pub fn table(n: u32, m: u32, table: Vec<u32>) -> Result<Self> {
        check_width(n)?;
        if m > HARD_MAX_N {
            return Err(Error::TooWide { n: m, max: HARD_MAX_N });
        }
        if table.len() != 1usize << n {
            return Err(Error::InvalidParameter(format!(
                "table has {} entries, expected {}",
                table.len(),
                1usize << n
            )));
        }
        if let Some((x, y)) = table.iter().enumerate().find(|(_, y)| **y >> m != 0) {
            return Err(Error::InvalidParameter(format!(
                "table entry {x} is {y}, which does not fit in {m} bits"
            )));
        }
        Ok(CondenserMap {
            n,
            m,
            body: CondenserBody::Table(table),
        })
    }

    pub fn identity(n: u32) -> Result<Self> {
        Self::table(n, n, (0..1u32 << n).collect())
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn body(&self) -> &CondenserBody {
        &self.body
    }

    pub fn apply(&self, x: u32) -> u32 {
        match &self.body {
            CondenserBody::Structured { d, k } => {
                let block_len = (1u32 << d) - 1;
                let mask = (1u32 << block_len) - 1;
                (0..*k).fold(0u32, |acc, b| {
                    let shift = (k - 1 - b) * block_len;
                    (acc << d) | fold_positions((x >> shift) & mask, block_len)
                })
            }
            CondenserBody::Table(t) => t[x as usize],
        }
    }

    /// All `2^n` outputs.
    pub fn to_table(&self) -> Vec<u32> {
        match &self.body {
            CondenserBody::Table(t) => t.clone(),
            CondenserBody::Structured { .. } => (0..1u32 << self.n).map(|x| self.apply(x)).collect(),
        }
    }

    /// Same function on every input, regardless of body.
    pub fn same_function(&self, other: &CondenserMap) -> bool {
        self.n == other.n
            && self.m == other.m
            && (0..1u32 << self.n).all(|x| self.apply(x) == other.apply(x))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TableFile = serde_json::from_str(text)?;
        Self::table(file.n, file.m, file.table)
    }

    /// Table form, whatever the body.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&TableFile {
            n: self.n,
            m: self.m,
            table: self.to_table(),
        })
        .expect("table serializes")
    }
}

/// `f_d` on an in-memory bit sequence whose length is a positive multiple
/// of `2^d - 1`.
pub fn condense(d: u32, input: &BitSlice<u8, Msb0>) -> Result<BitVec<u8, Msb0>> {
    let code = HammingCode::new(d)?;
    let block_len = code.block_len() as usize;
    if input.is_empty() || !input.len().is_multiple_of(block_len) {
        return Err(Error::BlockLength {
            len: input.len(),
            block_len,
        });
    }
    let mut out = BitVec::with_capacity(input.len() / block_len * d as usize);
    for block in input.chunks_exact(block_len) {
        let s = code.syndrome_bits(block)?;
        for i in (0..d).rev() {
            out.push((s >> i) & 1 == 1);
        }
    }
    Ok(out)
}

/// Bits discarded at the end of a stream.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedBits {
    /// Input bits after the last complete block.
    pub input_tail: u64,
    /// Syndrome bits that did not fill a final output byte.
    pub output_tail: u64,
}

impl DroppedBits {
    pub fn total(&self) -> u64 {
        self.input_tail + self.output_tail
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub d: u32,
    pub input_bytes: u64,
    pub blocks: u64,
    pub output_bytes: u64,
    pub dropped: DroppedBits,
}

/// Incremental `f_d` over bytes read MSB-first.
///
/// Incomplete trailing blocks and output bits that do not fill a byte are
/// dropped, never padded.
#[derive(Clone, Debug)]
pub struct StreamCondenser {
    d: u32,
    block_len: u32,
    // bits of the current block consumed so far, and their running syndrome
    pos: u32,
    syndrome: u32,
    // pending output bits, right-aligned
    acc: u32,
    acc_bits: u32,
    input_bytes: u64,
    blocks: u64,
    output_bytes: u64,
}

impl StreamCondenser {
    pub fn new(d: u32) -> Result<Self> {
        if !(2..=MAX_D).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "Hamming parameter d must be in 2..={MAX_D}, got {d}"
            )));
        }
        Ok(StreamCondenser {
            d,
            block_len: (1 << d) - 1,
            pos: 0,
            syndrome: 0,
            acc: 0,
            acc_bits: 0,
            input_bytes: 0,
            blocks: 0,
            output_bytes: 0,
        })
    }

    /// Consumes `input`, appending every completed output byte to `out`.
    pub fn push(&mut self, input: &[u8], out: &mut Vec<u8>) {
        for &byte in input {
            let mut avail = 8u32;
            while avail > 0 {
                let take = avail.min(self.block_len - self.pos);
                let bits = (byte as u32 >> (avail - take)) & ((1u32 << take) - 1);
                let mut rest = bits;
                while rest != 0 {
                    let tz = rest.trailing_zeros();
                    self.syndrome ^= self.pos + take - tz;
                    rest &= rest - 1;
                }
                self.pos += take;
                avail -= take;
                if self.pos == self.block_len {
                    self.emit(out);
                }
            }
        }
        self.input_bytes += input.len() as u64;
    }

    fn emit(&mut self, out: &mut Vec<u8>) {
        self.acc = (self.acc << self.d) | self.syndrome;
        self.acc_bits += self.d;
        self.blocks += 1;
        self.pos = 0;
        self.syndrome = 0;
        while self.acc_bits >= 8 {
            self.acc_bits -= 8;
            out.push((self.acc >> self.acc_bits) as u8);
            self.output_bytes += 1;
        }
        self.acc &= (1u32 << self.acc_bits) - 1;
    }

    pub fn finish(self) -> StreamSummary {
        StreamSummary {
            d: self.d,
            input_bytes: self.input_bytes,
            blocks: self.blocks,
            output_bytes: self.output_bytes,
            dropped: DroppedBits {
                input_tail: self.pos as u64,
                output_tail: self.acc_bits as u64,
            },
        }
    }
}

/// Streams `reader` through `f_d` into `writer`.
pub fn condense_stream<R: Read, W: Write>(d: u32, mut reader: R, mut writer: W) -> Result<StreamSummary> {
    let mut state = StreamCondenser::new(d)?;
    let mut buf = vec![0u8; 1 << 16];
    let mut out = Vec::with_capacity(1 << 16);
    loop {
        let read = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(k) => k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        };
        state.push(&buf[..read], &mut out);
        writer.write_all(&out)?;
        out.clear();
    }
    writer.flush()?;
    Ok(state.finish())
}

/// Convenience form of [`condense_stream`] on a byte slice.
pub fn condense_bytes(d: u32, input: &[u8]) -> Result<(Vec<u8>, StreamSummary)> {
    let mut state = StreamCondenser::new(d)?;
    let mut out = Vec::with_capacity(input.len() * d as usize / state.block_len as usize / 8 + 1);
    state.push(input, &mut out);
    Ok((out, state.finish()))
}

/// `max_x ν(x) / min_x ν(x)`; infinite if some entry is zero.
pub fn imbalance_ratio(nu: &JointDistribution) -> f64 {
    let probs = nu.probs();
    let max = probs.iter().copied().fold(0.0, f64::max);
    let min = probs.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Closed-form guarantees of `f_d` at bias `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    /// Output bits per input bit, `d / (2^d - 1)`.
    pub compression: f64,
    /// Guaranteed output min-entropy rate, `1 - log2((1+δ)/(1-δ)) / d`.
    pub rate_bound: f64,
    /// The rate bound is not positive and guarantees nothing.
    pub vacuous: bool,
}

pub fn theoretical_rate(d: u32, delta: f64) -> Result<RateBound> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")));
    }
    check_delta(delta)?;
    let rate_bound = 1.0 - edge_ratio(delta).log2() / d as f64;
    Ok(RateBound {
        compression: d as f64 / ((1u64 << d) - 1) as f64,
        rate_bound,
        vacuous: rate_bound <= 0.0,
    })
}

/// Exact behaviour of a condenser on one source distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondenserReport {
    pub n: u32,
    pub m: u32,
    pub delta: f64,
    pub source_strong_sv: bool,
    /// Min-entropy rate of the source.
    pub input_rate: f64,
    pub output_min_entropy: f64,
    pub output_rate: f64,
    /// Guaranteed output min-entropy rate (structured condensers only).
    pub bound: Option<f64>,
    pub vacuous: bool,
    #[serde(with = "crate::bounds::extended_float")]
    pub imbalance_ratio: f64,
    /// `d - log2((1+δ)/(1-δ))`, the floor for a single δ-imbalanced block.
    pub el3_floor: Option<f64>,
    /// Whether every applicable guarantee is met. Guarantees only apply to
    /// strong SV sources; for other sources this is vacuously true.
    pub holds: bool,
}

pub fn analyze_condenser(h: &CondenserMap, mu: &JointDistribution, delta: f64) -> Result<CondenserReport> {
    check_delta(delta)?;
    let nu = pushforward(mu, h)?;
    let strong = is_strong_sv(mu, delta);
    let output_min_entropy = nu.min_entropy();
    let output_rate = output_min_entropy / h.m() as f64;
    let imbalance = imbalance_ratio(&nu);
    let ratio = edge_ratio(delta);

    let (bound, vacuous, el3_floor) = match h.body() {
        CondenserBody::Structured { d, k } => {
            let rate = theoretical_rate(*d, delta)?;
            let el3 = (*k == 1).then(|| *d as f64 - ratio.log2());
            (Some(rate.rate_bound), rate.vacuous, el3)
        }
        CondenserBody::Table(_) => (None, false, None),
    };

    let mut holds = true;
    if strong {
        if let Some(b) = bound {
            holds &= output_rate >= b - ENTROPY_TOL;
        }
        if let Some(floor) = el3_floor {
            holds &= imbalance <= ratio + ENTROPY_TOL;
            holds &= output_min_entropy >= floor - ENTROPY_TOL;
        }
    }

    Ok(CondenserReport {
        n: h.n(),
        m: h.m(),
        delta,
        source_strong_sv: strong,
        input_rate: mu.min_entropy() / mu.n() as f64,
        output_min_entropy,
        output_rate,
        bound,
        vacuous,
        imbalance_ratio: imbalance,
        el3_floor,
        holds,
    })
}
