//! Hamming codes of length `2^d - 1` and their syndrome map.
//!
//! Column `j` of the parity-check matrix `M_d` is the binary representation
//! of `j`, row 1 holding the most significant bit. The syndrome of a block is
//! therefore the XOR of the (1-based) positions of its set bits, and it names
//! the coset `Ham_d ⊕ e_i` that contains the block.

use bitvec::prelude::*;

use crate::bitdist::BitString;
use crate::error::{Error, Result};

/// Largest `d` supported by the syndrome and streaming paths.
pub const MAX_D: u32 = 8;
/// Largest `d` for operations that enumerate all `2^(2^d - 1)` blocks.
pub const MAX_ENUM_D: u32 = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HammingCode {
    d: u32,
    parity_matrix: Vec<Vec<bool>>,
}

impl HammingCode {
    pub fn new(d: u32) -> Result<Self> {
        if !(2..=MAX_D).contains(&d) {
            return Err(Error::InvalidParameter(format!(
                "Hamming parameter d must be in 2..={MAX_D}, got {d}"
            )));
        }
        let block_len = (1u32 << d) - 1;
        let parity_matrix = (0..d)
            .map(|row| {
                (1..=block_len)
                    .map(|col| (col >> (d - 1 - row)) & 1 == 1)
                    .collect()
            })
            .collect();
        Ok(HammingCode { d, parity_matrix })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// `2^d - 1`
    pub fn block_len(&self) -> u32 {
        (1 << self.d) - 1
    }

    /// `log2` of the number of codewords, `2^d - 1 - d`.
    pub fn dimension(&self) -> u32 {
        self.block_len() - self.d
    }

    /// `M_d` as `d` rows of `2^d - 1` bits.
    pub fn parity_matrix(&self) -> &[Vec<bool>] {
        &self.parity_matrix
    }

    fn check_block(&self, len: u32) -> Result<()> {
        if len != self.block_len() {
            return Err(Error::WidthMismatch {
                expected: self.block_len(),
                got: len,
            });
        }
        Ok(())
    }

    /// `M_d · x` over GF(2), as a `d`-bit string.
    pub fn syndrome(&self, block: &BitString) -> Result<BitString> {
        self.check_block(block.len())?;
        let value = fold_positions(block.value(), self.block_len());
        BitString::new(self.d, value)
    }

    /// Syndrome of a block held in a bit slice, MSB-first.
    pub fn syndrome_bits(&self, block: &BitSlice<u8, Msb0>) -> Result<u32> {
        self.check_block(block.len() as u32)?;
        Ok(block.iter_ones().fold(0u32, |s, pos| s ^ (pos as u32 + 1)))
    }

    pub fn is_codeword(&self, block: &BitString) -> Result<bool> {
        Ok(self.syndrome(block)?.value() == 0)
    }

    /// The `2^d` cosets `Ham_d^i = Ham_d ⊕ e_i`, indexed by `i`, each listing
    /// block encodings in increasing order. Coset 0 is the code itself.
    pub fn coset_partition(&self) -> Result<Vec<Vec<u32>>> {
        if self.d > MAX_ENUM_D {
            return Err(Error::TooLarge(format!(
                "coset enumeration needs d <= {MAX_ENUM_D}, got {}",
                self.d
            )));
        }
        let len = self.block_len();
        let mut cosets = vec![Vec::with_capacity(1 << self.dimension()); 1 << self.d];
        for x in 0..1u32 << len {
            cosets[fold_positions(x, len) as usize].push(x);
        }
        Ok(cosets)
    }
}

/// XOR of the 1-based MSB-first positions of the set bits of a `len`-bit word.
pub(crate) fn fold_positions(word: u32, len: u32) -> u32 {
    let mut s = 0u32;
    let mut rest = word;
    while rest != 0 {
        let tz = rest.trailing_zeros();
        s ^= len - tz;
        rest &= rest - 1;
    }
    s
}
