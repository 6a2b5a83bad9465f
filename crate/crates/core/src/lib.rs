//! Exact analysis of Santha-Vazirani sources, the Hamming-syndrome condenser,
//! greedy adversaries, and seeded extractors built from condensers.
//!
//! Bit strings are MSB-first: `x_1` is the most significant bit of the index.

pub mod attacks;
pub mod bitdist;
pub mod bounds;
pub mod condenser;
pub mod error;
pub mod extractors;
pub mod hamming;
pub mod sv_models;
pub mod verify;

pub use attacks::{attack_condenser, greedy_sv_for_set, verify_lemma_e1, AttackResult, LemmaCheck, TargetSet};
pub use bitdist::{pushforward, BitString, JointDistribution, ENTROPY_TOL, MASS_TOL};
pub use bounds::{build_report, EntropyReport, ReportContext};
pub use condenser::{
    analyze_condenser, condense, condense_bytes, condense_stream, imbalance_ratio, theoretical_rate, CondenserMap,
    CondenserReport, StreamCondenser, StreamSummary,
};
pub use error::{Error, Result};
pub use extractors::{
    claim_bound_cond_extr, claim_bound_extr_cond, entropy_condenser_from_vse, pinsker_sandwich, strong_error,
    very_strong_error, vse_from_condenser, vse_report, SeededMap,
};
pub use hamming::HammingCode;
pub use sv_models::{check_strong_sv, check_sv, is_strong_sv, is_sv, PotentialStrongSV, PrefixAdversary, SVParams};
