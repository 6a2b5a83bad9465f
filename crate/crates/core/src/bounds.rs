//! Closed-form bounds and the `report_v1` entropy report.
//!
//! All entropies are in bits.

use serde::{Deserialize, Serialize};

use crate::bitdist::{pushforward, JointDistribution, ENTROPY_TOL};
use crate::condenser::{analyze_condenser, imbalance_ratio, CondenserBody, CondenserMap, CondenserReport};
use crate::error::Result;
use crate::extractors::{pinsker_sandwich, vse_report, VSEReport};
use crate::sv_models::{check_delta, check_strong_sv, check_sv, edge_ratio, Violation};

pub const REPORT_VERSION: &str = "report_v1";

/// Min-entropy floor of every SV source with bias `δ`: `n·log2(2/(1+δ))`.
pub fn sv_min_entropy_floor(n: u32, delta: f64) -> f64 {
    n as f64 * (2.0 / (1.0 + delta)).log2()
}

/// Min-entropy floor of a δ-imbalanced distribution on `m` bits:
/// `m - log2((1+δ)/(1-δ))`.
pub fn imbalanced_floor(m: u32, delta: f64) -> f64 {
    m as f64 - edge_ratio(delta).log2()
}

/// Output min-entropy floor of `f_d` on `k` blocks of a strong SV source:
/// `k·d - k·log2((1+δ)/(1-δ))`.
pub fn condensed_min_entropy_floor(d: u32, k: u32, delta: f64) -> f64 {
    k as f64 * (d as f64 - edge_ratio(delta).log2())
}

/// Serde adapter writing non-finite floats as the strings `"inf"`, `"-inf"`
/// and `"nan"`, which plain JSON numbers cannot express.
pub mod extended_float {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(D::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    /// Guaranteed output min-entropy rate of a structured condenser.
    pub theorem2_rate: Option<f64>,
    /// Min-entropy floor of the source as an SV source.
    pub sv_floor: f64,
    /// Min-entropy floor of the analyzed distribution if it is δ-imbalanced.
    pub el3_floor: f64,
    pub pinsker_lower: f64,
    pub pinsker_upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub n: u32,
    pub min_entropy: f64,
    pub shannon_entropy: f64,
    pub is_sv: bool,
    pub is_strong_sv: bool,
    pub sv_violation: Option<Violation>,
    pub strong_sv_violation: Option<Violation>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub applicable: bool,
    pub holds: bool,
}

/// Measured entropies of a distribution (the condenser output when a
/// condenser is given), with every bound that applies to it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub version: String,
    pub delta: f64,
    /// Width of the source.
    pub n: u32,
    /// Width of the analyzed distribution.
    pub m: u32,
    pub min_entropy: f64,
    pub shannon_entropy: f64,
    pub min_rate: f64,
    pub entropy_rate: f64,
    #[serde(with = "extended_float")]
    pub imbalance: f64,
    pub bounds: BoundSet,
    pub source: SourceSummary,
    pub condenser: Option<CondenserReport>,
    pub extractor: Option<VSEReport>,
    pub checks: Vec<Check>,
    pub all_hold: bool,
}

impl EntropyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Optional maps to analyze alongside the source.
#[derive(Clone, Debug, Default)]
pub struct ReportContext {
    pub condenser: Option<CondenserMap>,
    /// Seed count `D` for slicing the condenser into a seeded extractor.
    pub seeds: Option<u32>,
}

pub fn build_report(mu: &JointDistribution, context: &ReportContext, delta: f64) -> Result<EntropyReport> {
    check_delta(delta)?;
    let sv_violation = check_sv(mu, delta);
    let strong_sv_violation = check_strong_sv(mu, delta);
    let source = SourceSummary {
        n: mu.n(),
        min_entropy: mu.min_entropy(),
        shannon_entropy: mu.shannon_entropy(),
        is_sv: sv_violation.is_none(),
        is_strong_sv: strong_sv_violation.is_none(),
        sv_violation,
        strong_sv_violation,
    };

    let (nu, condenser) = match &context.condenser {
        Some(h) => (pushforward(mu, h)?, Some(analyze_condenser(h, mu, delta)?)),
        None => (mu.clone(), None),
    };
    let extractor = match (&context.condenser, context.seeds) {
        (Some(h), Some(seeds)) => Some(vse_report(h, seeds, mu)?),
        _ => None,
    };

    let m = nu.n();
    let min_entropy = nu.min_entropy();
    let shannon_entropy = nu.shannon_entropy();
    let (min_rate, entropy_rate) = if m == 0 {
        (1.0, 1.0)
    } else {
        (min_entropy / m as f64, shannon_entropy / m as f64)
    };
    let imbalance = imbalance_ratio(&nu);
    let sandwich = pinsker_sandwich(&nu);
    let theorem2_rate = condenser.as_ref().and_then(|c| c.bound);
    let bounds = BoundSet {
        theorem2_rate,
        sv_floor: sv_min_entropy_floor(mu.n(), delta),
        el3_floor: imbalanced_floor(m, delta),
        pinsker_lower: sandwich.lower,
        pinsker_upper: sandwich.upper,
    };

    let imbalanced = imbalance <= edge_ratio(delta) + ENTROPY_TOL;
    let single_block = matches!(
        context.condenser.as_ref().map(CondenserMap::body),
        Some(CondenserBody::Structured { k: 1, .. })
    );
    let mut checks = vec![
        Check {
            name: "sv_source".into(),
            applicable: true,
            holds: source.is_sv,
        },
        Check {
            name: "sv_floor".into(),
            applicable: source.is_sv,
            holds: source.min_entropy >= bounds.sv_floor - ENTROPY_TOL,
        },
        Check {
            name: "rates_ordered".into(),
            applicable: true,
            holds: min_rate <= entropy_rate + ENTROPY_TOL,
        },
        Check {
            name: "pinsker_sandwich".into(),
            applicable: true,
            holds: sandwich.holds(),
        },
        Check {
            name: "el3_floor".into(),
            applicable: imbalanced,
            holds: min_entropy >= bounds.el3_floor - ENTROPY_TOL,
        },
    ];
    if let Some(c) = &condenser {
        checks.push(Check {
            name: "theorem2_rate".into(),
            applicable: source.is_strong_sv && c.bound.is_some(),
            holds: c.bound.is_none_or(|b| c.output_rate >= b - ENTROPY_TOL),
        });
        checks.push(Check {
            name: "imbalance".into(),
            applicable: source.is_strong_sv && single_block,
            holds: c.imbalance_ratio <= edge_ratio(delta) + ENTROPY_TOL,
        });
    }
    if let Some(e) = &extractor {
        checks.push(Check {
            name: "cond_extr".into(),
            applicable: true,
            holds: e.very_strong_error <= e.claim_bound + ENTROPY_TOL,
        });
        checks.push(Check {
            name: "extr_cond".into(),
            applicable: true,
            holds: (e.concat_entropy_rate - e.concat_rate_floor) * m as f64 >= -ENTROPY_TOL,
        });
    }
    let all_hold = checks.iter().all(|c| !c.applicable || c.holds);

    Ok(EntropyReport {
        version: REPORT_VERSION.into(),
        delta,
        n: mu.n(),
        m,
        min_entropy,
        shannon_entropy,
        min_rate,
        entropy_rate,
        imbalance,
        bounds,
        source,
        condenser,
        extractor,
        checks,
        all_hold,
    })
}
