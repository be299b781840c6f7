use serde::{Deserialize, Serialize};

use crate::jacobi::{CouplingRule, SparseSpec};

/// Spectral type on `(-2, 2)` decided by the `Σ v_j²` dichotomy for
/// sufficiently sparse sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Singular,
    AbsolutelyContinuous,
    Inconclusive,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Singular => "singular",
            Classification::AbsolutelyContinuous => "absolutely_continuous",
            Classification::Inconclusive => "inconclusive",
        })
    }
}

pub fn classify_measure(spec: &SparseSpec) -> Classification {
    classify_rule(spec.coupling_rule()).unwrap_or_else(|| match spec.envelope().square_summable() {
        Some(true) => Classification::AbsolutelyContinuous,
        _ => Classification::Inconclusive,
    })
}

fn classify_rule(rule: &CouplingRule) -> Option<Classification> {
    match *rule {
        CouplingRule::Zero => Some(Classification::AbsolutelyContinuous),
        CouplingRule::PowerLaw {
            amplitude,
            exponent,
        } => Some(if amplitude == 0.0 {
            Classification::AbsolutelyContinuous
        } else if exponent <= 0.0 {
            // v_j does not tend to zero; outside the sparse setting
            Classification::Inconclusive
        } else if 2.0 * exponent <= 1.0 {
            Classification::Singular
        } else {
            Classification::AbsolutelyContinuous
        }),
        CouplingRule::Geometric { amplitude, ratio } => Some(if amplitude == 0.0 || ratio.abs() < 1.0 {
            Classification::AbsolutelyContinuous
        } else {
            Classification::Inconclusive
        }),
        CouplingRule::Explicit { .. } => None,
    }
}
