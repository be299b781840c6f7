//! Sparse perturbation data: coupling rules, decay envelopes and site
//! positions, plus the structured text form of a spec.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("site positions must be strictly increasing (N_{index} = {value})")]
    SitesNotIncreasing { index: usize, value: u64 },
    #[error("first site must be at least 2, got {0}")]
    FirstSiteTooSmall(u64),
    #[error("coupling rule provides {available} values but {needed} sites are placed")]
    MissingCouplings { available: usize, needed: usize },
    #[error("envelope is not non-increasing: {0}")]
    EnvelopeIncreasing(String),
    #[error("envelope {envelope} is below |v_{index}| = {coupling}")]
    EnvelopeBelowCoupling {
        index: usize,
        envelope: f64,
        coupling: f64,
    },
    #[error("ratio-sparse spec has decreasing ratio N_{{j+1}}/N_j at j = {0}")]
    RatioNotSparse(usize),
    #[error("cannot derive an envelope for {0}")]
    NoEnvelope(String),
    #[error("site list is adaptive; run the sparsifier to materialize it")]
    AdaptiveSites,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("serialization error: {0}")]
    Serialize(String),
}

/// Closed-form or explicit coupling sequence `v_j`, `j ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CouplingRule {
    /// `v_j = amplitude · j^(-exponent)`
    PowerLaw { amplitude: f64, exponent: f64 },
    /// `v_j = amplitude · ratio^j`
    Geometric { amplitude: f64, ratio: f64 },
    Zero,
    Explicit { values: Vec<f64> },
}

impl CouplingRule {
    /// `v_j` for `j ≥ 1`, or `None` past the end of an explicit list.
    pub fn value(&self, j: usize) -> Option<f64> {
        debug_assert!(j >= 1);
        match self {
            CouplingRule::PowerLaw {
                amplitude,
                exponent,
            } => Some(amplitude * (j as f64).powf(-exponent)),
            CouplingRule::Geometric { amplitude, ratio } => Some(amplitude * ratio.powi(j as i32)),
            CouplingRule::Zero => Some(0.0),
            CouplingRule::Explicit { values } => values.get(j - 1).copied(),
        }
    }

    pub fn inverse_sqrt() -> Self {
        CouplingRule::PowerLaw {
            amplitude: 1.0,
            exponent: 0.5,
        }
    }
}

/// Non-increasing bound `envelope_j ≥ |v_j|`, tending to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvelopeRule {
    /// Derived from the coupling rule.
    #[default]
    Auto,
    PowerLaw {
        amplitude: f64,
        exponent: f64,
    },
    Geometric {
        amplitude: f64,
        ratio: f64,
    },
    Constant {
        value: f64,
    },
    /// Listed values for `j = 1..=len`, zero afterwards.
    Tabulated {
        values: Vec<f64>,
    },
}

impl EnvelopeRule {
    /// Replace `Auto` by a concrete rule derived from `coupling`.
    pub fn resolve(&self, coupling: &CouplingRule) -> Result<EnvelopeRule, SpecError> {
        if *self != EnvelopeRule::Auto {
            return Ok(self.clone());
        }
        Ok(match coupling {
            CouplingRule::PowerLaw {
                amplitude,
                exponent,
            } => {
                if *exponent < 0.0 && *amplitude != 0.0 {
                    return Err(SpecError::NoEnvelope(format!("{coupling:?}")));
                }
                if *exponent == 0.0 || *amplitude == 0.0 {
                    EnvelopeRule::Constant {
                        value: amplitude.abs(),
                    }
                } else {
                    EnvelopeRule::PowerLaw {
                        amplitude: amplitude.abs(),
                        exponent: *exponent,
                    }
                }
            }
            CouplingRule::Geometric { amplitude, ratio } => {
                if ratio.abs() > 1.0 && *amplitude != 0.0 {
                    return Err(SpecError::NoEnvelope(format!("{coupling:?}")));
                }
                EnvelopeRule::Geometric {
                    amplitude: amplitude.abs(),
                    ratio: ratio.abs(),
                }
            }
            CouplingRule::Zero => EnvelopeRule::Constant { value: 0.0 },
            CouplingRule::Explicit { values } => {
                let mut tail = vec![0.0; values.len()];
                let mut running = 0.0f64;
                for (slot, v) in tail.iter_mut().zip(values.iter()).rev() {
                    running = running.max(v.abs());
                    *slot = running;
                }
                EnvelopeRule::Tabulated { values: tail }
            }
        })
    }

    /// `envelope_j` for `j ≥ 1`. `Auto` must be resolved first.
    pub fn value(&self, j: u64) -> f64 {
        match self {
            EnvelopeRule::Auto => panic!("unresolved envelope rule"),
            EnvelopeRule::PowerLaw {
                amplitude,
                exponent,
            } => amplitude * (j as f64).powf(-exponent),
            EnvelopeRule::Geometric { amplitude, ratio } => {
                amplitude * ratio.powf(j as f64)
            }
            EnvelopeRule::Constant { value } => *value,
            EnvelopeRule::Tabulated { values } => {
                values.get(j as usize - 1).copied().unwrap_or(0.0)
            }
        }
    }

    /// Whether the envelope tends to zero.
    pub fn decays(&self) -> bool {
        match self {
            EnvelopeRule::Auto => false,
            EnvelopeRule::PowerLaw {
                amplitude,
                exponent,
            } => *amplitude == 0.0 || *exponent > 0.0,
            EnvelopeRule::Geometric { amplitude, ratio } => *amplitude == 0.0 || *ratio < 1.0,
            EnvelopeRule::Constant { value } => *value == 0.0,
            EnvelopeRule::Tabulated { .. } => true,
        }
    }

    /// Whether `Σ envelope_j²` converges, when decidable in closed form.
    pub fn square_summable(&self) -> Option<bool> {
        match self {
            EnvelopeRule::Auto => None,
            EnvelopeRule::PowerLaw {
                amplitude,
                exponent,
            } => Some(*amplitude == 0.0 || 2.0 * exponent > 1.0),
            EnvelopeRule::Geometric { amplitude, ratio } => {
                Some(*amplitude == 0.0 || *ratio < 1.0)
            }
            EnvelopeRule::Constant { value } => Some(*value == 0.0),
            EnvelopeRule::Tabulated { .. } => Some(true),
        }
    }

    fn check_monotone(&self) -> Result<(), SpecError> {
        let bad = match self {
            EnvelopeRule::Auto => false,
            EnvelopeRule::PowerLaw {
                amplitude,
                exponent,
            } => *amplitude < 0.0 || (*exponent < 0.0 && *amplitude != 0.0),
            EnvelopeRule::Geometric { amplitude, ratio } => {
                *amplitude < 0.0 || *ratio < 0.0 || (*ratio > 1.0 && *amplitude != 0.0)
            }
            EnvelopeRule::Constant { value } => *value < 0.0,
            EnvelopeRule::Tabulated { values } => {
                values.windows(2).any(|w| w[1] > w[0]) || values.iter().any(|v| *v < 0.0)
            }
        };
        if bad {
            Err(SpecError::EnvelopeIncreasing(format!("{self:?}")))
        } else {
            Ok(())
        }
    }
}

/// One perturbation: `b_position = coupling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub position: u64,
    pub coupling: f64,
}

/// Sparse perturbation of the free Jacobi matrix: `a_n ≡ 1`,
/// `b_{N_j} = v_j` and `b_n = 0` off the sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSpec {
    coupling_rule: CouplingRule,
    envelope_rule: EnvelopeRule,
    envelope: EnvelopeRule,
    ratio_sparse: bool,
    sites: Vec<Site>,
}

impl SparseSpec {
    pub fn new(
        coupling_rule: CouplingRule,
        envelope_rule: EnvelopeRule,
        positions: Vec<u64>,
        ratio_sparse: bool,
    ) -> Result<Self, SpecError> {
        let envelope = envelope_rule.resolve(&coupling_rule)?;
        envelope.check_monotone()?;
        if let Some(&first) = positions.first() {
            if first < 2 {
                return Err(SpecError::FirstSiteTooSmall(first));
            }
        }
        for (i, w) in positions.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(SpecError::SitesNotIncreasing {
                    index: i + 2,
                    value: w[1],
                });
            }
        }
        if ratio_sparse {
            for (i, w) in positions.windows(3).enumerate() {
                let r0 = w[1] as f64 / w[0] as f64;
                let r1 = w[2] as f64 / w[1] as f64;
                if r1 < r0 {
                    return Err(SpecError::RatioNotSparse(i + 2));
                }
            }
        }
        let mut sites = Vec::with_capacity(positions.len());
        for (i, &position) in positions.iter().enumerate() {
            let j = i + 1;
            let coupling =
                coupling_rule
                    .value(j)
                    .ok_or_else(|| SpecError::MissingCouplings {
                        available: i,
                        needed: positions.len(),
                    })?;
            let env = envelope.value(j as u64);
            if env < coupling.abs() {
                return Err(SpecError::EnvelopeBelowCoupling {
                    index: j,
                    envelope: env,
                    coupling: coupling.abs(),
                });
            }
            sites.push(Site { position, coupling });
        }
        Ok(SparseSpec {
            coupling_rule,
            envelope_rule,
            envelope,
            ratio_sparse,
            sites,
        })
    }

    /// The free operator (no sites).
    pub fn free() -> Self {
        SparseSpec::new(CouplingRule::Zero, EnvelopeRule::Auto, Vec::new(), false)
            .expect("free spec is valid")
    }

    /// Explicit couplings at explicit positions, envelope derived.
    pub fn explicit(couplings: Vec<f64>, positions: Vec<u64>) -> Result<Self, SpecError> {
        SparseSpec::new(
            CouplingRule::Explicit { values: couplings },
            EnvelopeRule::Auto,
            positions,
            false,
        )
    }

    /// Same rules with one more site appended at `position`.
    pub fn with_site(&self, position: u64) -> Result<Self, SpecError> {
        let mut positions = self.positions();
        positions.push(position);
        SparseSpec::new(
            self.coupling_rule.clone(),
            self.envelope_rule.clone(),
            positions,
            self.ratio_sparse,
        )
    }

    /// Same rules with the sites beyond the first `count` removed.
    pub fn prefix(&self, count: usize) -> Self {
        let mut out = self.clone();
        out.sites.truncate(count);
        out
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn positions(&self) -> Vec<u64> {
        self.sites.iter().map(|s| s.position).collect()
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.coupling).collect()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn coupling_rule(&self) -> &CouplingRule {
        &self.coupling_rule
    }

    pub fn envelope_rule(&self) -> &EnvelopeRule {
        &self.envelope_rule
    }

    /// The resolved envelope (never `Auto`).
    pub fn envelope(&self) -> &EnvelopeRule {
        &self.envelope
    }

    pub fn envelope_at(&self, j: u64) -> f64 {
        self.envelope.value(j)
    }

    pub fn ratio_sparse(&self) -> bool {
        self.ratio_sparse
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.sites.iter().map(|s| s.coupling.abs()).fold(0.0, f64::max)
    }

    pub fn to_document(&self) -> SpecDocument {
        SpecDocument {
            v_rule: self.coupling_rule.clone(),
            sites: SiteList::Explicit(self.positions()),
            envelope_rule: self.envelope_rule.clone(),
            ratio_sparse: self.ratio_sparse,
        }
    }

    pub fn to_toml(&self) -> Result<String, SpecError> {
        toml::to_string(&self.to_document()).map_err(|e| SpecError::Serialize(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        let doc: SpecDocument =
            toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        doc.to_spec()
    }
}

/// Site positions in a spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteList {
    Explicit(Vec<u64>),
    /// Must be the string `"adaptive"`.
    Adaptive(AdaptiveMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveMarker {
    Adaptive,
}

/// Structured text form of a [`SparseSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub v_rule: CouplingRule,
    #[serde(rename = "N")]
    pub sites: SiteList,
    #[serde(default)]
    pub envelope_rule: EnvelopeRule,
    #[serde(default)]
    pub ratio_sparse: bool,
}

impl SpecDocument {
    pub fn adaptive(v_rule: CouplingRule) -> Self {
        SpecDocument {
            v_rule,
            sites: SiteList::Adaptive(AdaptiveMarker::Adaptive),
            envelope_rule: EnvelopeRule::Auto,
            ratio_sparse: false,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.sites, SiteList::Adaptive(_))
    }

    pub fn to_spec(&self) -> Result<SparseSpec, SpecError> {
        match &self.sites {
            SiteList::Explicit(positions) => SparseSpec::new(
                self.v_rule.clone(),
                self.envelope_rule.clone(),
                positions.clone(),
                self.ratio_sparse,
            ),
            SiteList::Adaptive(_) => Err(SpecError::AdaptiveSites),
        }
    }
}
