use serde::{Deserialize, Serialize};

use super::SparsifyError;
use crate::chebyshev::m_bound;
use crate::jacobi::{EnvelopeRule, SparseSpec};

/// Largest envelope index scanned for a breakpoint.
pub const DEFAULT_SCAN_LIMIT: u64 = 1_000_000_000_000_000;
/// Highest rung `r` whose interval bound is certified.
pub const DEFAULT_MAX_RUNG: u32 = 16;

/// The staircase `n ↦ m_n` with `envelope_n · m_n² · M_{m_n}⁴ → 0`.
///
/// `breakpoints[r - 1]` is the first `n` with `envelope_n < 1/(M_r⁴ r⁴)`;
/// `m_n` is the largest `r` whose breakpoint is at most `n`, and at least 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MSequence {
    breakpoints: Vec<u64>,
    bounds: Vec<f64>,
    scan_limit: u64,
}

impl MSequence {
    pub fn breakpoints(&self) -> &[u64] {
        &self.breakpoints
    }

    /// `M_r` for each rung with a breakpoint.
    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    pub fn scan_limit(&self) -> u64 {
        self.scan_limit
    }

    /// `m_n` for `n ≥ 1`.
    pub fn m_at(&self, n: u64) -> u32 {
        (self.breakpoints.partition_point(|&bp| bp <= n) as u32).max(1)
    }

    /// `M_{m_n}`; the rung-1 bound when no breakpoint is reached yet.
    pub fn bound_at(&self, n: u64) -> f64 {
        let m = self.m_at(n) as usize;
        self.bounds[m - 1]
    }

    /// `envelope_{bp(r)} · r² · M_r⁴` at each breakpoint.
    pub fn decay_profile(&self, envelope: &EnvelopeRule) -> Vec<f64> {
        self.breakpoints
            .iter()
            .zip(&self.bounds)
            .enumerate()
            .map(|(i, (&bp, &mr))| {
                let r = (i + 1) as f64;
                envelope.value(bp) * r * r * mr.powi(4)
            })
            .collect()
    }
}

/// First `n ≤ limit` with `envelope_n < threshold`, for a non-increasing
/// envelope.
fn first_below(envelope: &EnvelopeRule, threshold: f64, start: u64, limit: u64) -> Option<u64> {
    let below = |n: u64| envelope.value(n) < threshold;
    if below(start) {
        return Some(start);
    }
    let mut lo;
    let mut hi = start;
    loop {
        if hi >= limit {
            return None;
        }
        lo = hi;
        hi = hi.saturating_mul(2).min(limit);
        if below(hi) {
            break;
        }
    }
    // invariant: !below(lo), below(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

pub fn build_m_sequence(spec: &SparseSpec) -> Result<MSequence, SparsifyError> {
    build_m_sequence_with(spec.envelope(), DEFAULT_SCAN_LIMIT, DEFAULT_MAX_RUNG)
}

pub fn build_m_sequence_with(
    envelope: &EnvelopeRule,
    scan_limit: u64,
    max_rung: u32,
) -> Result<MSequence, SparsifyError> {
    let mut breakpoints = Vec::new();
    let mut bounds = Vec::new();
    let mut start = 1;
    for r in 1..=max_rung {
        let mr = m_bound(r)?.bound;
        let threshold = 1.0 / (mr.powi(4) * (r as f64).powi(4));
        match first_below(envelope, threshold, start, scan_limit) {
            Some(bp) => {
                breakpoints.push(bp);
                bounds.push(mr);
                start = bp;
            }
            None => break,
        }
    }
    if breakpoints.is_empty() {
        return Err(SparsifyError::EnvelopeDoesNotDecay { scan_limit });
    }
    Ok(MSequence {
        breakpoints,
        bounds,
        scan_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::CouplingRule;

    fn spec_with(rule: CouplingRule) -> SparseSpec {
        SparseSpec::new(rule, EnvelopeRule::Auto, vec![], false).unwrap()
    }

    #[test]
    fn geometric_first_breakpoint() {
        let spec = spec_with(CouplingRule::Geometric {
            amplitude: 1.0,
            ratio: 0.5,
        });
        let ms = build_m_sequence(&spec).unwrap();
        assert_eq!(ms.breakpoints()[0], 5);
        assert!((ms.bounds()[0] - 4.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(ms.m_at(4), 1);
        assert_eq!(ms.m_at(5), 1);
    }

    #[test]
    fn inverse_sqrt_breakpoints() {
        let spec = spec_with(CouplingRule::inverse_sqrt());
        let ms = build_m_sequence(&spec).unwrap();
        // (256/9)² = 809.08…
        assert_eq!(ms.breakpoints()[0], 810);
        assert!(ms.breakpoints()[1] > 1_000_000);
        assert_eq!(ms.m_at(1), 1);
        assert_eq!(ms.m_at(4), 1);
        let profile = ms.decay_profile(spec.envelope());
        assert!(profile.windows(2).all(|w| w[1] < w[0]), "{profile:?}");
    }

    #[test]
    fn constant_envelope_fails() {
        let spec = spec_with(CouplingRule::PowerLaw {
            amplitude: 0.3,
            exponent: 0.0,
        });
        assert!(matches!(
            build_m_sequence(&spec),
            Err(SparsifyError::EnvelopeDoesNotDecay { .. })
        ));
    }

    #[test]
    fn staircase_is_monotone() {
        let spec = spec_with(CouplingRule::PowerLaw {
            amplitude: 1.0,
            exponent: 2.0,
        });
        let ms = build_m_sequence(&spec).unwrap();
        let mut last = 0;
        for n in (1..1_000_000u64).step_by(97) {
            let m = ms.m_at(n);
            assert!(m >= last);
            last = m;
        }
        assert!(last > 1);
    }
}
