//! Sparse Jacobi parameters and evaluation of their orthonormal polynomials
//! through the three-term recurrence
//!
//! ```text
//! z p_n = p_{n+1} + b_{n+1} p_n + p_{n-1},    p_0 = 1, p_{-1} = 0
//! ```
//!
//! with `a_n ≡ 1` and `b_n` supported on the sparse sites.

pub(crate) mod recurrence;
mod spec;

pub use recurrence::{
    eval_poly, eval_poly_batch, eval_poly_stream, eval_poly_with, EvalError, PolyPair,
    PolyRecurrence, PolyState, Precision,
};
pub use spec::{
    AdaptiveMarker, CouplingRule, EnvelopeRule, SiteList, Site, SparseSpec, SpecDocument,
    SpecError,
};

/// Which sites of a spec are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    #[default]
    Full,
    /// Only the first `ℓ` sites.
    Truncated(usize),
}

/// A spec viewed at a truncation level.
#[derive(Debug, Clone, Copy)]
pub struct JacobiParams<'a> {
    spec: &'a SparseSpec,
    level: Level,
}

impl<'a> JacobiParams<'a> {
    pub fn new(spec: &'a SparseSpec, level: Level) -> Self {
        JacobiParams { spec, level }
    }

    pub fn full(spec: &'a SparseSpec) -> Self {
        JacobiParams::new(spec, Level::Full)
    }

    pub fn truncated(spec: &'a SparseSpec, level: usize) -> Self {
        JacobiParams::new(spec, Level::Truncated(level))
    }

    pub fn spec(&self) -> &'a SparseSpec {
        self.spec
    }

    pub fn level(&self) -> Level {
        self.level
    }

    /// Sites active at this level, in increasing position.
    pub fn active_sites(&self) -> &'a [Site] {
        let sites = self.spec.sites();
        match self.level {
            Level::Full => sites,
            Level::Truncated(l) => &sites[..l.min(sites.len())],
        }
    }

    /// `b_n` for `n ≥ 1`.
    pub fn b_at(&self, n: u64) -> f64 {
        let sites = self.active_sites();
        let idx = sites.partition_point(|s| s.position < n);
        match sites.get(idx) {
            Some(s) if s.position == n => s.coupling,
            _ => 0.0,
        }
    }

    /// Number of active sites strictly below `n`; the sites that `K_n` sees.
    pub fn sites_below(&self, n: u64) -> usize {
        self.active_sites().partition_point(|s| s.position < n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_at_respects_sites_and_levels() {
        let spec = SparseSpec::explicit(vec![0.5], vec![7]).unwrap();
        assert_eq!(JacobiParams::full(&spec).b_at(7), 0.5);
        assert_eq!(JacobiParams::full(&spec).b_at(8), 0.0);
        assert_eq!(JacobiParams::full(&spec).b_at(1), 0.0);
        assert_eq!(JacobiParams::truncated(&spec, 0).b_at(7), 0.0);
        assert_eq!(JacobiParams::truncated(&spec, 3).b_at(7), 0.5);
    }

    #[test]
    fn b_at_many_sites() {
        let spec = SparseSpec::explicit(vec![0.1, 0.2, 0.3], vec![3, 30, 300]).unwrap();
        let p = JacobiParams::full(&spec);
        for n in 1..400 {
            let expect = match n {
                3 => 0.1,
                30 => 0.2,
                300 => 0.3,
                _ => 0.0,
            };
            assert_eq!(p.b_at(n), expect);
        }
        assert_eq!(p.sites_below(30), 1);
        assert_eq!(p.sites_below(31), 2);
        assert_eq!(JacobiParams::truncated(&spec, 2).b_at(300), 0.0);
    }
}
