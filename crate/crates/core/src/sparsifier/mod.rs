//! Adaptive placement of sparse sites.
//!
//! Given the first `ℓ` sites, [`find_gap`] searches for an order `N̂(ℓ)`
//! past which the level-`ℓ` kernel, normalized by `n κ`, is within `1/ℓ`
//! of its sine-kernel limit on a grid of `x ∈ Ĩ_ℓ` and `|a|, |b| ≤ ℓ`, the
//! coefficient vectors `A_n(x + c/n)` stay within a factor 2 of `A_n(x)` in
//! squared norm, and the shifted points stay inside `I_{m_{ℓ+1}}`. The next
//! site is placed at `N̂(ℓ)`. [`generate_spec`] iterates this.

mod classify;
mod mseq;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdkernel::{GridEvaluation, KernelError};
use crate::chebyshev::{m_bound, scaled_kernel_limit, sine_target, ChebyshevError, IntervalBound};
use crate::jacobi::{eval_poly_batch, CouplingRule, EnvelopeRule, JacobiParams, Precision, SparseSpec, SpecError};
use crate::varparam::{kappa, kappa_lower_bound, VarCoeffs};

pub use classify::{classify_measure, Classification};
pub use mseq::{build_m_sequence, build_m_sequence_with, MSequence, DEFAULT_MAX_RUNG, DEFAULT_SCAN_LIMIT};

/// Bound on the coefficient growth ratio across the scaled window.
pub const RATIO_A_LIMIT: f64 = 2.0;

#[derive(Debug, Error)]
pub enum SparsifyError {
    #[error("envelope does not fall below the first threshold before n = {scan_limit}")]
    EnvelopeDoesNotDecay { scan_limit: u64 },
    #[error("invalid sparsifier configuration: {0}")]
    InvalidConfig(String),
    #[error("level {level} needs a prefix with exactly {level} sites, got {sites}")]
    LevelMismatch { level: usize, sites: usize },
    #[error("no threshold up to n_cap = {n_cap} certifies level {level}")]
    CapExceeded {
        level: usize,
        n_cap: u64,
        best: Box<GapCertificate>,
        partial: Option<Box<GeneratedSpec>>,
    },
    #[error(transparent)]
    Bound(#[from] ChebyshevError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SparsifierConfig {
    /// Number of Chebyshev-Lobatto points on `Ĩ_ℓ`.
    pub x_grid_size: usize,
    /// Lattice points per axis on `[-ℓ, ℓ]`.
    pub ab_grid_size: usize,
    /// Probe orders are `N̂ · k` for `k` in this list.
    pub probe_multipliers: Vec<u64>,
    /// Certified error must be at most `tolerance_slack / ℓ`.
    pub tolerance_slack: f64,
    /// Largest candidate `N̂`.
    pub n_cap: u64,
    /// Minimum `N_{ℓ+1}/N_ℓ`.
    pub ratio_floor: f64,
    /// Use `ratio_floor · max(ℓ, 1)` at level `ℓ`.
    pub per_level_floor: bool,
    /// Record coefficient ratios at `x + (c ± i)/N̂`.
    pub strip_spot_check: bool,
    /// Also certify the last level, whose threshold is not placed.
    pub terminal_certificate: bool,
    pub precision: Precision,
}

impl Default for SparsifierConfig {
    fn default() -> Self {
        SparsifierConfig {
            x_grid_size: 9,
            ab_grid_size: 7,
            probe_multipliers: vec![1, 2, 4, 8],
            tolerance_slack: 0.5,
            n_cap: 10_000_000,
            ratio_floor: 4.0,
            per_level_floor: true,
            strip_spot_check: true,
            terminal_certificate: true,
            precision: Precision::Double,
        }
    }
}

impl SparsifierConfig {
    pub fn validate(&self) -> Result<(), SparsifyError> {
        let bad = |m: &str| Err(SparsifyError::InvalidConfig(m.to_string()));
        if self.x_grid_size == 0 || self.ab_grid_size == 0 {
            return bad("grid sizes must be positive");
        }
        if self.probe_multipliers.is_empty() || self.probe_multipliers.contains(&0) {
            return bad("probe multipliers must be nonempty and positive");
        }
        if !(self.tolerance_slack > 0.0 && self.tolerance_slack < 1.0) {
            return bad("tolerance_slack must lie in (0, 1)");
        }
        if !(self.ratio_floor >= 2.0) {
            return bad("ratio_floor must be at least 2");
        }
        Ok(())
    }

    /// Minimum ratio to the previous site at `level`.
    pub fn floor_at(&self, level: usize) -> f64 {
        if self.per_level_floor {
            self.ratio_floor * level.max(1) as f64
        } else {
            self.ratio_floor
        }
    }
}

/// `Ĩ_ℓ = [-2 + 1/m + 1/ℓ', 2 - 1/m - 1/ℓ']`, `ℓ' = max(ℓ, 1)`.
pub fn tilde_interval(level: usize, m: u32) -> [f64; 2] {
    let half = (2.0 - 1.0 / m as f64 - 1.0 / level.max(1) as f64).max(0.0);
    [-half, half]
}

/// Chebyshev-Lobatto points on `[lo, hi]`, ascending and deduplicated.
pub fn lobatto_grid(interval: [f64; 2], size: usize) -> Vec<f64> {
    let [lo, hi] = interval;
    let (mid, half) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
    if size == 1 {
        return vec![mid];
    }
    let k = (size - 1) as f64;
    let mut xs: Vec<f64> = (0..size)
        .map(|i| {
            let t = std::f64::consts::FRAC_PI_2 * (2.0 * i as f64 - k) / k;
            mid + half * t.sin()
        })
        .collect();
    xs.dedup();
    xs
}

/// Uniform lattice on `[-r, r]`.
pub fn ab_lattice(radius: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![0.0];
    }
    let k = (size - 1) as f64;
    (0..size)
        .map(|i| {
            let v = radius * (2.0 * i as f64 - k) / k;
            if v == 0.0 {
                0.0
            } else {
                v
            }
        })
        .collect()
}

/// Worst-case values over a grid at one order `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub n: u64,
    /// `sup |K_n(z, w)/(n κ) - 2/(4-x²) · sinc|`.
    pub kernel_error: f64,
    /// `sup |K_n(z, w)/K_n(x, x) - sinc|`.
    pub ratio_error: f64,
    /// `sup |A(x + c/n)|² / |A(x)|²`.
    pub ratio_a: f64,
    /// `min (|κ| - (1 - |x|/2)|A|²) / |A|²`.
    pub kappa_margin: f64,
    /// All shifted points have real part inside `I_m`.
    pub in_interval: bool,
}

/// Evaluates one probe order over an `x` grid and a real `(a, b)` lattice.
pub fn evaluate_probe(
    params: &JacobiParams<'_>,
    x_grid: &[f64],
    ab_values: &[f64],
    n: u64,
    interval: &IntervalBound,
    precision: Precision,
) -> Result<ProbeRecord, SparsifyError> {
    let offsets: Vec<Complex64> = ab_values.iter().map(|&c| c.into()).collect();
    let reach = ab_values.iter().fold(0.0f64, |r, c| r.max(c.abs()));
    let per_x: Vec<ProbeRecord> = x_grid
        .par_iter()
        .map(|&x| -> Result<ProbeRecord, SparsifyError> {
            let eval = GridEvaluation::new(x, n, &offsets, params, precision)?;
            let coeffs = VarCoeffs::from_pair(&eval.base().pair(), params.level());
            let kap = kappa(&coeffs, x);
            let scale = coeffs.norm_sqr();
            let kappa_margin = (kap.norm() - kappa_lower_bound(&coeffs, x)) / scale;
            let k_diag = eval.diagonal();
            let mut kernel_error = 0.0f64;
            let mut ratio_error = 0.0f64;
            for &a in ab_values {
                for &b in ab_values {
                    let k = eval.kernel(a.into(), b.into(), params)?;
                    let limit = scaled_kernel_limit(x, a, b)?;
                    kernel_error = kernel_error.max((k / (kap * n as f64) - limit).norm());
                    ratio_error = ratio_error.max((k / k_diag - sine_target(x, a, b)?).norm());
                }
            }
            let mut ratio_a = 0.0f64;
            for &c in &offsets {
                let st = eval.state(c).expect("offset evaluated");
                let shifted = VarCoeffs::from_pair(&st.pair(), params.level());
                ratio_a = ratio_a.max(shifted.norm_sqr() / scale);
            }
            let shift = reach / n as f64;
            let in_interval = interval.contains(x - shift) && interval.contains(x + shift);
            Ok(ProbeRecord {
                n,
                kernel_error,
                ratio_error,
                ratio_a,
                kappa_margin,
                in_interval,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut out = ProbeRecord {
        n,
        kernel_error: 0.0,
        ratio_error: 0.0,
        ratio_a: 0.0,
        kappa_margin: f64::INFINITY,
        in_interval: true,
    };
    for r in per_x {
        out.kernel_error = out.kernel_error.max(r.kernel_error);
        out.ratio_error = out.ratio_error.max(r.ratio_error);
        out.ratio_a = out.ratio_a.max(r.ratio_a);
        out.kappa_margin = out.kappa_margin.min(r.kappa_margin);
        out.in_interval &= r.in_interval;
    }
    Ok(out)
}

/// `sup |A(x + (c ± i)/n)|² / |A(x)|²` for `c ∈ {-r, 0, r}`.
fn strip_ratio(
    params: &JacobiParams<'_>,
    x_grid: &[f64],
    radius: f64,
    n: u64,
    precision: Precision,
) -> Result<f64, SparsifyError> {
    let ratios: Vec<f64> = x_grid
        .par_iter()
        .map(|&x| -> Result<f64, SparsifyError> {
            let mut points = vec![Complex64::new(x, 0.0)];
            for c in [-radius, 0.0, radius] {
                for t in [-1.0, 1.0] {
                    points.push(Complex64::new(x, 0.0) + Complex64::new(c, t) / n as f64);
                }
            }
            let states = eval_poly_batch(n, &points, params, precision, false).map_err(KernelError::from)?;
            let base = VarCoeffs::from_pair(&states[0].pair(), params.level()).norm_sqr();
            Ok(states[1..]
                .iter()
                .map(|s| VarCoeffs::from_pair(&s.pair(), params.level()).norm_sqr() / base)
                .fold(0.0, f64::max))
        })
        .collect::<Result<_, _>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

/// Record that the level-`ℓ` kernel has converged on a grid before the next
/// site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCertificate {
    pub level: usize,
    pub n_hat: u64,
    /// `N_ℓ`, or 1 at level 0.
    pub previous_site: u64,
    /// `m_{ℓ+1}`.
    pub m: u32,
    /// `Ĩ_ℓ`.
    pub interval: [f64; 2],
    pub x_grid: Vec<f64>,
    pub ab_values: Vec<f64>,
    /// `tolerance_slack / max(ℓ, 1)`.
    pub tolerance: f64,
    /// Normalized-kernel error at `N̂`.
    pub max_kernel_error: f64,
    /// Kernel-ratio error at `N̂`.
    pub max_ratio_error: f64,
    /// Largest coefficient ratio over all probes.
    pub ratio_a_max: f64,
    pub kappa_margin: f64,
    pub strip_ratio_max: Option<f64>,
    pub probes: Vec<ProbeRecord>,
    pub passed: bool,
}

impl GapCertificate {
    fn probe_at(&self, n: u64) -> Option<&ProbeRecord> {
        self.probes.iter().find(|p| p.n == n)
    }
}

fn probe_passes(p: &ProbeRecord, tolerance: f64) -> bool {
    p.kernel_error <= tolerance && p.ratio_a <= RATIO_A_LIMIT && p.in_interval
}

/// Smallest candidate `N̂ = ⌈floor · N_ℓ⌉ · 2^k ≤ n_cap` whose probes all pass.
pub fn find_gap(
    level: usize,
    placed: &SparseSpec,
    mseq: &MSequence,
    cfg: &SparsifierConfig,
) -> Result<GapCertificate, SparsifyError> {
    cfg.validate()?;
    if placed.len() != level {
        return Err(SparsifyError::LevelMismatch {
            level,
            sites: placed.len(),
        });
    }
    let previous_site = placed.sites().last().map_or(1, |s| s.position);
    let floor = cfg.floor_at(level);
    let start = (floor * previous_site as f64).ceil() as u64;
    if (cfg.n_cap as f64) < 10.0 * floor * previous_site as f64 {
        return Err(SparsifyError::InvalidConfig(format!(
            "n_cap = {} is below 10 · {floor} · {previous_site}",
            cfg.n_cap
        )));
    }
    let params = JacobiParams::full(placed);
    let m = mseq.m_at(level as u64 + 1);
    let bound = m_bound(m)?;
    let interval = tilde_interval(level, m);
    let x_grid = lobatto_grid(interval, cfg.x_grid_size);
    let radius = level.max(1) as f64;
    let ab_values = ab_lattice(radius, cfg.ab_grid_size);
    let tolerance = cfg.tolerance_slack / radius;

    let mut cache: Vec<ProbeRecord> = Vec::new();
    let mut probe = |n: u64| -> Result<ProbeRecord, SparsifyError> {
        if let Some(p) = cache.iter().find(|p| p.n == n) {
            return Ok(*p);
        }
        let p = evaluate_probe(&params, &x_grid, &ab_values, n, &bound, cfg.precision)?;
        cache.push(p);
        Ok(p)
    };

    let mut best: Option<GapCertificate> = None;
    let mut candidate = start;
    while candidate <= cfg.n_cap {
        let mut probes = Vec::with_capacity(cfg.probe_multipliers.len());
        let mut passed = true;
        for &k in &cfg.probe_multipliers {
            let p = probe(candidate * k)?;
            passed &= probe_passes(&p, tolerance);
            probes.push(p);
            if !passed {
                break;
            }
        }
        let head = probes[0];
        let cert = GapCertificate {
            level,
            n_hat: candidate,
            previous_site,
            m,
            interval,
            x_grid: x_grid.clone(),
            ab_values: ab_values.clone(),
            tolerance,
            max_kernel_error: head.kernel_error,
            max_ratio_error: head.ratio_error,
            ratio_a_max: probes.iter().map(|p| p.ratio_a).fold(0.0, f64::max),
            kappa_margin: probes.iter().map(|p| p.kappa_margin).fold(f64::INFINITY, f64::min),
            strip_ratio_max: None,
            probes,
            passed,
        };
        if passed {
            let mut cert = cert;
            if cfg.strip_spot_check {
                cert.strip_ratio_max = Some(strip_ratio(&params, &x_grid, radius, candidate, cfg.precision)?);
            }
            return Ok(cert);
        }
        let better = best
            .as_ref()
            .is_none_or(|b| cert.max_kernel_error < b.max_kernel_error);
        if better {
            best = Some(cert);
        }
        candidate = match candidate.checked_mul(2) {
            Some(c) => c,
            None => break,
        };
    }
    let best = best.unwrap_or_else(|| GapCertificate {
        level,
        n_hat: start,
        previous_site,
        m,
        interval,
        x_grid,
        ab_values,
        tolerance,
        max_kernel_error: f64::INFINITY,
        max_ratio_error: f64::INFINITY,
        ratio_a_max: f64::INFINITY,
        kappa_margin: f64::NAN,
        strip_ratio_max: None,
        probes: Vec::new(),
        passed: false,
    });
    Err(SparsifyError::CapExceeded {
        level,
        n_cap: cfg.n_cap,
        best: Box::new(best),
        partial: None,
    })
}

/// Re-evaluates a certificate's grid at `N̂` from scratch.
pub fn replay_certificate(
    cert: &GapCertificate,
    placed: &SparseSpec,
    precision: Precision,
) -> Result<ProbeRecord, SparsifyError> {
    let params = JacobiParams::truncated(placed, cert.level);
    let bound = m_bound(cert.m)?;
    evaluate_probe(&params, &cert.x_grid, &cert.ab_values, cert.n_hat, &bound, precision)
}

/// A generated spec with its certificate chain.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSpec {
    pub spec: SparseSpec,
    pub certificates: Vec<GapCertificate>,
    pub mseq: MSequence,
    pub config: SparsifierConfig,
}

impl GeneratedSpec {
    /// Certificate for `level`, if present.
    pub fn certificate(&self, level: usize) -> Option<&GapCertificate> {
        self.certificates.iter().find(|c| c.level == level)
    }

    /// Largest recorded probe `kernel_error` at order `n` for `level`.
    pub fn probe(&self, level: usize, n: u64) -> Option<&ProbeRecord> {
        self.certificate(level)?.probe_at(n)
    }
}

/// Places `levels` sites with couplings `v_1, v_2, …` from `v_rule`, each at
/// the certified threshold of the previous prefix.
pub fn generate_spec(
    v_rule: &CouplingRule,
    levels: usize,
    cfg: &SparsifierConfig,
) -> Result<GeneratedSpec, SparsifyError> {
    cfg.validate()?;
    let mut spec = SparseSpec::new(v_rule.clone(), EnvelopeRule::Auto, Vec::new(), false)?;
    let mseq = build_m_sequence(&spec)?;
    let mut out = GeneratedSpec {
        spec: spec.clone(),
        certificates: Vec::new(),
        mseq: mseq.clone(),
        config: cfg.clone(),
    };
    if levels == 0 {
        return Ok(out);
    }
    let last = if cfg.terminal_certificate { levels } else { levels - 1 };
    for level in 0..=last {
        let cert = match find_gap(level, &spec, &mseq, cfg) {
            Ok(c) => c,
            Err(SparsifyError::CapExceeded {
                level, n_cap, best, ..
            }) => {
                return Err(SparsifyError::CapExceeded {
                    level,
                    n_cap,
                    best,
                    partial: Some(Box::new(out)),
                })
            }
            Err(e) => return Err(e),
        };
        if level < levels {
            spec = spec.with_site(cert.n_hat)?;
        }
        out.spec = spec.clone();
        out.certificates.push(cert);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(tilde_interval(0, 1), [0.0, 0.0]);
        assert_eq!(tilde_interval(1, 1), [0.0, 0.0]);
        assert_eq!(tilde_interval(2, 1), [-0.5, 0.5]);
        let t = tilde_interval(3, 1);
        assert!((t[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lobatto_grid([0.0, 0.0], 9), vec![0.0]);
        let g = lobatto_grid([-0.5, 0.5], 9);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], -0.5);
        assert_eq!(g[8], 0.5);
        assert_eq!(g[4], 0.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        for i in 0..9 {
            assert_eq!(g[i], -g[8 - i]);
        }
        assert_eq!(ab_lattice(2.0, 5), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn free_operator_certifies() {
        let free = SparseSpec::free();
        let mseq = build_m_sequence_with(&EnvelopeRule::Constant { value: 0.0 }, 1000, 4).unwrap();
        let cfg = SparsifierConfig::default();
        let cert = find_gap(0, &free, &mseq, &cfg).unwrap();
        assert!(cert.passed);
        assert!(cert.max_kernel_error <= cfg.tolerance_slack);
        assert!(cert.ratio_a_max <= 2.0);
        assert!(cert.n_hat >= 4);
    }

    #[test]
    fn one_site_prefix() {
        let spec = SparseSpec::explicit(vec![0.5], vec![50]).unwrap();
        let mseq = build_m_sequence_with(&EnvelopeRule::Constant { value: 0.0 }, 1000, 2).unwrap();
        let cfg = SparsifierConfig::default();
        let cert = find_gap(1, &spec, &mseq, &cfg).unwrap();
        assert!(cert.n_hat as f64 >= cfg.ratio_floor * 50.0);
        assert!(cert.max_kernel_error <= cfg.tolerance_slack);
        assert!(cert.ratio_a_max <= 2.0);
        assert!(cert.probes.iter().all(|p| p.in_interval));
        let replay = replay_certificate(&cert, &spec, Precision::Double).unwrap();
        assert!((replay.kernel_error - cert.max_kernel_error).abs() <= 1e-12);
    }

    #[test]
    fn unreachable_tolerance_hits_cap() {
        let spec = SparseSpec::explicit(vec![0.5], vec![50]).unwrap();
        let mseq = build_m_sequence_with(&EnvelopeRule::Constant { value: 0.0 }, 1000, 2).unwrap();
        let cfg = SparsifierConfig {
            tolerance_slack: 1e-9,
            n_cap: 4000,
            ..Default::default()
        };
        match find_gap(1, &spec, &mseq, &cfg) {
            Err(SparsifyError::CapExceeded { best, .. }) => assert!(!best.passed),
            other => panic!("expected cap exceeded, got {other:?}"),
        }
    }

    #[test]
    fn config_checks() {
        let spec = SparseSpec::explicit(vec![0.5], vec![50]).unwrap();
        let mseq = build_m_sequence_with(&EnvelopeRule::Constant { value: 0.0 }, 1000, 2).unwrap();
        let small_cap = SparsifierConfig {
            n_cap: 100,
            ..Default::default()
        };
        assert!(matches!(
            find_gap(1, &spec, &mseq, &small_cap),
            Err(SparsifyError::InvalidConfig(_))
        ));
        assert!(matches!(
            find_gap(0, &spec, &mseq, &SparsifierConfig::default()),
            Err(SparsifyError::LevelMismatch { .. })
        ));
    }

    #[test]
    fn zero_levels_is_empty() {
        let g = generate_spec(&CouplingRule::inverse_sqrt(), 0, &SparsifierConfig::default()).unwrap();
        assert!(g.spec.is_empty());
        assert!(g.certificates.is_empty());
    }

    #[test]
    fn zero_couplings_certify_at_first_candidate() {
        let cfg = SparsifierConfig::default();
        let g = generate_spec(&CouplingRule::Zero, 2, &cfg).unwrap();
        let mut prev = 1u64;
        for (l, c) in g.certificates.iter().enumerate() {
            let expect = (cfg.floor_at(l) * prev as f64).ceil() as u64;
            assert_eq!(c.n_hat, expect, "level {l}");
            prev = c.n_hat;
        }
    }
}
