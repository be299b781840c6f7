//! Christoffel-Darboux kernels
//!
//! ```text
//! K_n(z, w) = Σ_{j<n} p_j(z) p_j(w) = (p_n(z) p_{n-1}(w) - p_n(w) p_{n-1}(z)) / (z - w)
//! K_n(z, z) = p_n'(z) p_{n-1}(z) - p_n(z) p_{n-1}'(z)
//! ```
//!
//! evaluated at the scaled points `z = x + a/n`, `w = x + b/n`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use thiserror::Error;

use crate::chebyshev::{scaled_kernel_limit, sine_target, ChebyshevError};
use crate::jacobi::recurrence::run_batch;
use crate::jacobi::{EvalError, JacobiParams, PolyRecurrence, PolyState, Precision};
use crate::scalar::NeumaierSum;

/// Below this relative separation the CD quotient is replaced by the
/// confluent kernel at the midpoint.
const NEAR_CONFLUENT_REL: f64 = 1e-8;
/// ... provided `n |z - w|` is small enough for the midpoint rule to be exact
/// to working precision.
const NEAR_CONFLUENT_SCALED: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("base point x = {0} is outside (-2, 2)")]
    OutsideBulk(f64),
    #[error("kernel order must be at least 1")]
    ZeroOrder,
    #[error("offset {0} has imaginary part beyond the strip |Im| <= 1")]
    OutsideStrip(Complex64),
    #[error("shifted point x ± {shift} leaves (-2, 2) at x = {x}")]
    ShiftOutsideBulk { x: f64, shift: f64 },
    #[error("confluent kernel at non-real point {0} needs the derivative path")]
    ConfluentNonReal(Complex64),
    #[error("degenerate diagonal K_n(x, x) = {0}")]
    DegenerateDiagonal(Complex64),
    #[error("coefficient vector A must be nonzero")]
    ZeroCoefficients,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Chebyshev(#[from] ChebyshevError),
}

/// Arguments of `K_n(x + a/n, x + b/n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub x: f64,
    pub a: Complex64,
    pub b: Complex64,
    pub n: u64,
}

impl KernelQuery {
    pub fn new(x: f64, a: Complex64, b: Complex64, n: u64) -> Result<Self, KernelError> {
        let q = KernelQuery { x, a, b, n };
        q.validate()?;
        Ok(q)
    }

    pub fn real(x: f64, a: f64, b: f64, n: u64) -> Result<Self, KernelError> {
        Self::new(x, a.into(), b.into(), n)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        if !(self.x.abs() < 2.0) {
            return Err(KernelError::OutsideBulk(self.x));
        }
        if self.n == 0 {
            return Err(KernelError::ZeroOrder);
        }
        for c in [self.a, self.b] {
            if !(c.im.abs() <= 1.0) || !c.re.is_finite() {
                return Err(KernelError::OutsideStrip(c));
            }
        }
        let shift = self.a.norm().max(self.b.norm()) / self.n as f64;
        if !(self.x.abs() + shift < 2.0) {
            return Err(KernelError::ShiftOutsideBulk { x: self.x, shift });
        }
        Ok(())
    }

    pub fn z(&self) -> Complex64 {
        scaled_point(self.x, self.a, self.n)
    }

    pub fn w(&self) -> Complex64 {
        scaled_point(self.x, self.b, self.n)
    }

    pub fn swapped(&self) -> Self {
        KernelQuery {
            a: self.b,
            b: self.a,
            ..*self
        }
    }
}

#[inline]
fn scaled_point(x: f64, c: Complex64, n: u64) -> Complex64 {
    Complex64::new(x, 0.0) + c / n as f64
}

/// `K_n(z, w)`, the diagonal `K_n(x, x)` and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub k: Complex64,
    pub k_diag: Complex64,
    pub ratio: Complex64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Evaluate confluent kernels through the derivative recurrence. When
    /// off, real confluent queries fall back to the defining sum.
    pub confluent_derivative: bool,
    pub precision: Precision,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            confluent_derivative: true,
            precision: Precision::Double,
        }
    }
}

#[inline]
fn confluent(s: &PolyState) -> Complex64 {
    s.dp * s.p_prev - s.p * s.dp_prev
}

#[inline]
fn cd_quotient(sz: &PolyState, sw: &PolyState) -> Complex64 {
    (sz.p * sw.p_prev - sw.p * sz.p_prev) / (sz.z - sw.z)
}

fn near_confluent(z: Complex64, w: Complex64, n: u64) -> bool {
    let d = (z - w).norm();
    d > 0.0 && d < NEAR_CONFLUENT_REL * (1.0 + z.norm()) && n as f64 * d < NEAR_CONFLUENT_SCALED
}

fn kernel_points(
    n: u64,
    z: Complex64,
    w: Complex64,
    params: &JacobiParams<'_>,
    init: [Complex64; 2],
    opts: &KernelOptions,
) -> Result<Complex64, KernelError> {
    let sites = params.active_sites();
    if z == w || near_confluent(z, w, n) {
        let mid = if z == w { z } else { (z + w) * 0.5 };
        let st = run_batch(n, &[mid], sites, init, opts.precision, true)?;
        return Ok(confluent(&st[0]));
    }
    let st = run_batch(n, &[z, w], sites, init, opts.precision, false)?;
    Ok(cd_quotient(&st[0], &st[1]))
}

const START: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

/// `K_n(z, w)` through the CD formula, O(n).
pub fn cd_kernel(q: &KernelQuery, params: &JacobiParams<'_>) -> Result<Complex64, KernelError> {
    cd_kernel_with(q, params, &KernelOptions::default())
}

pub fn cd_kernel_with(
    q: &KernelQuery,
    params: &JacobiParams<'_>,
    opts: &KernelOptions,
) -> Result<Complex64, KernelError> {
    q.validate()?;
    let (z, w) = (q.z(), q.w());
    if z == w && !opts.confluent_derivative {
        if z.im != 0.0 {
            return Err(KernelError::ConfluentNonReal(z));
        }
        return cd_kernel_direct(q, params);
    }
    kernel_points(q.n, z, w, params, START, opts)
}

/// `Σ_{j<n} p_j(z) p_j(w)` with compensated summation; the oracle for
/// [`cd_kernel`].
pub fn cd_kernel_direct(
    q: &KernelQuery,
    params: &JacobiParams<'_>,
) -> Result<Complex64, KernelError> {
    q.validate()?;
    let (z, w) = (q.z(), q.w());
    let mut sum = NeumaierSum::default();
    let it = PolyRecurrence::new(z, params).zip(PolyRecurrence::new(w, params));
    for (pz, pw) in it.take(q.n as usize) {
        sum.add(pz.p * pw.p);
    }
    let total = sum.total();
    if !total.is_finite() {
        return Err(EvalError::EscapedBulk { n: q.n, z }.into());
    }
    Ok(total)
}

fn offset_key(c: Complex64) -> (u64, u64) {
    (c.re.to_bits(), c.im.to_bits())
}

/// Polynomial states at `x + c/n` for a set of offsets `c`, computed in one
/// batched pass. The base point (offset 0) is always included.
#[derive(Debug, Clone)]
pub struct GridEvaluation {
    x: f64,
    n: u64,
    index: BTreeMap<(u64, u64), usize>,
    states: Vec<PolyState>,
}

impl GridEvaluation {
    pub fn new(
        x: f64,
        n: u64,
        offsets: &[Complex64],
        params: &JacobiParams<'_>,
        precision: Precision,
    ) -> Result<Self, KernelError> {
        let zero = Complex64::new(0.0, 0.0);
        let mut index = BTreeMap::new();
        let mut points = Vec::new();
        for &c in std::iter::once(&zero).chain(offsets) {
            KernelQuery::new(x, c, c, n)?;
            index.entry(offset_key(c)).or_insert_with(|| {
                points.push(scaled_point(x, c, n));
                points.len() - 1
            });
        }
        let states = run_batch(n, &points, params.active_sites(), START, precision, true)?;
        Ok(GridEvaluation {
            x,
            n,
            index,
            states,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// State at `x + c/n`, if `c` was one of the offsets.
    pub fn state(&self, c: Complex64) -> Option<&PolyState> {
        self.index.get(&offset_key(c)).map(|&i| &self.states[i])
    }

    pub fn base(&self) -> &PolyState {
        &self.states[0]
    }

    /// `K_n(x, x)`.
    pub fn diagonal(&self) -> Complex64 {
        confluent(self.base())
    }

    /// `K_n(x + a/n, x + b/n)` for offsets present in the grid.
    pub fn kernel(&self, a: Complex64, b: Complex64, params: &JacobiParams<'_>) -> Result<Complex64, KernelError> {
        let ia = self.index.get(&offset_key(a));
        let ib = self.index.get(&offset_key(b));
        match (ia, ib) {
            (Some(&i), Some(&j)) if i == j => Ok(confluent(&self.states[i])),
            (Some(&i), Some(&j)) if !near_confluent(self.states[i].z, self.states[j].z, self.n) => {
                Ok(cd_quotient(&self.states[i], &self.states[j]))
            }
            _ => cd_kernel(&KernelQuery::new(self.x, a, b, self.n)?, params),
        }
    }

    pub fn ratio(&self, a: Complex64, b: Complex64, params: &JacobiParams<'_>) -> Result<KernelValue, KernelError> {
        let k = self.kernel(a, b, params)?;
        let k_diag = self.diagonal();
        if !(k_diag.norm() >= 1e-300) {
            return Err(KernelError::DegenerateDiagonal(k_diag));
        }
        Ok(KernelValue {
            k,
            k_diag,
            ratio: k / k_diag,
            n: self.n,
        })
    }
}

/// `K_n(z, w) / K_n(x, x)` with both kernels from one batched pass.
pub fn kernel_ratio(q: &KernelQuery, params: &JacobiParams<'_>) -> Result<KernelValue, KernelError> {
    kernel_ratio_with(q, params, Precision::Double)
}

pub fn kernel_ratio_with(
    q: &KernelQuery,
    params: &JacobiParams<'_>,
    precision: Precision,
) -> Result<KernelValue, KernelError> {
    q.validate()?;
    let grid = GridEvaluation::new(q.x, q.n, &[q.a, q.b], params, precision)?;
    grid.ratio(q.a, q.b, params)
}

/// `κ = A₁² + A₂² - A₁A₂x` for real coefficients.
pub fn kappa_real(a: [f64; 2], x: f64) -> f64 {
    a[0] * a[0] + a[1] * a[1] - a[0] * a[1] * x
}

/// `K^A_n(z, w) = Σ_{j<n} φ^A_j(z) φ^A_j(w)` with `φ^A = A₁ψ¹ + A₂ψ²`, via
/// the CD form. With `normalize`, divides by `n κ(A, x)`.
pub fn constant_a_kernel(
    a: [f64; 2],
    q: &KernelQuery,
    normalize: bool,
) -> Result<Complex64, KernelError> {
    if a == [0.0, 0.0] {
        return Err(KernelError::ZeroCoefficients);
    }
    q.validate()?;
    let free = crate::jacobi::SparseSpec::free();
    let params = JacobiParams::full(&free);
    let init = [Complex64::new(a[0], 0.0), Complex64::new(a[1], 0.0)];
    let k = kernel_points(q.n, q.z(), q.w(), &params, init, &KernelOptions::default())?;
    if normalize {
        Ok(k / (q.n as f64 * kappa_real(a, q.x)))
    } else {
        Ok(k)
    }
}

/// `max |K_n(x+a/n, x+b/n)/K_n(x,x) - sine target|` over a real `(a, b)` grid.
pub fn universality_error(
    x: f64,
    n: u64,
    grid: &[(f64, f64)],
    params: &JacobiParams<'_>,
) -> Result<f64, KernelError> {
    universality_error_with(x, n, grid, params, Precision::Double)
}

pub fn universality_error_with(
    x: f64,
    n: u64,
    grid: &[(f64, f64)],
    params: &JacobiParams<'_>,
    precision: Precision,
) -> Result<f64, KernelError> {
    let offsets: Vec<Complex64> = grid
        .iter()
        .flat_map(|&(a, b)| [Complex64::from(a), Complex64::from(b)])
        .collect();
    let eval = GridEvaluation::new(x, n, &offsets, params, precision)?;
    let mut worst = 0.0f64;
    for &(a, b) in grid {
        KernelQuery::real(x, a, b, n)?;
        let v = eval.ratio(a.into(), b.into(), params)?;
        let err = (v.ratio - sine_target(x, a, b)?).norm();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Deviation of `K_n(z, w) / (n κ)` from its limit, for a given `κ`.
pub fn normalized_deviation(
    k: Complex64,
    n: u64,
    kappa: Complex64,
    x: f64,
    a: f64,
    b: f64,
) -> Result<f64, KernelError> {
    let limit = scaled_kernel_limit(x, a, b)?;
    Ok((k / (kappa * n as f64) - limit).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::sinc;
    use crate::jacobi::SparseSpec;

    fn free_params(spec: &SparseSpec) -> JacobiParams<'_> {
        JacobiParams::full(spec)
    }

    #[test]
    fn order_one_is_one() {
        let spec = SparseSpec::explicit(vec![0.4, -0.3], vec![2, 9]).unwrap();
        let p = JacobiParams::full(&spec);
        let q = KernelQuery::new(0.3, Complex64::new(0.2, 0.5), Complex64::new(-0.7, 0.1), 1).unwrap();
        assert!((cd_kernel(&q, &p).unwrap() - 1.0).norm() < 1e-15);
        assert_eq!(cd_kernel_direct(&q, &p).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn free_diagonal_at_zero() {
        let free = SparseSpec::free();
        let p = free_params(&free);
        let q = KernelQuery::real(0.0, 0.0, 0.0, 5).unwrap();
        assert!((cd_kernel(&q, &p).unwrap() - 3.0).norm() < 1e-14);
        let q = KernelQuery::real(0.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(cd_kernel_direct(&q, &p).unwrap(), Complex64::new(2.0, 0.0));
    }

    #[test]
    fn confluent_without_derivative() {
        let free = SparseSpec::free();
        let p = free_params(&free);
        let opts = KernelOptions {
            confluent_derivative: false,
            ..Default::default()
        };
        let q = KernelQuery::real(0.0, 0.3, 0.3, 40).unwrap();
        let via_sum = cd_kernel_with(&q, &p, &opts).unwrap();
        let via_derivative = cd_kernel(&q, &p).unwrap();
        assert!((via_sum - via_derivative).norm() < 1e-11 * via_sum.norm());
        let c = Complex64::new(0.3, 0.2);
        let q = KernelQuery::new(0.0, c, c, 40).unwrap();
        assert!(matches!(
            cd_kernel_with(&q, &p, &opts),
            Err(KernelError::ConfluentNonReal(_))
        ));
    }

    #[test]
    fn query_validation() {
        assert!(KernelQuery::real(2.0, 0.0, 0.0, 10).is_err());
        assert!(KernelQuery::real(1.9, 2.0, 0.0, 10).is_err());
        assert!(KernelQuery::new(0.0, Complex64::new(0.0, 1.5), 0.0.into(), 10).is_err());
        assert!(KernelQuery::real(0.0, 0.0, 0.0, 0).is_err());
        assert!(KernelQuery::real(1.9, 2.0, 0.0, 1000).is_ok());
    }

    #[test]
    fn cd_matches_direct_sum() {
        let spec = SparseSpec::explicit(vec![0.4, -0.3, 0.2], vec![3, 17, 300]).unwrap();
        let p = JacobiParams::full(&spec);
        for (x, a, b, n) in [(0.3, -1.0, 0.5, 1000u64), (-1.2, 0.0, 1.7, 400), (1.0, 0.2, 0.1, 35)] {
            let q = KernelQuery::real(x, a, b, n).unwrap();
            let k = cd_kernel(&q, &p).unwrap();
            let d = cd_kernel_direct(&q, &p).unwrap();
            assert!((k - d).norm() <= 1e-10 * d.norm(), "{k} vs {d}");
        }
    }

    #[test]
    fn near_confluent_guard() {
        let spec = SparseSpec::explicit(vec![0.4], vec![3]).unwrap();
        let p = JacobiParams::full(&spec);
        let q = KernelQuery::real(0.5, 0.1, 0.1 + 1e-9, 500).unwrap();
        let k = cd_kernel(&q, &p).unwrap();
        let d = cd_kernel_direct(&q, &p).unwrap();
        assert!((k - d).norm() <= 1e-11 * d.norm());
    }

    #[test]
    fn hermitian_symmetry() {
        let spec = SparseSpec::explicit(vec![0.4, -0.3], vec![3, 80]).unwrap();
        let p = JacobiParams::full(&spec);
        let a = Complex64::new(0.4, 0.6);
        let b = Complex64::new(-1.1, -0.3);
        let k = cd_kernel(&KernelQuery::new(0.7, a, b, 900).unwrap(), &p).unwrap();
        let k2 = cd_kernel(&KernelQuery::new(0.7, b.conj(), a.conj(), 900).unwrap(), &p).unwrap();
        assert!((k - k2.conj()).norm() <= 1e-12 * k.norm());
    }

    #[test]
    fn ratio_basics() {
        let spec = SparseSpec::explicit(vec![0.4], vec![6]).unwrap();
        let p = JacobiParams::full(&spec);
        let v = kernel_ratio(&KernelQuery::real(0.4, 0.0, 0.0, 333).unwrap(), &p).unwrap();
        assert_eq!(v.ratio, Complex64::new(1.0, 0.0));
        let q = KernelQuery::real(0.4, -0.7, 1.3, 333).unwrap();
        let v = kernel_ratio(&q, &p).unwrap();
        let s = kernel_ratio(&q.swapped(), &p).unwrap();
        assert_eq!(v.ratio, s.ratio);
    }

    #[test]
    fn free_ratio_at_large_n() {
        let free = SparseSpec::free();
        let v = kernel_ratio(&KernelQuery::real(0.0, 0.0, 1.0, 10_000).unwrap(), &free_params(&free)).unwrap();
        assert!((v.ratio.re - 0.5f64.sin() / 0.5).abs() < 2e-3);
        assert!((0.5f64.sin() / 0.5 - 0.958851).abs() < 1e-6);
    }

    #[test]
    fn constant_a_examples() {
        let free = SparseSpec::free();
        let q = KernelQuery::new(0.3, Complex64::new(0.5, 0.2), Complex64::new(-0.4, 0.0), 60).unwrap();
        let ka = constant_a_kernel([1.0, 0.0], &q, false).unwrap();
        let k = cd_kernel(&q, &free_params(&free)).unwrap();
        assert!((ka - k).norm() < 1e-12 * k.norm());

        let q = KernelQuery::real(0.0, 0.0, 0.0, 2).unwrap();
        assert!((constant_a_kernel([0.0, 1.0], &q, false).unwrap() - 1.0).norm() < 1e-15);

        assert!(matches!(
            constant_a_kernel([0.0, 0.0], &q, false),
            Err(KernelError::ZeroCoefficients)
        ));
    }

    #[test]
    fn constant_a_normalized_limit() {
        let q = KernelQuery::real(0.5, 0.0, 1.0, 100_000).unwrap();
        let v = constant_a_kernel([1.0, 1.0], &q, true).unwrap();
        let s = 1.0 / 3.75f64.sqrt();
        let limit = 2.0 * s * s * sinc(s);
        assert!((v.re - limit).abs() < 5e-3, "{v} vs {limit}");
    }

    #[test]
    fn universality_error_trivial_grid() {
        let spec = SparseSpec::explicit(vec![0.4], vec![6]).unwrap();
        let e = universality_error(0.2, 77, &[(0.0, 0.0)], &JacobiParams::full(&spec)).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn free_diagonal_law_small_n() {
        let free = SparseSpec::free();
        let p = free_params(&free);
        for n in 1..60u64 {
            let k = cd_kernel(&KernelQuery::real(0.0, 0.0, 0.0, n).unwrap(), &p).unwrap();
            assert!((k.re - n.div_ceil(2) as f64).abs() < 1e-12);
        }
    }
}
