//! Free-case objects: the two solutions of `z ψ_n = ψ_{n+1} + ψ_{n-1}`,
//! their transfer matrices, interval bounds on those matrices, the free
//! zero density and the sine-kernel limit.
//!
//! For `z = 2 cos θ` the solutions are
//!
//! ```text
//! ψ¹_n(z) =  sin((n+1)θ) / sin θ      ψ¹_0 = 1, ψ¹_{-1} = 0
//! ψ²_n(z) = -sin(nθ)     / sin θ      ψ²_0 = 0, ψ²_{-1} = 1
//! ```
//!
//! and `T_n(z) = [[ψ¹_n, ψ²_n], [ψ¹_{n-1}, ψ²_{n-1}]] = [[z, -1], [1, 0]]^n`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::mat2::Mat2;

/// Inflation factor from the real-axis bound `M` to the strip bound.
pub const STRIP_SAFETY: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChebyshevError {
    #[error("point {z} is outside the bulk (-2, 2)")]
    OutsideBulk { z: Complex64 },
    #[error("index {0} is below -1")]
    InvalidIndex(i64),
    #[error("interval index m must be at least 1")]
    InvalidInterval,
    #[error(
        "bound validation failed for m = {m}: |T_{n}({z})| = {observed} exceeds {bound}"
    )]
    ValidationFailure {
        m: u32,
        n: u64,
        z: Complex64,
        observed: f64,
        bound: f64,
    },
}

/// A real energy `x = 2 cos θ` strictly inside the bulk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    x: f64,
    theta: f64,
}

impl SpectralPoint {
    pub fn new(x: f64) -> Result<Self, ChebyshevError> {
        if !(x.abs() < 2.0) {
            return Err(ChebyshevError::OutsideBulk { z: x.into() });
        }
        Ok(SpectralPoint {
            x,
            theta: (x / 2.0).acos(),
        })
    }

    pub fn from_theta(theta: f64) -> Result<Self, ChebyshevError> {
        if !(theta > 0.0 && theta < PI) {
            return Err(ChebyshevError::OutsideBulk {
                z: (2.0 * theta.cos()).into(),
            });
        }
        Ok(SpectralPoint {
            x: 2.0 * theta.cos(),
            theta,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// How `ψ` values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Evaluation {
    /// Closed form through `θ = arccos(z/2)` (principal branch). Only valid
    /// away from the real half-lines `|x| ≥ 2`.
    #[default]
    Trig,
    /// Forward iteration of the free recurrence; valid everywhere.
    Recurrence,
}

fn in_trig_domain(z: Complex64) -> bool {
    !(z.im == 0.0 && z.re.abs() >= 2.0) && z.is_finite()
}

/// `sin(kθ)/sin θ` with `2 cos θ = z`; this is `ψ¹_{k-1}(z)`.
fn chebyshev_ratio(k: i64, z: Complex64) -> Complex64 {
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if z.im == 0.0 {
        let theta = (z.re / 2.0).acos();
        Complex64::new((k as f64 * theta).sin() / theta.sin(), 0.0)
    } else {
        let theta = (z / 2.0).acos();
        (theta * k as f64).sin() / theta.sin()
    }
}

fn psi1_iter(n: i64, z: Complex64) -> Complex64 {
    let mut prev = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);
    if n == -1 {
        return prev;
    }
    for _ in 0..n {
        let next = z * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `ψ¹_n(z)` via the closed form; rejects real `|z| ≥ 2`.
pub fn psi1(n: i64, z: Complex64) -> Result<Complex64, ChebyshevError> {
    psi1_with(n, z, Evaluation::Trig)
}

/// `ψ²_n(z) = -ψ¹_{n-1}(z)`; rejects real `|z| ≥ 2`.
pub fn psi2(n: i64, z: Complex64) -> Result<Complex64, ChebyshevError> {
    psi2_with(n, z, Evaluation::Trig)
}

pub fn psi1_with(n: i64, z: Complex64, mode: Evaluation) -> Result<Complex64, ChebyshevError> {
    if n < -1 {
        return Err(ChebyshevError::InvalidIndex(n));
    }
    match mode {
        Evaluation::Trig => {
            if !in_trig_domain(z) {
                return Err(ChebyshevError::OutsideBulk { z });
            }
            Ok(chebyshev_ratio(n + 1, z))
        }
        Evaluation::Recurrence => Ok(psi1_iter(n, z)),
    }
}

pub fn psi2_with(n: i64, z: Complex64, mode: Evaluation) -> Result<Complex64, ChebyshevError> {
    if n < -1 {
        return Err(ChebyshevError::InvalidIndex(n));
    }
    if n == -1 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    psi1_with(n - 1, z, mode).map(|v| -v)
}

/// The free transfer matrix `T_n(z)`, unimodular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix(pub Mat2);

impl TransferMatrix {
    /// The one-step matrix `[[z, -1], [1, 0]]`.
    pub fn step(z: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        TransferMatrix(Mat2::new(z, -one, one, Complex64::new(0.0, 0.0)))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn det(&self) -> Complex64 {
        self.0.det()
    }

    pub fn norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// Inverse via the adjugate (the determinant is one).
    pub fn inverse(&self) -> Mat2 {
        self.0.adjugate()
    }

    pub fn psi1(&self) -> Complex64 {
        self.0 .0[0][0]
    }

    pub fn psi2(&self) -> Complex64 {
        self.0 .0[0][1]
    }
}

impl std::ops::Mul for TransferMatrix {
    type Output = TransferMatrix;
    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix(self.0 * rhs.0)
    }
}

/// `T_n(z)` by binary exponentiation of the one-step matrix.
pub fn transfer_matrix(n: u64, z: Complex64) -> TransferMatrix {
    TransferMatrix(TransferMatrix::step(z).0.pow(n))
}

/// `T_n(z)` assembled from the closed-form `ψ` values. Falls back to
/// binary exponentiation outside the trigonometric domain.
pub fn transfer_matrix_trig(n: u64, z: Complex64) -> TransferMatrix {
    if !in_trig_domain(z) {
        return transfer_matrix(n, z);
    }
    let n = n as i64;
    let u_n = chebyshev_ratio(n + 1, z);
    let u_nm1 = chebyshev_ratio(n, z);
    let u_nm2 = chebyshev_ratio(n - 1, z);
    TransferMatrix(Mat2::new(u_n, -u_nm1, u_nm1, -u_nm2))
}

/// Iterated products `T_0, T_1, T_2, …` for sweeps that need every index.
#[derive(Debug, Clone)]
pub struct TransferSweep {
    step: Mat2,
    current: Mat2,
}

impl TransferSweep {
    pub fn new(z: Complex64) -> Self {
        TransferSweep {
            step: TransferMatrix::step(z).0,
            current: Mat2::IDENTITY,
        }
    }
}

impl Iterator for TransferSweep {
    type Item = TransferMatrix;

    fn next(&mut self) -> Option<TransferMatrix> {
        let out = self.current;
        self.current = self.step * self.current;
        Some(TransferMatrix(out))
    }
}

/// The interval `I_m = [-2 + 1/m, 2 - 1/m]` with certified transfer-matrix
/// bounds (Frobenius norm) on it and on the strip `x + it/n`, `|t| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBound {
    pub m: u32,
    pub lo: f64,
    pub hi: f64,
    /// Bound on `‖T_n(x)‖` for `x ∈ I_m`, all `n`.
    pub bound: f64,
    /// Bound on `‖T_n(x + it/n)‖` for `x ∈ I_m`, `|t| ≤ 1`.
    pub strip_bound: f64,
}

impl IntervalBound {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Closed-form `M` for `I_m`: each `ψ` entry is at most `1/sin θ`, and
/// `sin² θ ≥ 1/m - 1/(4m²)` on `I_m`.
pub fn closed_form_bound(m: u32) -> f64 {
    let m = m as f64;
    2.0 / (1.0 / m - 1.0 / (4.0 * m * m)).sqrt()
}

fn validation_orders() -> Vec<u64> {
    let mut ns: Vec<u64> = (0..=16).collect();
    let mut v = 20.0f64;
    while v <= 1e4 {
        ns.push(v.round() as u64);
        v *= 1.5;
    }
    ns.push(10_000);
    ns.dedup();
    ns
}

/// Interval bound for `I_m`, certified on a sample grid of `x`, `n ≤ 10⁴`
/// and strip offsets `t ∈ {±1/2, ±1}`.
pub fn m_bound(m: u32) -> Result<IntervalBound, ChebyshevError> {
    if m == 0 {
        return Err(ChebyshevError::InvalidInterval);
    }
    let inv = 1.0 / m as f64;
    let lo = -2.0 + inv;
    let hi = 2.0 - inv;
    let bound = closed_form_bound(m);
    let strip_bound = STRIP_SAFETY * bound;
    const X_SAMPLES: usize = 33;
    let orders = validation_orders();
    for i in 0..X_SAMPLES {
        let x = lo + (hi - lo) * i as f64 / (X_SAMPLES - 1) as f64;
        for &n in &orders {
            let z = Complex64::new(x, 0.0);
            let observed = transfer_matrix_trig(n, z).norm();
            if observed > bound {
                return Err(ChebyshevError::ValidationFailure {
                    m,
                    n,
                    z,
                    observed,
                    bound,
                });
            }
            if n == 0 {
                continue;
            }
            for t in [-1.0, -0.5, 0.5, 1.0] {
                let z = Complex64::new(x, t / n as f64);
                let observed = transfer_matrix_trig(n, z).norm();
                if !(observed <= strip_bound) {
                    return Err(ChebyshevError::ValidationFailure {
                        m,
                        n,
                        z,
                        observed,
                        bound: strip_bound,
                    });
                }
            }
        }
    }
    Ok(IntervalBound {
        m,
        lo,
        hi,
        bound,
        strip_bound,
    })
}

/// `sin(s)/s` with the removable singularity filled in.
#[inline]
pub fn sinc(s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        s.sin() / s
    }
}

fn check_bulk(x: f64) -> Result<(), ChebyshevError> {
    if x.abs() < 2.0 {
        Ok(())
    } else {
        Err(ChebyshevError::OutsideBulk { z: x.into() })
    }
}

/// Sine-kernel limit of `K_n(x + a/n, x + b/n) / K_n(x, x)`.
pub fn sine_target(x: f64, a: f64, b: f64) -> Result<f64, ChebyshevError> {
    check_bulk(x)?;
    let s = (b - a).abs() / (4.0 - x * x).sqrt();
    Ok(sinc(s))
}

/// Limit of `K_n(x + a/n, x + b/n) / (n κ)`, namely
/// `2 sin(s) / (√(4-x²)(b-a))` with `s = (b-a)/√(4-x²)`.
pub fn scaled_kernel_limit(x: f64, a: f64, b: f64) -> Result<f64, ChebyshevError> {
    Ok(2.0 / (4.0 - x * x) * sine_target(x, a, b)?)
}

/// Free zero density `1/(π √(4-x²))` on `(-2, 2)`, zero elsewhere.
pub fn rho0(x: f64) -> f64 {
    if x.abs() < 2.0 {
        1.0 / (PI * (4.0 - x * x).sqrt())
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn psi_boundary_values() {
        assert_eq!(psi1(0, c(0.7)).unwrap(), c(1.0));
        assert_eq!(psi1(-1, c(0.7)).unwrap(), c(0.0));
        assert_eq!(psi2(0, c(1.3)).unwrap(), c(0.0));
        assert_eq!(psi2(-1, c(1.3)).unwrap(), c(1.0));
    }

    #[test]
    fn psi_closed_form_values() {
        assert!((psi1(2, c(0.0)).unwrap() - c(-1.0)).norm() < 1e-15);
        assert!((psi1(3, c(1.0)).unwrap() - c(-1.0)).norm() < 1e-14);
        for x in [-1.9, -0.3, 0.0, 0.8, 1.99] {
            assert_eq!(psi2(1, c(x)).unwrap(), c(-1.0));
        }
        assert!(psi2(4, c(0.0)).unwrap().norm() < 1e-15);
    }

    #[test]
    fn trig_mode_rejects_outside_bulk() {
        assert!(matches!(
            psi1(3, c(2.0)),
            Err(ChebyshevError::OutsideBulk { .. })
        ));
        assert!(matches!(
            psi2(3, c(-2.5)),
            Err(ChebyshevError::OutsideBulk { .. })
        ));
        // the recurrence path has no such restriction
        let v = psi1_with(3, c(2.5), Evaluation::Recurrence).unwrap();
        assert!((v - c(2.5f64.powi(3) - 2.0 * 2.5)).norm() < 1e-12);
        assert!(psi1(1, Complex64::new(2.5, 0.1)).is_ok());
    }

    #[test]
    fn psi2_is_exact_negated_shift() {
        for n in 0..200 {
            for z in [c(0.31), c(-1.7), Complex64::new(0.4, 0.003)] {
                assert_eq!(psi2(n, z).unwrap(), -psi1(n - 1, z).unwrap());
            }
        }
    }

    #[test]
    fn recurrence_and_trig_agree() {
        for z in [c(0.3), c(-1.2), Complex64::new(1.1, 1.0 / 300.0)] {
            for n in [0, 1, 5, 77, 300] {
                let t = psi1(n, z).unwrap();
                let r = psi1_with(n, z, Evaluation::Recurrence).unwrap();
                assert!((t - r).norm() < 1e-11 * (1.0 + t.norm()), "{n} {z}");
            }
        }
    }

    #[test]
    fn transfer_matrix_small_cases() {
        assert_eq!(transfer_matrix(0, c(0.9)).0, Mat2::IDENTITY);
        assert_eq!(
            transfer_matrix(1, c(0.3)).0,
            Mat2::from_real(0.3, -1.0, 1.0, 0.0)
        );
        let det = transfer_matrix(50, c(1.1)).det();
        assert!((det - 1.0).norm() < 1e-10);
    }

    #[test]
    fn transfer_matrix_entries_match_psi() {
        let z = Complex64::new(-0.6, 0.01);
        for n in [1u64, 2, 9, 40] {
            let t = transfer_matrix(n, z);
            let ni = n as i64;
            let expect = Mat2::new(
                psi1(ni, z).unwrap(),
                psi2(ni, z).unwrap(),
                psi1(ni - 1, z).unwrap(),
                psi2(ni - 1, z).unwrap(),
            );
            assert!((t.0 - expect).max_abs_entry() < 1e-11);
            assert!((transfer_matrix_trig(n, z).0 - expect).max_abs_entry() < 1e-15);
        }
    }

    #[test]
    fn sweep_yields_powers() {
        let z = c(1.4);
        for (n, t) in TransferSweep::new(z).take(30).enumerate() {
            assert!((t.0 - transfer_matrix(n as u64, z).0).max_abs_entry() < 1e-12);
        }
    }

    #[test]
    fn closed_form_bounds() {
        assert!((m_bound(1).unwrap().bound - 4.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((m_bound(2).unwrap().bound - 2.0 / (7.0f64 / 16.0).sqrt()).abs() < 1e-14);
        assert!((m_bound(2).unwrap().bound - 3.0237).abs() < 1e-4);
        assert!(m_bound(4).unwrap().bound >= m_bound(2).unwrap().bound);
        assert_eq!(m_bound(0), Err(ChebyshevError::InvalidInterval));
    }

    #[test]
    fn bounds_certify_and_grow() {
        let mut prev = 0.0;
        for m in 1..=16 {
            let b = m_bound(m).unwrap();
            assert!(b.bound >= 1.0 && b.bound >= prev);
            assert_eq!(b.strip_bound, STRIP_SAFETY * b.bound);
            prev = b.bound;
        }
    }

    #[test]
    fn sine_target_values() {
        assert_eq!(sine_target(0.4, 1.3, 1.3).unwrap(), 1.0);
        assert!((sine_target(0.0, 0.0, PI).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!((sine_target(0.0, 0.0, 0.5 * PI * 2.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(sine_target(0.0, 0.0, 2.0 * PI).unwrap().abs() < 1e-15);
        assert_eq!(sine_target(0.9, -0.3, 1.7), sine_target(0.9, 1.7, -0.3));
        assert!(sine_target(2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rho0_values() {
        assert!((rho0(0.0) - 1.0 / (2.0 * PI)).abs() < 1e-16);
        assert_eq!(rho0(3.0), 0.0);
        assert!((rho0(3f64.sqrt()) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn spectral_point_invariants() {
        let p = SpectralPoint::new(1.2).unwrap();
        assert!((2.0 * p.theta().cos() - 1.2).abs() < 1e-14);
        assert!(p.theta() > 0.0 && p.theta() < PI);
        assert!(SpectralPoint::new(-2.0).is_err());
        assert!(SpectralPoint::from_theta(0.0).is_err());
    }
}
