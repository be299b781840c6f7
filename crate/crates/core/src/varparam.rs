//! Variation of parameters: `(p_n, p_{n-1}) = T_n(z) A_n(z)`.
//!
//! `A_n` only changes across a site, through
//!
//! ```text
//! A_{n+1} = (I + Φ_n) A_n,    Φ_n = -b_{n+1} [[ ψ¹ψ², (ψ²)² ], [ -(ψ¹)², -ψ¹ψ² ]]
//! ```
//!
//! with `ψ = ψ_n(z)`. `Φ_n` is nilpotent so `(I + Φ_n)⁻¹ = I - Φ_n`.

use num_complex::Complex64;
use thiserror::Error;

use crate::chebyshev::transfer_matrix_trig;
use crate::jacobi::{eval_poly, EvalError, JacobiParams, Level, PolyPair};
use crate::mat2::Mat2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VarParamError {
    #[error("index {n} is before the site at {site}")]
    BeforeSite { n: u64, site: u64 },
    #[error("cannot step back from n = 0")]
    BelowZero,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `A_n(z)` for the operator at `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarCoeffs {
    pub n: u64,
    pub a1: Complex64,
    pub a2: Complex64,
    pub z: Complex64,
    pub level: Level,
}

impl VarCoeffs {
    /// Coefficients of the unperturbed solution `p_n = ψ¹_n`.
    pub fn free(n: u64, z: Complex64, level: Level) -> Self {
        VarCoeffs {
            n,
            a1: Complex64::new(1.0, 0.0),
            a2: Complex64::new(0.0, 0.0),
            z,
            level,
        }
    }

    /// Solves `T_n A = (p_n, p_{n-1})` with the adjugate of `T_n`.
    pub fn from_pair(pair: &PolyPair, level: Level) -> Self {
        let t = transfer_matrix_trig(pair.n, pair.z);
        let [a1, a2] = t.inverse().apply([pair.p, pair.p_prev]);
        VarCoeffs {
            n: pair.n,
            a1,
            a2,
            z: pair.z,
            level,
        }
    }

    pub fn vector(&self) -> [Complex64; 2] {
        [self.a1, self.a2]
    }

    /// `|A₁|² + |A₂|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.a1.norm_sqr() + self.a2.norm_sqr()
    }

    /// `T_n(z) A_n`.
    pub fn reconstruct(&self) -> PolyPair {
        let t = transfer_matrix_trig(self.n, self.z);
        let [p, p_prev] = t.0.apply(self.vector());
        PolyPair {
            n: self.n,
            p,
            p_prev,
            z: self.z,
        }
    }

    fn with(&self, n: u64, v: [Complex64; 2]) -> Self {
        VarCoeffs {
            n,
            a1: v[0],
            a2: v[1],
            ..*self
        }
    }
}

/// `Φ_n(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbStep {
    pub n: u64,
    pub phi: Mat2,
}

impl PerturbStep {
    pub fn is_zero(&self) -> bool {
        self.phi == Mat2::ZERO
    }
}

/// `A_n(z) = T_n(z)⁻¹ (p_n(z), p_{n-1}(z))`.
pub fn coeffs_from_poly(
    n: u64,
    z: Complex64,
    params: &JacobiParams<'_>,
) -> Result<VarCoeffs, VarParamError> {
    let pair = eval_poly(n, z, params)?;
    Ok(VarCoeffs::from_pair(&pair, params.level()))
}

/// `Φ_n(z)` built from `b_{n+1}` and `ψ_n(z)`.
pub fn phi_step(n: u64, z: Complex64, params: &JacobiParams<'_>) -> PerturbStep {
    phi_for(n, z, params.b_at(n + 1))
}

fn phi_for(n: u64, z: Complex64, b: f64) -> PerturbStep {
    if b == 0.0 {
        return PerturbStep { n, phi: Mat2::ZERO };
    }
    let t = transfer_matrix_trig(n, z);
    let (u, v) = (t.psi1(), t.psi2());
    let phi = Mat2::new(u * v, v * v, -(u * u), -(u * v)).scale((-b).into());
    PerturbStep { n, phi }
}

/// `A_{n+1} = (I + Φ_n) A_n`.
pub fn step_a(coeffs: &VarCoeffs, params: &JacobiParams<'_>) -> VarCoeffs {
    let step = phi_step(coeffs.n, coeffs.z, params);
    if step.is_zero() {
        return coeffs.with(coeffs.n + 1, coeffs.vector());
    }
    let a = coeffs.vector();
    let d = step.phi.apply(a);
    coeffs.with(coeffs.n + 1, [a[0] + d[0], a[1] + d[1]])
}

/// `A_{n-1} = (I - Φ_{n-1}) A_n`.
pub fn step_a_back(coeffs: &VarCoeffs, params: &JacobiParams<'_>) -> Result<VarCoeffs, VarParamError> {
    if coeffs.n == 0 {
        return Err(VarParamError::BelowZero);
    }
    let step = phi_step(coeffs.n - 1, coeffs.z, params);
    if step.is_zero() {
        return Ok(coeffs.with(coeffs.n - 1, coeffs.vector()));
    }
    let a = coeffs.vector();
    let d = step.phi.apply(a);
    Ok(coeffs.with(coeffs.n - 1, [a[0] - d[0], a[1] - d[1]]))
}

/// `A_n` by applying `I + Φ` only at the active sites below or at `n`;
/// O(number of sites).
pub fn coeffs_by_chain(n: u64, z: Complex64, params: &JacobiParams<'_>) -> VarCoeffs {
    let mut a = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    for site in params.active_sites().iter().take_while(|s| s.position <= n) {
        let phi = phi_for(site.position - 1, z, site.coupling).phi;
        let d = phi.apply(a);
        a = [a[0] + d[0], a[1] + d[1]];
    }
    VarCoeffs::free(n, z, params.level()).with(n, a)
}

/// `κ = A₁² + A₂² - A₁A₂x` (algebraic squares).
pub fn kappa(coeffs: &VarCoeffs, x: f64) -> Complex64 {
    coeffs.a1 * coeffs.a1 + coeffs.a2 * coeffs.a2 - coeffs.a1 * coeffs.a2 * x
}

/// `(1 - |x|/2)(|A₁|² + |A₂|²)`, a lower bound for `|κ|` at real `x`.
pub fn kappa_lower_bound(coeffs: &VarCoeffs, x: f64) -> f64 {
    (1.0 - x.abs() / 2.0) * coeffs.norm_sqr()
}

/// Adds one site `(site, v)` to level-ℓ values at `n ≥ site`:
///
/// ```text
/// p^{ℓ+1}_n = p^ℓ_n - v p^ℓ_{site-1}(z) ψ¹_{n-site}(z)
/// ```
///
/// and likewise at `n - 1`. `anchor` is `p^ℓ_{site-1}(z)`.
pub fn single_bump_update(
    pvec: &PolyPair,
    v: f64,
    site: u64,
    anchor: Complex64,
) -> Result<PolyPair, VarParamError> {
    if pvec.n < site {
        return Err(VarParamError::BeforeSite { n: pvec.n, site });
    }
    if v == 0.0 {
        return Ok(*pvec);
    }
    let t = transfer_matrix_trig(pvec.n - site, pvec.z);
    let c = anchor * v;
    Ok(PolyPair {
        p: pvec.p - c * t.psi1(),
        p_prev: pvec.p_prev - c * t.0 .0[1][0],
        ..*pvec
    })
}
