use num_complex::Complex64;
use thiserror::Error;

use super::{JacobiParams, Site};
use crate::scalar::{Compensated, Scalar};

/// Values beyond this magnitude mean the point left the bulk.
pub const ESCAPE_THRESHOLD: f64 = 1e200;

const GUARD_CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("recurrence escaped the bulk regime at n = {n} for z = {z}")]
    EscapedBulk { n: u64, z: Complex64 },
}

/// Arithmetic used by the recurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    #[default]
    Double,
    /// Double-double arithmetic for certification runs.
    Compensated,
}

/// `(p_n(z), p_{n-1}(z))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyPair {
    pub n: u64,
    pub p: Complex64,
    pub p_prev: Complex64,
    pub z: Complex64,
}

/// Recurrence end state, optionally with `z`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyState {
    pub n: u64,
    pub z: Complex64,
    pub p: Complex64,
    pub p_prev: Complex64,
    /// `p_n'(z)`; zero when derivatives were not requested.
    pub dp: Complex64,
    /// `p_{n-1}'(z)`; zero when derivatives were not requested.
    pub dp_prev: Complex64,
}

impl PolyState {
    pub fn pair(&self) -> PolyPair {
        PolyPair {
            n: self.n,
            p: self.p,
            p_prev: self.p_prev,
            z: self.z,
        }
    }
}

#[derive(Clone, Copy)]
struct Lane<T> {
    z: T,
    p: T,
    p_prev: T,
    dp: T,
    dp_prev: T,
}

#[inline]
fn free_steps<T: Scalar>(lanes: &mut [Lane<T>], steps: u64, derivative: bool) {
    if derivative {
        for _ in 0..steps {
            for l in lanes.iter_mut() {
                let np = l.z * l.p - l.p_prev;
                let ndp = l.z * l.dp + l.p - l.dp_prev;
                l.p_prev = l.p;
                l.p = np;
                l.dp_prev = l.dp;
                l.dp = ndp;
            }
        }
    } else {
        for _ in 0..steps {
            for l in lanes.iter_mut() {
                let np = l.z * l.p - l.p_prev;
                l.p_prev = l.p;
                l.p = np;
            }
        }
    }
}

#[inline]
fn site_step<T: Scalar>(lanes: &mut [Lane<T>], b: f64, derivative: bool) {
    let b = T::from_real(b);
    for l in lanes.iter_mut() {
        let zb = l.z - b;
        let np = zb * l.p - l.p_prev;
        if derivative {
            let ndp = zb * l.dp + l.p - l.dp_prev;
            l.dp_prev = l.dp;
            l.dp = ndp;
        }
        l.p_prev = l.p;
        l.p = np;
    }
}

fn guard<T: Scalar>(lanes: &[Lane<T>], k: u64) -> Result<(), EvalError> {
    for l in lanes {
        let m = l.p.magnitude().max(l.p_prev.magnitude());
        if !(m <= ESCAPE_THRESHOLD) {
            return Err(EvalError::EscapedBulk {
                n: k,
                z: l.z.to_complex(),
            });
        }
    }
    Ok(())
}

fn guarded_free_steps<T: Scalar>(
    lanes: &mut [Lane<T>],
    k: &mut u64,
    target: u64,
    derivative: bool,
) -> Result<(), EvalError> {
    while *k < target {
        let chunk = (target - *k).min(GUARD_CHUNK);
        free_steps(lanes, chunk, derivative);
        *k += chunk;
        guard(lanes, *k)?;
    }
    Ok(())
}

fn run<T: Scalar>(
    n: u64,
    points: &[Complex64],
    sites: &[Site],
    init: [Complex64; 2],
    derivative: bool,
) -> Result<Vec<PolyState>, EvalError> {
    let zero = T::zero();
    let mut lanes: Vec<Lane<T>> = points
        .iter()
        .map(|&z| Lane {
            z: T::from_complex(z),
            p: T::from_complex(init[0]),
            p_prev: T::from_complex(init[1]),
            dp: zero,
            dp_prev: zero,
        })
        .collect();
    let mut k = 0u64;
    for site in sites.iter().take_while(|s| s.position <= n) {
        guarded_free_steps(&mut lanes, &mut k, site.position - 1, derivative)?;
        site_step(&mut lanes, site.coupling, derivative);
        k = site.position;
    }
    guarded_free_steps(&mut lanes, &mut k, n, derivative)?;
    guard(&lanes, n)?;
    Ok(lanes
        .iter()
        .zip(points)
        .map(|(l, &z)| PolyState {
            n,
            z,
            p: l.p.to_complex(),
            p_prev: l.p_prev.to_complex(),
            dp: l.dp.to_complex(),
            dp_prev: l.dp_prev.to_complex(),
        })
        .collect())
}

/// Runs the recurrence from an arbitrary initial pair `(φ_0, φ_{-1})` at
/// every point in one pass over the site list.
pub(crate) fn run_batch(
    n: u64,
    points: &[Complex64],
    sites: &[Site],
    init: [Complex64; 2],
    precision: Precision,
    derivative: bool,
) -> Result<Vec<PolyState>, EvalError> {
    let real = init.iter().chain(points).all(|z| z.im == 0.0);
    match precision {
        Precision::Double if real => run::<f64>(n, points, sites, init, derivative),
        Precision::Double => run::<Complex64>(n, points, sites, init, derivative),
        Precision::Compensated => run::<Compensated>(n, points, sites, init, derivative),
    }
}

const START: [Complex64; 2] = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];

/// `(p_n, p_{n-1})` and optionally derivatives at several points, sharing one
/// pass over the sites.
pub fn eval_poly_batch(
    n: u64,
    points: &[Complex64],
    params: &JacobiParams<'_>,
    precision: Precision,
    derivative: bool,
) -> Result<Vec<PolyState>, EvalError> {
    run_batch(n, points, params.active_sites(), START, precision, derivative)
}

/// `(p_n(z), p_{n-1}(z))` by forward recurrence; O(n) time, O(1) memory.
pub fn eval_poly(n: u64, z: Complex64, params: &JacobiParams<'_>) -> Result<PolyPair, EvalError> {
    eval_poly_with(n, z, params, Precision::Double)
}

pub fn eval_poly_with(
    n: u64,
    z: Complex64,
    params: &JacobiParams<'_>,
    precision: Precision,
) -> Result<PolyPair, EvalError> {
    let st = eval_poly_batch(n, &[z], params, precision, false)?;
    Ok(st[0].pair())
}

/// Calls `sink` with `(p_n, p_{n-1})` for `n = 0, 1, …, n_max` in order.
pub fn eval_poly_stream<F>(
    n_max: u64,
    z: Complex64,
    params: &JacobiParams<'_>,
    mut sink: F,
) -> Result<(), EvalError>
where
    F: FnMut(&PolyPair),
{
    for pair in PolyRecurrence::new(z, params).take(n_max as usize + 1) {
        let m = pair.p.norm().max(pair.p_prev.norm());
        if !(m <= ESCAPE_THRESHOLD) {
            return Err(EvalError::EscapedBulk { n: pair.n, z });
        }
        sink(&pair);
    }
    Ok(())
}

/// Unbounded iterator over `(p_n, p_{n-1})`, `n = 0, 1, 2, …`.
#[derive(Debug, Clone)]
pub struct PolyRecurrence<'a> {
    z: Complex64,
    sites: &'a [Site],
    cursor: usize,
    n: u64,
    p: Complex64,
    p_prev: Complex64,
}

impl<'a> PolyRecurrence<'a> {
    pub fn new(z: Complex64, params: &JacobiParams<'a>) -> Self {
        PolyRecurrence {
            z,
            sites: params.active_sites(),
            cursor: 0,
            n: 0,
            p: START[0],
            p_prev: START[1],
        }
    }
}

impl Iterator for PolyRecurrence<'_> {
    type Item = PolyPair;

    fn next(&mut self) -> Option<PolyPair> {
        let out = PolyPair {
            n: self.n,
            p: self.p,
            p_prev: self.p_prev,
            z: self.z,
        };
        let next_n = self.n + 1;
        let np = match self.sites.get(self.cursor) {
            Some(site) if site.position == next_n => {
                self.cursor += 1;
                let zb = self.z - Complex64::new(site.coupling, 0.0);
                zb * self.p - self.p_prev
            }
            _ => self.z * self.p - self.p_prev,
        };
        self.p_prev = self.p;
        self.p = np;
        self.n = next_n;
        Some(out)
    }
}
