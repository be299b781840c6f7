use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::jacobi::JacobiParams;

/// Largest supported truncation.
pub const MAX_QUADRATURE_ORDER: usize = 5000;

const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureNode {
    pub node: f64,
    pub weight: f64,
}

/// Gauss quadrature of the spectral measure: eigenvalues of the `n × n`
/// truncated Jacobi matrix and squared first eigenvector components.
pub fn quadrature_approx(n: usize, params: &JacobiParams<'_>) -> Result<Vec<QuadratureNode>, HarnessError> {
    if n == 0 || n > MAX_QUADRATURE_ORDER {
        return Err(HarnessError::InvalidConfig(format!(
            "quadrature order {n} outside 1..={MAX_QUADRATURE_ORDER}"
        )));
    }
    let mut d: Vec<f64> = (1..=n as u64).map(|k| params.b_at(k)).collect();
    let mut e = vec![1.0; n];
    e[n - 1] = 0.0;
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tridiagonal_ql(&mut d, &mut e, &mut z)?;
    let mut out: Vec<QuadratureNode> = d
        .into_iter()
        .zip(z)
        .map(|(node, v)| QuadratureNode { node, weight: v * v })
        .collect();
    out.sort_by(|a, b| a.node.total_cmp(&b.node));
    Ok(out)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e[i] = T[i][i+1]`. On return `d` holds the eigenvalues
/// and `z` the first row of the eigenvector matrix (start from `e_1`).
pub fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<(), HarnessError> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(HarnessError::Quadrature(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let signed = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed);
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::SparseSpec;
    use std::f64::consts::PI;

    #[test]
    fn tiny_cases() {
        let free = SparseSpec::free();
        let p = JacobiParams::full(&free);
        let q = quadrature_approx(1, &p).unwrap();
        assert_eq!(q, vec![QuadratureNode { node: 0.0, weight: 1.0 }]);
        let q = quadrature_approx(2, &p).unwrap();
        assert!((q[0].node + 1.0).abs() < 1e-15 && (q[1].node - 1.0).abs() < 1e-15);
        assert!((q[0].weight - 0.5).abs() < 1e-15 && (q[1].weight - 0.5).abs() < 1e-15);
        assert!(quadrature_approx(0, &p).is_err());
        assert!(quadrature_approx(5001, &p).is_err());
    }

    #[test]
    fn free_nodes_are_chebyshev_zeros() {
        let free = SparseSpec::free();
        let q = quadrature_approx(5, &JacobiParams::full(&free)).unwrap();
        for (k, node) in q.iter().enumerate() {
            let expect = 2.0 * ((5 - k) as f64 * PI / 6.0).cos();
            assert!((node.node - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_and_bounds() {
        let spec = SparseSpec::explicit(vec![0.7, -0.5], vec![2, 30]).unwrap();
        let p = JacobiParams::full(&spec);
        let q = quadrature_approx(400, &p).unwrap();
        let w: f64 = q.iter().map(|n| n.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
        let m1: f64 = q.iter().map(|n| n.weight * n.node).sum();
        let m2: f64 = q.iter().map(|n| n.weight * n.node * n.node).sum();
        assert!(m1.abs() < 1e-10);
        assert!((m2 - 1.0).abs() < 1e-10);
        let edge = 2.0 + spec.max_abs_coupling();
        assert!(q.iter().all(|n| n.weight >= 0.0 && n.node.abs() <= edge));
    }
}
