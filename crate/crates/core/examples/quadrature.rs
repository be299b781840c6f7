//! Gauss quadrature of the spectral measure for a sparse operator, and its
//! first moments.

use sparse_universality::harness::quadrature_approx;
use sparse_universality::jacobi::{JacobiParams, SparseSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SparseSpec::explicit(vec![1.0, 0.7, 0.5], vec![4, 16, 128])?;
    let nodes = quadrature_approx(200, &JacobiParams::full(&spec))?;
    for k in 0..=4 {
        let m: f64 = nodes.iter().map(|q| q.weight * q.node.powi(k)).sum();
        println!("moment {k}: {m:+.12}");
    }
    let heavy = nodes.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
    println!("{} nodes in [{:.6}, {:.6}], heaviest {:.6} weight {:.3e}", nodes.len(), nodes[0].node, nodes[nodes.len() - 1].node, heavy.node, heavy.weight);
    Ok(())
}
