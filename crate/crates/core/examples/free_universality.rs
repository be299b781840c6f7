//! Kernel ratio of the free operator against the sine kernel at a few orders.

use sparse_universality::cdkernel::{kernel_ratio, KernelQuery};
use sparse_universality::chebyshev::sine_target;
use sparse_universality::jacobi::{JacobiParams, SparseSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let free = SparseSpec::free();
    let params = JacobiParams::full(&free);
    let (x, a, b) = (0.5, 1.0, -1.0);
    let target = sine_target(x, a, b)?;
    println!("x={x} a={a} b={b} target={target:.12}");
    for n in [100u64, 1_000, 10_000, 100_000, 1_000_000] {
        let v = kernel_ratio(&KernelQuery::real(x, a, b, n)?, &params)?;
        println!("n={n:<8} ratio={:.12} err={:.3e} K_n(x,x)/n={:.6}", v.ratio.re, (v.ratio.re - target).abs(), v.k_diag.re / n as f64);
    }
    Ok(())
}
