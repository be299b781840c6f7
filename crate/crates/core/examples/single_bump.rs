//! One coupling at site 50: the kernel before and after the bump, and the
//! closed-form update of the polynomials.

use num_complex::Complex64;
use sparse_universality::jacobi::{eval_poly, JacobiParams, SparseSpec};
use sparse_universality::varparam::{coeffs_by_chain, coeffs_from_poly, kappa, single_bump_update};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (site, v) = (50u64, 0.4);
    let free = SparseSpec::free();
    let bumped = SparseSpec::explicit(vec![v], vec![site])?;
    let z = Complex64::new(0.3, 0.0);
    let anchor = eval_poly(site - 1, z, &JacobiParams::full(&free))?.p;
    for n in [site, 2 * site, 1000, 10_000] {
        let before = eval_poly(n, z, &JacobiParams::full(&free))?;
        let direct = eval_poly(n, z, &JacobiParams::full(&bumped))?;
        let updated = single_bump_update(&before, v, site, anchor)?;
        println!("n={n:<6} p_n={:+.10} update={:+.10} diff={:.1e}", direct.p.re, updated.p.re, (direct.p - updated.p).norm());
    }
    let params = JacobiParams::full(&bumped);
    for n in [site - 1, site, 400] {
        let a = coeffs_from_poly(n, z, &params)?;
        let chain = coeffs_by_chain(n, z, &params);
        println!("A_{n} = ({:+.8}, {:+.8}) chain diff {:.1e} kappa {:.8}", a.a1.re, a.a2.re, (a.a1 - chain.a1).norm() + (a.a2 - chain.a2).norm(), kappa(&a, z.re).re);
    }
    Ok(())
}
