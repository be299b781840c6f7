//! Free solutions, transfer matrices and the interval bounds `M(I_m)`.

use num_complex::Complex64;
use sparse_universality::chebyshev::{closed_form_bound, m_bound, psi1, psi2, transfer_matrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let z = Complex64::new(1.2, 0.0);
    for n in [0i64, 1, 2, 10, 1000] {
        println!("n={n:<5} psi1={:+.10} psi2={:+.10}", psi1(n, z)?.re, psi2(n, z)?.re);
    }
    let t = transfer_matrix(5, z);
    println!("T_5(1.2) first row: {:+.6} {:+.6}", t.0 .0[0][0].re, t.0 .0[0][1].re);
    for m in [1u32, 2, 4, 16] {
        let b = m_bound(m)?;
        println!("m={m:<3} I_m=[{:+.4}, {:+.4}] M={:.4} closed form {:.4}", b.lo, b.hi, b.bound, closed_form_bound(m));
    }
    Ok(())
}
