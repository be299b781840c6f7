//! Places three sites for `v_j = j^(-1/2)` and prints the certificate chain.

use sparse_universality::jacobi::CouplingRule;
use sparse_universality::sparsifier::{classify_measure, generate_spec, SparsifierConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SparsifierConfig::default();
    let out = generate_spec(&CouplingRule::inverse_sqrt(), 3, &cfg)?;
    println!("{:>3} {:>10} {:>10} {:>14} {:>14} {:>10}", "l", "N_hat", "v", "kernel_err", "ratio_err", "ratio_A");
    for cert in &out.certificates {
        let v = out.spec.sites().get(cert.level).map_or(f64::NAN, |s| s.coupling);
        println!(
            "{:>3} {:>10} {:>10.4} {:>14.6e} {:>14.6e} {:>10.4}",
            cert.level, cert.n_hat, v, cert.max_kernel_error, cert.max_ratio_error, cert.ratio_a_max
        );
        for p in &cert.probes {
            println!("      probe n={:<10} kernel={:.3e} ratio={:.3e} A={:.3} kappa_margin={:.3e}", p.n, p.kernel_error, p.ratio_error, p.ratio_a, p.kappa_margin);
        }
    }
    println!("sites: {:?}", out.spec.positions());
    println!("measure: {}", classify_measure(&out.spec));
    Ok(())
}
