//! Singular versus absolutely continuous spectral measure for a few coupling
//! rules.

use sparse_universality::jacobi::{CouplingRule, EnvelopeRule, SparseSpec};
use sparse_universality::sparsifier::classify_measure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rules = [
        ("j^-1/2", CouplingRule::inverse_sqrt()),
        ("j^-1", CouplingRule::PowerLaw { amplitude: 1.0, exponent: 1.0 }),
        ("0.9 * 2^-j", CouplingRule::Geometric { amplitude: 0.9, ratio: 0.5 }),
        ("zero", CouplingRule::Zero),
    ];
    for (name, rule) in rules {
        let spec = SparseSpec::new(rule, EnvelopeRule::Auto, vec![], false)?;
        println!("{name:<12} {}", classify_measure(&spec));
    }
    Ok(())
}
