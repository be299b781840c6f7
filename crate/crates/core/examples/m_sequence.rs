//! Breakpoints of the interval-growth sequence `m_n` for two envelopes.

use sparse_universality::jacobi::{CouplingRule, EnvelopeRule, SparseSpec};
use sparse_universality::sparsifier::build_m_sequence;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rules = [
        ("2^-j", CouplingRule::Geometric { amplitude: 1.0, ratio: 0.5 }),
        ("j^-1/2", CouplingRule::inverse_sqrt()),
    ];
    for (name, rule) in rules {
        let spec = SparseSpec::new(rule, EnvelopeRule::Auto, vec![], false)?;
        let mseq = build_m_sequence(&spec)?;
        println!("{name}: breakpoints {:?}", mseq.breakpoints());
        for n in [1u64, 5, 100, 1_000, 1_000_000] {
            println!("  m_{n} = {}", mseq.m_at(n));
        }
    }
    Ok(())
}
