//! Maximum error per order for a sparse spec, with thresholds `N(eps)`.
//! Pass a directory to also write the CSV files and an SVG plot.

use std::path::PathBuf;

use sparse_universality::harness::{
    decades, emit_plot, emit_rows, emit_table, emit_thresholds, run_convergence_table,
    run_universality_sweep, square_grid, ExperimentConfig,
};
use sparse_universality::jacobi::SparseSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SparseSpec::explicit(vec![0.5, 0.3], vec![8, 200])?;
    let mut cfg = ExperimentConfig::new(spec, vec![-1.0, 0.0, 1.0], square_grid(2.0, 5), decades(2, 5));
    cfg.epsilons = vec![0.1, 0.01, 0.001];
    let table = run_convergence_table(&cfg)?;
    for (n, e) in &table.rows {
        println!("n={n:<8} max_err={e:.4e}");
    }
    for (eps, n) in &table.thresholds {
        println!("N({eps}) = {n:?}");
    }
    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        emit_rows(&run_universality_sweep(&cfg)?, &dir.join("rows.csv"))?;
        emit_table(&table, &dir.join("table.csv"))?;
        emit_thresholds(&table, &dir.join("thresholds.csv"))?;
        emit_plot(&table, "max kernel-ratio error", &dir.join("table.svg"))?;
    }
    Ok(())
}
