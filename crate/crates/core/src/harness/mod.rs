//! Experiment orchestration: universality sweeps, convergence tables,
//! quadrature of the spectral measure and result files.

mod config;
mod output;
mod quadrature;

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::cdkernel::{GridEvaluation, KernelError, KernelQuery};
use crate::chebyshev::sine_target;
use crate::jacobi::{JacobiParams, Precision, SparseSpec, SpecError};
use crate::sparsifier::SparsifyError;

pub use config::{
    ExperimentConfig, ExperimentDocument, Grids, Mode, Outputs, ResolvedSpec, SparsifierSection,
    SpecSource,
};
pub use output::{
    emit_plot, emit_quadrature, emit_rows, emit_table, emit_thresholds, fmt_f64, read_rows,
    render_plot, write_text, QUADRATURE_HEADER, ROW_HEADER, TABLE_HEADER, THRESHOLD_HEADER,
};
pub use quadrature::{quadrature_approx, tridiagonal_ql, QuadratureNode, MAX_QUADRATURE_ORDER};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Sparsify(#[from] SparsifyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        HarnessError::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One `(n, x, a, b)` evaluation of the kernel ratio against its limit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: u64,
    pub x: f64,
    pub a: f64,
    pub b: f64,
    pub ratio: Complex64,
    pub target: f64,
    pub abs_err: f64,
    /// Number of sites seen by `K_n`.
    pub level: usize,
    /// Set for queries that could not be evaluated; numeric fields are NaN.
    pub error: Option<String>,
}

impl ResultRow {
    fn failed(n: u64, x: f64, a: f64, b: f64, level: usize, err: impl ToString) -> Self {
        ResultRow {
            n,
            x,
            a,
            b,
            ratio: Complex64::new(f64::NAN, f64::NAN),
            target: f64::NAN,
            abs_err: f64::NAN,
            level,
            error: Some(err.to_string()),
        }
    }
}

/// Rows for one `(x, n)` task, sharing one batched recurrence pass.
pub fn sweep_point(
    x: f64,
    n: u64,
    ab_grid: &[(f64, f64)],
    params: &JacobiParams<'_>,
    precision: Precision,
) -> Vec<ResultRow> {
    let level = params.sites_below(n);
    let mut valid = Vec::new();
    let mut rows: Vec<Option<ResultRow>> = Vec::with_capacity(ab_grid.len());
    for &(a, b) in ab_grid {
        match KernelQuery::real(x, a, b, n).and_then(|_| sine_target(x, a, b).map_err(Into::into)) {
            Ok(_) => {
                valid.push(Complex64::from(a));
                valid.push(Complex64::from(b));
                rows.push(None);
            }
            Err(e) => rows.push(Some(ResultRow::failed(n, x, a, b, level, e))),
        }
    }
    let eval = if valid.is_empty() {
        None
    } else {
        match GridEvaluation::new(x, n, &valid, params, precision) {
            Ok(e) => Some(e),
            Err(e) => {
                return ab_grid
                    .iter()
                    .map(|&(a, b)| ResultRow::failed(n, x, a, b, level, &e))
                    .collect()
            }
        }
    };
    ab_grid
        .iter()
        .zip(rows)
        .map(|(&(a, b), row)| {
            if let Some(r) = row {
                return r;
            }
            let eval = eval.as_ref().expect("valid queries were evaluated");
            match eval.ratio(a.into(), b.into(), params) {
                Ok(v) => {
                    let target = sine_target(x, a, b).expect("checked above");
                    ResultRow {
                        n,
                        x,
                        a,
                        b,
                        ratio: v.ratio,
                        target,
                        abs_err: (v.ratio - target).norm(),
                        level,
                        error: None,
                    }
                }
                Err(e) => ResultRow::failed(n, x, a, b, level, e),
            }
        })
        .collect()
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|p, q| {
        p.x.total_cmp(&q.x)
            .then(p.n.cmp(&q.n))
            .then(p.a.total_cmp(&q.a))
            .then(p.b.total_cmp(&q.b))
    });
}

/// Rows for every `(x, n, a, b)`, sorted by that key; `(x, n)` tasks run in
/// parallel.
pub fn sweep_spec(
    spec: &SparseSpec,
    x_list: &[f64],
    ab_grid: &[(f64, f64)],
    n_list: &[u64],
    precision: Precision,
) -> Vec<ResultRow> {
    let params = JacobiParams::full(spec);
    let tasks: Vec<(f64, u64)> = x_list
        .iter()
        .flat_map(|&x| n_list.iter().map(move |&n| (x, n)))
        .collect();
    let mut rows: Vec<ResultRow> = tasks
        .par_iter()
        .map(|&(x, n)| sweep_point(x, n, ab_grid, &params, precision))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    sort_rows(&mut rows);
    rows
}

pub fn run_universality_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.validate()?;
    let resolved = cfg.resolve_spec()?;
    Ok(sweep_spec(
        &resolved.spec,
        &cfg.x_list,
        &cfg.ab_grid,
        &cfg.n_list,
        cfg.precision(),
    ))
}

/// Per-order maximum error and the empirical thresholds `N(ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    /// `(n, sup |ratio - target|)` in `n_list` order.
    pub rows: Vec<(u64, f64)>,
    /// `(ε, N(ε))`: the least `n` from which every listed order has error at
    /// most `ε`.
    pub thresholds: Vec<(f64, Option<u64>)>,
}

pub fn convergence_table(rows: &[ResultRow], n_list: &[u64], epsilons: &[f64]) -> ConvergenceTable {
    let table: Vec<(u64, f64)> = n_list
        .iter()
        .map(|&n| {
            let worst = rows
                .iter()
                .filter(|r| r.n == n && r.error.is_none())
                .map(|r| r.abs_err)
                .fold(0.0, f64::max);
            (n, worst)
        })
        .collect();
    let thresholds = epsilons
        .iter()
        .map(|&eps| {
            let mut found = None;
            for &(n, err) in table.iter().rev() {
                if err <= eps {
                    found = Some(n);
                } else {
                    break;
                }
            }
            (eps, found)
        })
        .collect();
    ConvergenceTable {
        rows: table,
        thresholds,
    }
}

pub fn run_convergence_table(cfg: &ExperimentConfig) -> Result<ConvergenceTable, HarnessError> {
    let rows = run_universality_sweep(cfg)?;
    Ok(convergence_table(&rows, &cfg.n_list, &cfg.epsilons))
}

/// Square lattice of `(a, b)` pairs on `[-r, r]²`.
pub fn square_grid(radius: f64, size: usize) -> Vec<(f64, f64)> {
    let vals = crate::sparsifier::ab_lattice(radius, size);
    vals.iter()
        .flat_map(|&a| vals.iter().map(move |&b| (a, b)))
        .collect()
}

/// `10^lo, 10^(lo+1), …, 10^hi`.
pub fn decades(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 10u64.pow(k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trivial_row() {
        let free = SparseSpec::free();
        let rows = sweep_spec(&free, &[0.0], &[(0.0, 0.0)], &[1000], Precision::Double);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].ratio, Complex64::new(1.0, 0.0));
        assert_eq!(rows[0].abs_err, 0.0);
    }

    #[test]
    fn free_error_decreases() {
        let free = SparseSpec::free();
        let rows = sweep_spec(&free, &[0.0], &[(0.0, 1.0)], &decades(3, 5), Precision::Double);
        assert!(rows.windows(2).all(|w| w[1].abs_err < w[0].abs_err), "{rows:?}");
    }

    #[test]
    fn invalid_queries_become_marked_rows() {
        let free = SparseSpec::free();
        let rows = sweep_spec(&free, &[1.99], &[(0.0, 1.0), (0.0, 50.0)], &[1000], Precision::Double);
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().any(|r| r.error.is_some() && r.abs_err.is_nan()));
        assert!(rows.iter().any(|r| r.error.is_none()));
    }

    #[test]
    fn rows_are_sorted_and_levels_tracked() {
        let spec = SparseSpec::explicit(vec![0.3, 0.2], vec![50, 500]).unwrap();
        let rows = sweep_spec(&spec, &[0.5, -0.5], &[(1.0, 0.0), (0.0, 1.0)], &[10, 100, 1000], Precision::Double);
        assert_eq!(rows[0].x, -0.5);
        assert_eq!(rows[0].a, 0.0);
        let levels: Vec<usize> = rows.iter().filter(|r| r.x == 0.5 && r.a == 0.0).map(|r| r.level).collect();
        assert_eq!(levels, vec![0, 1, 2]);
    }

    #[test]
    fn thresholds() {
        let free = SparseSpec::free();
        let rows = sweep_spec(&free, &[0.0], &[(0.0, 1.0)], &decades(2, 4), Precision::Double);
        let t = convergence_table(&rows, &decades(2, 4), &[1.0, 1e-30]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.thresholds[0], (1.0, Some(100)));
        assert_eq!(t.thresholds[1], (1e-30, None));
        assert!(convergence_table(&rows, &decades(2, 4), &[]).thresholds.is_empty());
    }
}
