use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparse_universality::harness::{
    convergence_table, emit_plot, emit_quadrature, emit_rows, emit_table, emit_thresholds,
    quadrature_approx, square_grid, sweep_spec, write_text, ExperimentDocument, HarnessError,
};
use sparse_universality::jacobi::{CouplingRule, EnvelopeRule, JacobiParams, Precision, SparseSpec};
use sparse_universality::sparsifier::{classify_measure, generate_spec, SparsifierConfig};

#[derive(Parser)]
#[command(name = "sparse-universality", version, about = "Sine-kernel universality for sparse Jacobi operators")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel-ratio errors for every (x, n, a, b)
    Universality(SweepArgs),
    /// Maximum error per n and empirical thresholds N(eps)
    Table {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Comma-separated targets eps
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Write `epsilon,n_threshold` here
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Write a log-log SVG plot here
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Place sparse sites with gap certificates
    Sparsify {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        n_cap: Option<u64>,
        #[arg(long)]
        compensated: bool,
        /// Write the spec and certificates document here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Singular / absolutely continuous verdict from the sum of v_j^2
    Classify {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Nodes and weights of the n-point Gauss quadrature
    Quadrature {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Spec or experiment document (TOML)
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Coupling rule: zero, inverse-sqrt, power:AMP:EXP, geometric:AMP:RATIO
    #[arg(long)]
    rule: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Comma-separated base points
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Square (a, b) lattice RADIUS:SIZE
    #[arg(long)]
    ab_grid: Option<String>,
    /// Comma-separated orders, strictly increasing
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<u64>,
    /// Replace the lattice by SIZE² random pairs from this seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    compensated: bool,
    /// Levels to place when the spec has adaptive sites
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

fn parse_rule(text: &str) -> CliResult<CouplingRule> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |i: usize| -> CliResult<f64> {
        Ok(parts.get(i).ok_or_else(|| format!("rule `{text}` is missing a field"))?.parse()?)
    };
    Ok(match parts[0] {
        "zero" => CouplingRule::Zero,
        "inverse-sqrt" => CouplingRule::inverse_sqrt(),
        "power" => CouplingRule::PowerLaw {
            amplitude: num(1)?,
            exponent: num(2)?,
        },
        "geometric" => CouplingRule::Geometric {
            amplitude: num(1)?,
            ratio: num(2)?,
        },
        other => return Err(format!("unknown rule `{other}`").into()),
    })
}

fn load_document(source: &SourceArgs) -> CliResult<Option<ExperimentDocument>> {
    match &source.spec {
        Some(path) => Ok(Some(ExperimentDocument::load(path)?)),
        None => Ok(None),
    }
}

fn coupling_rule(source: &SourceArgs, doc: Option<&ExperimentDocument>) -> CliResult<CouplingRule> {
    match (&source.rule, doc) {
        (Some(r), _) => parse_rule(r),
        (None, Some(d)) => Ok(d.spec.v_rule.clone()),
        (None, None) => Ok(CouplingRule::inverse_sqrt()),
    }
}

fn sparsifier_config(doc: Option<&ExperimentDocument>) -> SparsifierConfig {
    doc.and_then(|d| d.sparsifier.as_ref())
        .map(|s| s.config.clone())
        .unwrap_or_default()
}

/// An explicit spec from the document, or sites placed by the sparsifier.
fn resolve_spec(source: &SourceArgs, doc: Option<&ExperimentDocument>, levels: usize) -> CliResult<SparseSpec> {
    match doc {
        Some(d) if !d.spec.is_adaptive() => Ok(d.spec.to_spec()?),
        Some(d) => {
            let levels = d.sparsifier.as_ref().map_or(levels, |s| s.levels);
            Ok(generate_spec(&coupling_rule(source, doc)?, levels, &sparsifier_config(doc))?.spec)
        }
        None if source.rule.is_some() => {
            Ok(generate_spec(&coupling_rule(source, None)?, levels, &SparsifierConfig::default())?.spec)
        }
        None => Ok(SparseSpec::free()),
    }
}

fn ab_grid(args: &SweepArgs, doc: Option<&ExperimentDocument>) -> CliResult<Vec<(f64, f64)>> {
    let (radius, size) = match &args.ab_grid {
        Some(spec) => {
            let (r, k) = spec.split_once(':').ok_or("--ab-grid expects RADIUS:SIZE")?;
            (r.parse::<f64>()?, k.parse::<usize>()?)
        }
        None => {
            if let Some(d) = doc.filter(|d| !d.grids.ab.is_empty()) {
                return Ok(d.grids.ab.iter().map(|p| (p[0], p[1])).collect());
            }
            (2.0, 11)
        }
    };
    Ok(match args.seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..size * size)
                .map(|_| (rng.random_range(-radius..=radius), rng.random_range(-radius..=radius)))
                .collect()
        }
        None => square_grid(radius, size),
    })
}

fn sweep(args: &SweepArgs) -> CliResult<(Vec<sparse_universality::harness::ResultRow>, Vec<u64>, Option<ExperimentDocument>)> {
    let doc = load_document(&args.source)?;
    let spec = resolve_spec(&args.source, doc.as_ref(), args.levels)?;
    let pick = |given: &Vec<f64>, from_doc: Option<Vec<f64>>, default: Vec<f64>| {
        if !given.is_empty() {
            given.clone()
        } else {
            from_doc.filter(|v| !v.is_empty()).unwrap_or(default)
        }
    };
    let x_list = pick(&args.x, doc.as_ref().map(|d| d.grids.x.clone()), vec![0.0]);
    let n_list = if !args.n_list.is_empty() {
        args.n_list.clone()
    } else {
        doc.as_ref()
            .map(|d| d.grids.n.clone())
            .filter(|v| !v.is_empty())
            .unwrap_or_else(|| vec![1_000, 10_000, 100_000])
    };
    let mut cfg = sparse_universality::harness::ExperimentConfig::new(spec.clone(), x_list, ab_grid(args, doc.as_ref())?, n_list);
    cfg.compensated = args.compensated || doc.as_ref().is_some_and(|d| d.mode.compensated);
    cfg.validate()?;
    let precision = if cfg.compensated { Precision::Compensated } else { Precision::Double };
    let rows = sweep_spec(&spec, &cfg.x_list, &cfg.ab_grid, &cfg.n_list, precision);
    Ok((rows, cfg.n_list, doc))
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Universality(args) => {
            let (rows, _, _) = sweep(&args)?;
            let worst = rows.iter().filter(|r| r.error.is_none()).map(|r| r.abs_err).fold(0.0, f64::max);
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} rows, max abs_err {worst:.6e}, {failed} invalid", rows.len());
            if let Some(out) = &args.out {
                emit_rows(&rows, out)?;
            }
        }
        Command::Table { sweep: args, eps, thresholds, plot } => {
            let (rows, n_list, doc) = sweep(&args)?;
            let eps = if eps.is_empty() { doc.map(|d| d.grids.epsilons).unwrap_or_default() } else { eps };
            let table = convergence_table(&rows, &n_list, &eps);
            println!("{:>12} {:>14}", "n", "max_abs_err");
            for (n, e) in &table.rows {
                println!("{n:>12} {e:>14.6e}");
            }
            for (e, n) in &table.thresholds {
                match n {
                    Some(n) => println!("N({e:e}) = {n}"),
                    None => println!("N({e:e}) not reached"),
                }
            }
            if let Some(out) = &args.out {
                emit_table(&table, out)?;
            }
            if let Some(p) = &thresholds {
                emit_thresholds(&table, p)?;
            }
            if let Some(p) = &plot {
                emit_plot(&table, "max kernel-ratio error", p)?;
            }
        }
        Command::Sparsify { source, levels, n_cap, compensated, out } => {
            let doc = load_document(&source)?;
            let rule = coupling_rule(&source, doc.as_ref())?;
            let mut cfg = sparsifier_config(doc.as_ref());
            if let Some(c) = n_cap {
                cfg.n_cap = c;
            }
            if compensated {
                cfg.precision = Precision::Compensated;
            }
            let gen = generate_spec(&rule, levels, &cfg)?;
            println!("{:>3} {:>12} {:>10} {:>16} {:>12}", "l", "N_l", "v_l", "max_kernel_error", "ratio_A_max");
            for cert in &gen.certificates {
                let (pos, v) = match gen.spec.sites().get(cert.level) {
                    Some(s) => (s.position.to_string(), format!("{:.6}", s.coupling)),
                    None => (format!("({})", cert.n_hat), "-".to_string()),
                };
                println!(
                    "{:>3} {:>12} {:>10} {:>16.6e} {:>12.6}",
                    cert.level + 1,
                    pos,
                    v,
                    cert.max_kernel_error,
                    cert.ratio_a_max
                );
            }
            println!("measure: {}", classify_measure(&gen.spec));
            if let Some(out) = &out {
                write_text(out, &ExperimentDocument::from_generated(&gen, levels).to_toml()?)?;
            }
        }
        Command::Classify { source } => {
            let doc = load_document(&source)?;
            let spec = match (&source.rule, doc.as_ref()) {
                (None, Some(d)) if !d.spec.is_adaptive() => d.spec.to_spec()?,
                _ => SparseSpec::new(coupling_rule(&source, doc.as_ref())?, EnvelopeRule::Auto, vec![], false)?,
            };
            println!("{}", classify_measure(&spec));
        }
        Command::Quadrature { source, n, out } => {
            let doc = load_document(&source)?;
            let spec = resolve_spec(&source, doc.as_ref(), 3)?;
            let nodes = quadrature_approx(n, &JacobiParams::full(&spec))?;
            match &out {
                Some(p) => emit_quadrature(&nodes, p)?,
                None => {
                    for q in &nodes {
                        println!("{:.16e} {:.16e}", q.node, q.weight);
                    }
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.downcast_ref::<HarnessError>() {
                if let Some(src) = std::error::Error::source(h) {
                    eprintln!("  caused by: {src}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
