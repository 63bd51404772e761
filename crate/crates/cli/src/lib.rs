//! Command-line frontend: load a portfolio config, run an engine, print a
//! table.

pub mod config;
pub mod reproduce;
pub mod table;

use clap::{Parser, Subcommand};
use config::PortfolioConfig;
use fgm_core::aggregate_me::aggregate;
use fgm_core::allocation::Allocator;
use fgm_core::discrete_agg::{aggregate_discretized, tvar_sandwich, DiscretizationSpec, Method};
use fgm_core::marginals::Discrete;
use fgm_core::mc_oracle::sample_portfolio;
use fgm_core::moments::{aggregate_moment, MomentOptions, Representation};
use fgm_core::portfolio::{Dependence, Portfolio};
use fgm_core::{FgmError, MixedErlang};
use reproduce::TableId;
use std::path::PathBuf;
use table::{sig6, Format, Table};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Engine(#[from] FgmError),
    #[error("{table}: {mismatches} of {total} entries outside tolerance")]
    Mismatch { table: &'static str, mismatches: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::Mismatch { .. } => EXIT_MISMATCH,
            _ => EXIT_VALIDATION,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fgm", version, about = "Risk aggregation under FGM copulas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Portfolio config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated confidence levels.
    #[arg(long, global = true, value_delimiter = ',', default_value = "0.9,0.99,0.999")]
    pub kappa: Vec<f64>,
    /// Lattice span; switches to the discretization engine.
    #[arg(long, global = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, default_value = "lower")]
    pub method: String,
    /// Single moment order (default: 1 to 4).
    #[arg(long, global = true)]
    pub order: Option<u32>,
    /// Total loss to share.
    #[arg(long, global = true)]
    pub s: Option<f64>,
    /// Overrides `options.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Overrides `options.trunc_eps`.
    #[arg(long, global = true)]
    pub trunc_eps: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dependence summary and admissibility.
    Info,
    /// Mixed Erlang weights of S, or its lattice pmf when --h is given.
    Aggregate,
    /// Raw moments of S in every representation.
    Moments,
    /// VaR and TVaR of S.
    Risk,
    /// TVaR bounds from the upper and lower discretizations.
    Bounds,
    /// TVaR-based allocation.
    Allocate,
    /// Conditional mean risk sharing at --s.
    Share,
    /// Monte Carlo draws of the risks and their sum.
    Sample {
        #[arg(long, default_value_t = 10_000)]
        n: usize,
    },
    /// Regenerate a reference table and diff it.
    Reproduce {
        #[arg(value_enum)]
        table: TableId,
        /// Restrict rows, e.g. `d=1,2,10,100`.
        #[arg(long)]
        subset: Option<String>,
        /// Reference CSV overriding the bundled one.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

struct Loaded {
    cfg: PortfolioConfig,
    portfolio: Portfolio,
}

fn load(cli: &Cli) -> Result<Loaded, CliError> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let mut cfg = PortfolioConfig::load(path)?;
    if let Some(eps) = cli.trunc_eps {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(CliError::Usage(format!("--trunc-eps must lie in (0, 1), got {eps}")));
        }
        cfg.options.trunc_eps = eps;
    }
    if let Some(seed) = cli.seed {
        cfg.options.seed = seed;
    }
    let portfolio = cfg.portfolio()?;
    Ok(Loaded { cfg, portfolio })
}

fn lattice_spec(cli: &Cli) -> Result<Option<DiscretizationSpec>, CliError> {
    match cli.h {
        None => Ok(None),
        Some(h) => Ok(Some(DiscretizationSpec { method: cli.method.parse::<Method>()?, span: h })),
    }
}

fn needs_lattice() -> CliError {
    CliError::Engine(FgmError::Unsupported(
        "the exact engine needs mixed Erlang (or exponential) marginals; pass --h to discretize".into(),
    ))
}

/// Exact mixed Erlang law of S, or the lattice pmf.
enum Law {
    Exact(MixedErlang),
    Lattice(Discrete),
}

fn aggregate_law(cli: &Cli, l: &Loaded) -> Result<Law, CliError> {
    match lattice_spec(cli)? {
        Some(spec) => Ok(Law::Lattice(aggregate_discretized(&l.portfolio, spec, l.cfg.options.truncation())?)),
        None => {
            if l.portfolio.marginals().iter().any(|m| m.as_mixed_erlang().is_none()) {
                return Err(needs_lattice());
            }
            Ok(Law::Exact(aggregate(&l.portfolio, l.cfg.options.aggregate_options())?.law().clone()))
        }
    }
}

fn allocator(l: &Loaded) -> Result<Allocator, CliError> {
    if l.portfolio.marginals().iter().any(|m| m.as_mixed_erlang().is_none()) {
        return Err(CliError::Engine(FgmError::Unsupported(
            "allocation needs mixed Erlang (or exponential) marginals".into(),
        )));
    }
    Ok(Allocator::new(&l.portfolio, l.cfg.options.aggregate_options())?)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Reproduce { table, subset, reference } => {
            let opts = config::OptionsConfig::default();
            let mut opts = opts.aggregate_options();
            if let Some(eps) = cli.trunc_eps {
                opts.trunc.eps = eps;
            }
            let r = reproduce::reproduce(*table, subset.as_deref(), reference.as_deref(), opts)?;
            r.table.emit(cli.format, out)?;
            eprintln!(
                "{}: {} of {} entries within +-{} (max |diff| {})",
                table.name(),
                r.total - r.mismatches,
                r.total,
                table.tolerance(),
                sig6(r.max_diff)
            );
            if r.mismatches > 0 {
                return Err(CliError::Mismatch { table: table.name(), mismatches: r.mismatches, total: r.total });
            }
            Ok(())
        }
        Command::Info => info(&load(cli)?).emit(cli.format, out),
        Command::Aggregate => {
            let l = load(cli)?;
            let t = match aggregate_law(cli, &l)? {
                Law::Exact(me) => {
                    let mut t = Table::new(["rate", "shape", "weight"]);
                    for (j, w) in me.weights().iter().enumerate() {
                        t.push(vec![sig6(me.rate()), (j + 1).to_string(), sig6(*w)]);
                    }
                    t
                }
                Law::Lattice(pmf) => {
                    let mut t = Table::new(["x", "mass"]);
                    for (j, p) in pmf.masses().iter().enumerate() {
                        t.push(vec![sig6(j as f64 * pmf.span()), sig6(*p)]);
                    }
                    t
                }
            };
            t.emit(cli.format, out)
        }
        Command::Moments => {
            let l = load(cli)?;
            let orders: Vec<u32> = match cli.order {
                Some(0) => return Err(CliError::Usage("--order must be >= 1".into())),
                Some(k) => vec![k],
                None => (1..=4).collect(),
            };
            let opts = MomentOptions { trunc: l.cfg.options.truncation(), ..MomentOptions::default() };
            let mut t = Table::new(["order", "stochastic_min", "stochastic_max", "natural_a1", "natural_a2"]);
            for k in orders {
                let mut row = vec![k.to_string()];
                for r in Representation::ALL {
                    row.push(sig6(aggregate_moment(&l.portfolio, k, r, opts)?));
                }
                t.push(row);
            }
            t.emit(cli.format, out)
        }
        Command::Risk => {
            let l = load(cli)?;
            let law = aggregate_law(cli, &l)?;
            let mut t = Table::new(["kappa", "var", "tvar"]);
            for &k in &cli.kappa {
                let (v, tv) = match &law {
                    Law::Exact(me) => {
                        fgm_core::risk::check_level(k)?;
                        let v = me.quantile_with_tol(k, l.cfg.options.bisection_tol)?;
                        (v, me.tail_expectation(v) / (1.0 - k))
                    }
                    Law::Lattice(pmf) => (pmf.var(k)?, pmf.tvar(k)?),
                };
                t.push(vec![sig6(k), sig6(v), sig6(tv)]);
            }
            t.emit(cli.format, out)
        }
        Command::Bounds => {
            let l = load(cli)?;
            let h = cli.h.ok_or_else(|| CliError::Usage("bounds needs --h".into()))?;
            let mut t = Table::new(["kappa", "h", "tvar_upper_method", "tvar_lower_method"]);
            for &k in &cli.kappa {
                let (lo, hi) = tvar_sandwich(&l.portfolio, h, k, l.cfg.options.truncation())?;
                t.push(vec![sig6(k), sig6(h), sig6(lo), sig6(hi)]);
            }
            t.emit(cli.format, out)
        }
        Command::Allocate => {
            let l = load(cli)?;
            let a = allocator(&l)?;
            let mut t = Table::new(["kappa", "risk", "contribution"]);
            for &k in &cli.kappa {
                let r = a.tvar_allocation(k)?;
                for (m, c) in r.contributions.iter().enumerate() {
                    t.push(vec![sig6(k), (m + 1).to_string(), sig6(*c)]);
                }
                t.push(vec![sig6(k), "total".into(), sig6(r.reference)]);
            }
            t.emit(cli.format, out)
        }
        Command::Share => {
            let l = load(cli)?;
            let s = cli.s.ok_or_else(|| CliError::Usage("share needs --s".into()))?;
            let r = allocator(&l)?.cmrs(s)?;
            let mut t = Table::new(["s", "risk", "contribution"]);
            for (m, c) in r.contributions.iter().enumerate() {
                t.push(vec![sig6(s), (m + 1).to_string(), sig6(*c)]);
            }
            t.push(vec![sig6(s), "total".into(), sig6(r.total())]);
            t.emit(cli.format, out)
        }
        Command::Sample { n } => {
            let l = load(cli)?;
            let batch = sample_portfolio(&l.portfolio, *n, l.cfg.options.seed)?;
            let d = batch.dim();
            let mut t = Table::new((1..=d).map(|k| format!("x{k}")).chain(["s".to_string()]));
            for row in batch.rows() {
                let mut cells: Vec<String> = row.iter().map(|x| sig6(*x)).collect();
                cells.push(sig6(row.iter().sum()));
                t.push(cells);
            }
            t.emit(cli.format, out)
        }
    }
}

/// Largest dimension for which every nonzero θ is listed.
const INFO_THETA_DIM: usize = 12;

fn info(l: &Loaded) -> Table {
    let p = &l.portfolio;
    let mut t = Table::new(["item", "value"]);
    t.push(vec!["dimension".into(), p.dim().to_string()]);
    for (k, m) in p.marginals().iter().enumerate() {
        let mean = m.mean().map(sig6).unwrap_or_else(|_| "inf".into());
        t.push(vec![format!("risk {}", k + 1), format!("{} (mean {mean})", m.label())]);
    }
    let structure = match p.dependence() {
        Dependence::Scheme(s) => s.label(),
        Dependence::Copula(_) => "natural parameters".into(),
    };
    t.push(vec!["dependence".into(), structure]);
    // construction already rejected inadmissible parameters
    t.push(vec!["admissible".into(), "yes".into()]);
    if p.dim() <= INFO_THETA_DIM {
        if let Ok(c) = p.copula(None) {
            for (a, th) in c.thetas().filter(|(_, th)| th.abs() > 1e-14) {
                let name: Vec<String> = a.iter().map(|k| (k + 1).to_string()).collect();
                t.push(vec![format!("theta_{{{}}}", name.join(",")), sig6(th)]);
            }
        }
    } else {
        t.push(vec!["theta".into(), format!("not listed for d > {INFO_THETA_DIM}")]);
    }
    t
}

