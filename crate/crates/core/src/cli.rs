//! Command-line front end: `fit`, `sample`, `enumerate`, `verify` and `gen`.
//!
//! Input files hold one observation per line, character `i` being `1` when
//! spin `i` is `-1`.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::basis::{self, Basis, HeuristicOptions};
use crate::dataset::{Dataset, Relabel, DEFAULT_TABLE_CAP};
use crate::enumeration;
use crate::error::Error;
use crate::evidence::mcm_log_evidence;
use crate::gf2::{Operator, State};
use crate::report::{self, BasisEntry, FitReport, HeuristicSummary, Provenance, ScaledEvidence};
use crate::sampling::{generate_synthetic, FittedMcm};
use crate::search::{self, SearchOptions};

/// Exit status for malformed or missing input.
pub const EXIT_INPUT: i32 = 2;
/// Exit status when a size cap refuses a computation.
pub const EXIT_CAP: i32 = 3;
/// Exit status when `verify` finds a different evidence.
pub const EXIT_MISMATCH: i32 = 4;

/// Tolerance used by `verify`.
pub const VERIFY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_cap_violation() => EXIT_CAP,
            CliError::Mismatch(_) => EXIT_MISMATCH,
            _ => EXIT_INPUT,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BasisMode {
    /// Best independent model over all operators.
    Exhaustive,
    /// Iterated search over products of at most `k` basis operators.
    Heuristic,
    /// The original spins.
    Identity,
    /// Operators read from `--basis-file`.
    File,
}

/// Resolved settings of a fit, stored verbatim in its report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Args)]
pub struct RunConfig {
    /// Number of spins per observation.
    #[arg(short, long)]
    pub n: usize,
    /// Data file, one observation per line ('1' means spin -1).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Relabeling file: line i is "<source variable> [flip]".
    #[arg(long)]
    pub relabel: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: SearchMode,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub basis: BasisMode,
    /// Basis file for `--basis file`: one operator bit string per line.
    #[arg(long)]
    pub basis_file: Option<PathBuf>,
    /// Order of the heuristic basis search.
    #[arg(short, long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 50)]
    pub max_rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest basis size for the exhaustive MCM scan.
    #[arg(long, env = "MCM_MAX_EXHAUSTIVE", default_value_t = search::DEFAULT_PARTITION_CAP)]
    pub max_exhaustive: usize,
    /// Largest n for the exhaustive best-basis search.
    #[arg(long, env = "MCM_MAX_BASIS_EXHAUSTIVE", default_value_t = basis::DEFAULT_EXHAUSTIVE_CAP)]
    pub max_basis_exhaustive: usize,
    /// Largest block rank whose table is materialized.
    #[arg(long, env = "MCM_TABLE_CAP", default_value_t = DEFAULT_TABLE_CAP)]
    pub table_cap: usize,
    /// Report path; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the factor graph in DOT format here.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Extra log base for the reported evidence (natural log is always reported).
    #[arg(long)]
    pub log_base: Option<f64>,
    /// Worker threads; 0 uses all available cores.
    #[arg(long, env = "MCM_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

/// Report type written by `fit`.
pub type Report = FitReport<RunConfig>;

#[derive(Debug, Parser)]
#[command(
    name = "mcm",
    version,
    about = "Minimally complex spin models for binary data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the best basis and MCM for a dataset and write a report.
    Fit(RunConfig),
    /// Draw observations from the model of a fit report.
    Sample(SampleArgs),
    /// Print exact model-family counts.
    Enumerate(EnumerateArgs),
    /// Recompute the evidence stored in a fit report.
    Verify(VerifyArgs),
    /// Generate data from a mixture of fixed states.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Fit report produced by `fit`.
    #[arg(short, long)]
    pub report: PathBuf,
    #[arg(short, long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    #[arg(long, default_value_t = 12)]
    pub to: usize,
    /// One JSON object per line instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(short, long)]
    pub report: PathBuf,
    #[arg(long, env = "MCM_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(short, long)]
    pub n: usize,
    /// Comma-separated states as bit strings.
    #[arg(long, value_delimiter = ',', required = true)]
    pub states: Vec<String>,
    /// Comma-separated probabilities, one per state.
    #[arg(long, value_delimiter = ',', required = true)]
    pub probs: Vec<f64>,
    #[arg(short, long)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Runs a parsed command, writing results to `out` or to the requested files.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Fit(cfg) => {
            let workers = cfg.workers;
            let report = with_workers(workers, || fit(&cfg))?;
            if let Some(g) = &cfg.graph {
                std::fs::write(g, &report.factor_graph).map_err(Error::from)?;
            }
            match &cfg.output {
                Some(p) => {
                    report.save(p)?;
                    writeln!(out, "{}", summary(&report)).map_err(Error::from)?;
                }
                None => out
                    .write_all(report.to_json()?.as_bytes())
                    .map_err(Error::from)?,
            }
            Ok(())
        }
        Command::Sample(a) => {
            let report = Report::load(&a.report)?;
            let rows = sample(&report, a.count, a.seed)?;
            let header = vec![
                format!("sampled from {}", a.report.display()),
                format!("seed {} count {}", a.seed, a.count),
            ];
            write_rows(
                a.output.as_deref(),
                report.structure.n(),
                &rows,
                &header,
                out,
            )
        }
        Command::Enumerate(a) => enumerate(&a, out),
        Command::Verify(a) => {
            let report = Report::load(&a.report)?;
            let (stored, fresh) = with_workers(a.workers, || verify(&report))?;
            writeln!(
                out,
                "stored {} recomputed {}",
                report::fmt_sig(stored),
                report::fmt_sig(fresh)
            )
            .map_err(Error::from)?;
            Ok(())
        }
        Command::Gen(a) => {
            let states = a
                .states
                .iter()
                .map(|s| parse_state(s, a.n))
                .collect::<CliResult<Vec<State>>>()?;
            let d = generate_synthetic(a.n, &states, &a.probs, a.count, a.seed)?;
            let header = vec![format!(
                "seed {} states {} probs {:?}",
                a.seed,
                a.states.join(","),
                a.probs
            )];
            write_rows(a.output.as_deref(), a.n, d.rows(), &header, out)
        }
    }
}

fn write_rows(
    path: Option<&Path>,
    n: usize,
    rows: &[State],
    header: &[String],
    out: &mut dyn Write,
) -> CliResult<()> {
    match path {
        Some(p) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(p).map_err(Error::from)?);
            Dataset::write_rows(&mut f, n, rows, header)?;
            f.flush().map_err(Error::from)?;
        }
        None => Dataset::write_rows(&mut &mut *out, n, rows, header)?,
    }
    Ok(())
}

fn parse_state(s: &str, n: usize) -> CliResult<State> {
    let op = Operator::parse_bits(s.trim())?;
    if op.n() != n {
        return Err(CliError::Usage(format!(
            "state {s:?} has {} spins, expected {n}",
            op.n()
        )));
    }
    Ok(op.mask())
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(f)
}

/// Loads the configured dataset, applying the relabeling if any.
pub fn load_data(cfg: &RunConfig) -> CliResult<Dataset> {
    let relabel = cfg.relabel.as_deref().map(Relabel::load).transpose()?;
    Ok(Dataset::load_with(&cfg.input, cfg.n, relabel.as_ref())?)
}

/// The whole pipeline: load, choose a basis, choose an MCM, fit and report.
pub fn fit(cfg: &RunConfig) -> CliResult<Report> {
    if cfg.mode == SearchMode::Exhaustive && cfg.n > cfg.max_exhaustive {
        return Err(Error::CapExceeded {
            what: "basis size for exhaustive MCM search",
            value: cfg.n,
            cap: cfg.max_exhaustive,
        }
        .into());
    }
    if cfg.basis == BasisMode::Exhaustive && cfg.n > cfg.max_basis_exhaustive {
        return Err(Error::CapExceeded {
            what: "variables for exhaustive basis search",
            value: cfg.n,
            cap: cfg.max_basis_exhaustive,
        }
        .into());
    }
    if let Some(b) = cfg.log_base {
        if !(b > 0.0 && b != 1.0 && b.is_finite()) {
            return Err(CliError::Usage(format!("invalid log base {b}")));
        }
    }
    let d = load_data(cfg)?;
    let mut heuristic = None;
    let basis = match cfg.basis {
        BasisMode::Exhaustive => basis::best_im_exhaustive_capped(&d, cfg.max_basis_exhaustive)?,
        BasisMode::Identity => Basis::identity(&d)?,
        BasisMode::Heuristic => {
            let o = basis::best_im_heuristic(&d, HeuristicOptions::new(cfg.k, cfg.max_rounds))?;
            heuristic = Some(HeuristicSummary {
                rounds: o.rounds,
                converged: o.converged,
                log_likelihoods: o.log_likelihoods,
            });
            o.basis
        }
        BasisMode::File => {
            let path = cfg
                .basis_file
                .as_deref()
                .ok_or_else(|| CliError::Usage("--basis file needs --basis-file".into()))?;
            Basis::new(&d, Basis::load_operators(path, cfg.n)?)?
        }
    };
    let opts = SearchOptions {
        max_exhaustive: cfg.max_exhaustive,
        table_cap: cfg.table_cap,
    };
    let (structure, evidence, greedy_trace) = match cfg.mode {
        SearchMode::Exhaustive => {
            let (m, ev) = search::best_mcm_exhaustive_with(&d, &basis, opts)?;
            (m, ev, None)
        }
        SearchMode::Greedy => {
            let trace = search::best_mcm_greedy_with(&d, &basis, opts)?;
            let m = trace.best().structure.clone();
            let ev = mcm_log_evidence(&d, &basis, &m)?;
            (m, ev, Some(trace))
        }
    };
    let fitted = FittedMcm::fit_capped(&d, &basis, &structure, cfg.table_cap)?;
    let scaled = cfg.log_base.map(|b| ScaledEvidence {
        base: b,
        total_log_evidence: evidence.total_log_evidence / b.ln(),
        max_log_likelihood: evidence.max_log_likelihood / b.ln(),
    });
    Ok(Report {
        format: report::REPORT_FORMAT.to_string(),
        provenance: Provenance {
            input: cfg.input.display().to_string(),
            sha256: report::sha256_file(&cfg.input)?,
            n_obs: d.len() as u64,
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        basis: basis
            .operators()
            .iter()
            .zip(basis.biases())
            .map(|(op, &m)| BasisEntry::new(op, m))
            .collect(),
        icc_count: structure.modeled_blocks(),
        factor_graph: report::factor_graph_dot(cfg.n, basis.operators(), &structure),
        structure,
        evidence,
        scaled,
        q_tables: fitted.q_tables().to_vec(),
        greedy_trace,
        heuristic,
        config: cfg.clone(),
    })
}

/// Reloads the data behind a report, checking that it did not change.
fn report_data(report: &Report) -> CliResult<(Dataset, Basis)> {
    let d = load_data(&report.config)?;
    let sum = report::sha256_file(&report.config.input)?;
    if sum != report.provenance.sha256 {
        return Err(CliError::Usage(format!(
            "{} changed since the report was written",
            report.config.input.display()
        )));
    }
    let basis = Basis::new(&d, report.operators()?)?;
    Ok((d, basis))
}

/// Samples `count` observations from the model stored in `report`.
pub fn sample(report: &Report, count: usize, seed: u64) -> CliResult<Vec<State>> {
    let (d, basis) = report_data(report)?;
    let fitted = FittedMcm::fit_capped(&d, &basis, &report.structure, report.config.table_cap)?;
    Ok(fitted.sample(seed, count))
}

/// Recomputes the total log-evidence of `report`; returns (stored, recomputed).
pub fn verify(report: &Report) -> CliResult<(f64, f64)> {
    let (d, basis) = report_data(report)?;
    let fresh = mcm_log_evidence(&d, &basis, &report.structure)?;
    let stored = report.evidence.total_log_evidence;
    if (stored - fresh.total_log_evidence).abs() > VERIFY_TOLERANCE || !stored.is_finite() {
        return Err(CliError::Mismatch(format!(
            "stored {} recomputed {}",
            report::fmt_sig(stored),
            report::fmt_sig(fresh.total_log_evidence)
        )));
    }
    if let Some(trace) = &report.greedy_trace {
        for step in &trace.steps {
            let ev = mcm_log_evidence(&d, &basis, &step.structure)?.total_log_evidence;
            if (ev - step.total_log_evidence).abs() > VERIFY_TOLERANCE {
                return Err(CliError::Mismatch(format!(
                    "greedy step stored {} recomputed {}",
                    report::fmt_sig(step.total_log_evidence),
                    report::fmt_sig(ev)
                )));
            }
        }
    }
    Ok((stored, fresh.total_log_evidence))
}

const ENUMERATE_MAX: usize = 50;

fn enumerate(a: &EnumerateArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.to > ENUMERATE_MAX || a.from > a.to {
        return Err(CliError::Usage(format!(
            "need from <= to <= {ENUMERATE_MAX}, got {}..={}",
            a.from, a.to
        )));
    }
    let io = |e: std::io::Error| CliError::Lib(e.into());
    if !a.json {
        writeln!(out, "n\tIM\tICC\tMCM\tMCM*\tBell\tpairwise").map_err(io)?;
    }
    for n in a.from..=a.to {
        let row = enumeration::count_row(n);
        if a.json {
            let v = serde_json::json!({
                "n": n,
                "im": row.im.to_string(),
                "icc": row.icc.to_string(),
                "mcm": row.mcm.to_string(),
                "mcm_star": row.mcm_star.to_string(),
                "bell": row.bell.to_string(),
                "pairwise": row.pairwise.to_string(),
            });
            writeln!(out, "{v}").map_err(io)?;
        } else {
            writeln!(
                out,
                "{n}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.im, row.icc, row.mcm, row.mcm_star, row.bell, row.pairwise
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

/// Summary line printed after a fit when the report goes to a file.
pub fn summary(report: &Report) -> String {
    format!(
        "log-evidence {} with {} ICCs over {} basis operators",
        report::fmt_sig(report.evidence.total_log_evidence),
        report.icc_count,
        report.basis.len()
    )
}
