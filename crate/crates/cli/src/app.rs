//! Argument parsing and subcommand dispatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use ctgen_core::brute::{count_tables, CountCache, CountKey};
use ctgen_core::driver::{Config, MatrixGen, TailBound};
use ctgen_core::multigraphgen::MultigraphGen;
use ctgen_core::{Error, Marginals, Rational};

use crate::input::{load_degrees, load_marginals};
use crate::output::{self, Format};
use crate::sampling::{draw_many, MultigraphDraw, Table, TableDraw};
use crate::{bench, verify};

/// Exact uniform sampling of contingency tables and loopless multigraphs.
#[derive(Debug, Parser)]
#[command(name = "ctgen", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uniform tables with the given row and column sums.
    Sample(SampleArgs),
    /// Uniform loopless multigraphs with the given degrees.
    Multigraph(MultigraphArgs),
    /// Number of tables with total multiplicity t.
    Count(CountArgs),
    /// Run the acceptance suite and print a JSON report.
    Verify(VerifyArgs),
    /// Time sampling on 2-regular n x n marginals.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tail {
    Paper,
    Counted,
    Auto,
}

impl From<Tail> for TailBound {
    fn from(t: Tail) -> Self {
        match t {
            Tail::Paper => TailBound::Paper,
            Tail::Counted => TailBound::Counted,
            Tail::Auto => TailBound::Auto,
        }
    }
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    /// Row sums, e.g. 2,2,1.
    #[arg(long)]
    pub rows: Option<String>,
    /// Column sums.
    #[arg(long)]
    pub cols: Option<String>,
    /// JSON {"rows": [...], "cols": [...]} or two lines of numbers.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write samples here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Give up on a sample after ⌈M ln M⌉ restarts (or --max-restarts).
    #[arg(long)]
    pub approximate: bool,
    /// Give up on a sample after this many restarts.
    #[arg(long)]
    pub max_restarts: Option<u64>,
    #[arg(long, value_enum, default_value_t = Tail::Paper)]
    pub tail: Tail,
    /// Lower limit on ε, as p/q or a decimal.
    #[arg(long)]
    pub eps_min: Option<String>,
    /// Use this t0 with the closed-form parameters.
    #[arg(long)]
    pub force_t0: Option<u64>,
    /// Worker threads; worker w uses stream (seed, w).
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Print parameters and counters as JSON on stderr.
    #[arg(long)]
    pub stats: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub marginals: MarginalArgs,
    #[command(flatten)]
    pub common: Common,
    /// Emit nonzero cells (row, col, value) instead of dense tables.
    #[arg(long)]
    pub cells: bool,
}

#[derive(Debug, Args)]
pub struct MultigraphArgs {
    /// Degrees, e.g. 2,2,2.
    #[arg(long)]
    pub degrees: Option<String>,
    /// JSON {"degrees": [...]} or one line of numbers.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CountArgs {
    #[command(flatten)]
    pub marginals: MarginalArgs,
    /// Total multiplicity; all values when omitted.
    #[arg(long)]
    pub t: Option<u64>,
    /// Memo capacity for the counter (0 disables it).
    #[arg(long, default_value_t = 0)]
    pub memo: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion ids to run, e.g. 1,2,8.
    #[arg(long)]
    pub only: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = "64,128,256,512")]
    pub sizes: String,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Tail::Auto)]
    pub tail: Tail,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Exit status for an error: 3 invalid input, 4 not bigraphical, 5 not
/// graphical, 1 anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotBigraphical) => 4,
        Some(Error::NotGraphical) => 5,
        Some(Error::UnequalSums { .. } | Error::Empty | Error::OddSum(_)) => 3,
        _ => 1,
    }
}

/// Exit status when `verify` ran but some criterion failed.
pub const VERIFY_FAILED: i32 = 6;

pub fn parse_rational(s: &str) -> Result<Rational> {
    if let Some((whole, frac)) = s.split_once('.') {
        let digits = format!("{whole}{frac}");
        let num = BigUint::from_str(if digits.is_empty() { "0" } else { &digits })
            .with_context(|| format!("not a decimal: {s:?}"))?;
        let den = BigUint::from(10u32).pow(frac.len() as u32);
        return Ok(Rational::new(num.into(), den.into()));
    }
    Rational::from_str(s).map_err(|_| anyhow!("not a fraction: {s:?}"))
}

fn config(c: &Common) -> Result<Config> {
    let mut config = Config {
        max_restarts: c.max_restarts,
        approximate: c.approximate || c.max_restarts.is_some(),
        tail: c.tail.into(),
        force_t0: c.force_t0,
        ..Config::default()
    };
    if let Some(e) = &c.eps_min {
        config.eps_min = parse_rational(e)?;
    }
    Ok(config)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn json_text(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn print_stats(params: &ctgen_core::params::ParameterSet, stats: &ctgen_core::driver::DriverStats) {
    eprintln!("{}", serde_json::to_string(&output::stats_json(params, stats)).expect("serializable"));
}

fn sample(a: &SampleArgs) -> Result<()> {
    let (rows, cols) = load_marginals(a.marginals.rows.as_deref(), a.marginals.cols.as_deref(), a.marginals.input.as_deref())?;
    let c = &a.common;
    let gen = MatrixGen::new(&rows, &cols, config(c)?)?;
    let params = gen.params().clone();
    let proto = TableDraw { gen, cells: a.cells };
    let (samples, stats) = draw_many(&proto, c.samples, c.jobs, c.seed)?;
    for s in samples.iter().flatten() {
        audit_table(&rows, &cols, s)?;
    }
    let text = match c.format {
        Format::Csv => output::tables_csv(&samples),
        Format::Json => json_text(&output::tables_json(&rows, &cols, c.seed, &samples)),
    };
    emit(c.output.as_deref(), &text)?;
    if c.stats {
        print_stats(&params, &stats);
    }
    Ok(())
}

/// Every emitted table must meet its marginals.
fn audit_table(rows: &[u32], cols: &[u32], t: &Table) -> Result<()> {
    let mut r = vec![0u64; rows.len()];
    let mut c = vec![0u64; cols.len()];
    match t {
        Table::Dense(m) => {
            for (i, row) in m.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    r[i] += u64::from(v);
                    c[j] += u64::from(v);
                }
            }
        }
        Table::Cells(cells) => {
            for &(i, j, v) in cells {
                r[i as usize] += u64::from(v);
                c[j as usize] += u64::from(v);
            }
        }
    }
    let want = |v: &[u32]| v.iter().map(|&x| u64::from(x)).collect::<Vec<_>>();
    if r != want(rows) || c != want(cols) {
        bail!(Error::InvariantViolation("sampled table misses its marginals".into()));
    }
    Ok(())
}

fn multigraph(a: &MultigraphArgs) -> Result<()> {
    let degrees = load_degrees(a.degrees.as_deref(), a.input.as_deref())?;
    let c = &a.common;
    let gen = MultigraphGen::new(&degrees, config(c)?)?;
    let params = gen.params().clone();
    let proto = MultigraphDraw(gen);
    let (samples, stats) = draw_many(&proto, c.samples, c.jobs, c.seed)?;
    for s in samples.iter().flatten() {
        let mut d = vec![0u32; degrees.len()];
        for &(u, v, k) in s {
            d[u as usize] += k;
            d[v as usize] += k;
        }
        if d != degrees {
            bail!(Error::InvariantViolation("sampled multigraph misses its degrees".into()));
        }
    }
    let text = match c.format {
        Format::Csv => output::multigraphs_csv(&samples),
        Format::Json => json_text(&output::multigraphs_json(&degrees, c.seed, &samples)),
    };
    emit(c.output.as_deref(), &text)?;
    if c.stats {
        print_stats(&params, &stats);
    }
    Ok(())
}

fn count(a: &CountArgs) -> Result<()> {
    let (rows, cols) = load_marginals(a.marginals.rows.as_deref(), a.marginals.cols.as_deref(), a.marginals.input.as_deref())?;
    Marginals::validate(&rows, &cols)?;
    let mut cache = if a.memo == 0 {
        CountCache::disabled()
    } else {
        CountCache::with_capacity(a.memo)
    };
    let total: u64 = rows.iter().map(|&x| u64::from(x)).sum();
    let ts: Vec<u64> = match a.t {
        Some(t) => vec![t],
        None => (0..=total).collect(),
    };
    let counts = ts
        .into_iter()
        .map(|t| Ok((t, count_tables(&CountKey::new(&rows, &cols, t)?, &mut cache))))
        .collect::<Result<Vec<_>>>()?;
    let text = match (a.format, a.t) {
        (Format::Csv, Some(_)) => format!("{}\n", counts[0].1),
        (Format::Csv, None) => {
            let mut s = String::from("t,count\n");
            for (t, n) in &counts {
                s.push_str(&format!("{t},{n}\n"));
            }
            s
        }
        (Format::Json, _) => json_text(&output::counts_json(&rows, &cols, &counts)),
    };
    emit(a.output.as_deref(), &text)
}

fn run_verify(a: &VerifyArgs) -> Result<bool> {
    let only = a
        .only
        .as_ref()
        .map(|s| s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect());
    let opts = verify::Options {
        exe: None,
        only,
        seed: a.seed,
    };
    let outcomes = verify::run(&opts, |o| eprintln!("{}", o.line()));
    emit(a.output.as_deref(), &json_text(&verify::report_json(&outcomes)))?;
    Ok(outcomes.iter().all(|o| o.passed))
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let sizes = crate::input::parse_list(&a.sizes)?;
    let sizes: Vec<usize> = sizes.into_iter().map(|n| n as usize).collect();
    let rows = bench::scaling(&sizes, a.samples, a.seed, a.tail.into())?;
    emit(a.output.as_deref(), &json_text(&bench::report(&rows)))
}

/// Runs a parsed command line; returns the process exit status.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Sample(a) => sample(a).map(|_| 0),
        Command::Multigraph(a) => multigraph(a).map(|_| 0),
        Command::Count(a) => count(a).map(|_| 0),
        Command::Verify(a) => run_verify(a).map(|ok| if ok { 0 } else { VERIFY_FAILED }),
        Command::Bench(a) => run_bench(a).map(|_| 0),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let kind = e.downcast_ref::<Error>().map(error_name).unwrap_or("Error");
            eprintln!("error {kind}: {e:#}");
            exit_code(&e)
        }
    }
}

/// Stable name of a library error, printed before its message.
pub fn error_name(e: &Error) -> &'static str {
    match e {
        Error::UnequalSums { .. } => "UnequalSums",
        Error::Empty => "Empty",
        Error::OddSum(_) => "OddSum",
        Error::NotBigraphical => "NotBigraphical",
        Error::NotGraphical => "NotGraphical",
        Error::ProbabilityOutOfRange(_) => "ProbabilityOutOfRange",
        Error::InvalidDistribution(_) => "InvalidDistribution",
        Error::Infeasible => "Infeasible",
        Error::InvariantViolation(_) => "InvariantViolation",
        Error::ApproximateCutoff(_) => "ApproximateCutoff",
        Error::TooLarge(_) => "TooLarge",
        Error::InsufficientSamples(_) => "InsufficientSamples",
        Error::FixtureInvalid(_) => "FixtureInvalid",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("1/100").unwrap(), Rational::new(1.into(), 100.into()));
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1.into(), 4.into()));
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&anyhow::Error::new(Error::NotBigraphical)), 4);
        assert_eq!(exit_code(&anyhow::Error::new(Error::NotGraphical)), 5);
        assert_eq!(exit_code(&anyhow::Error::new(Error::UnequalSums { rows: 3, cols: 2 })), 3);
        assert_eq!(exit_code(&anyhow!("other")), 1);
    }
}
