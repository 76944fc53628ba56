//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification mismatch, 2 usage or invalid
//! input, 3 resource limit (enumeration budget, unsound truncation,
//! uncertified tail series).

mod output;
mod source;
mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bernoulli::{EngineError, MomentKind, DEFAULT_BUDGET};
use crate::distributions::DistError;
use crate::genfun::{self, GenfunError, SeriesKind};
use crate::oracle::OracleError;
use crate::tail_moments::TailError;

pub use output::{Format, Table};
use source::Source;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bernsum",
    version,
    about = "Exact moments, pmfs and generating functions of Bernoulli sums and count distributions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moments of orders 0..=kmax
    Moments(MomentsArgs),
    /// Probability mass function
    Pmf(PmfArgs),
    /// Generating-function coefficients
    Gf(GfArgs),
    /// Compare closed forms, the subset-sum engine, tail sums and oracles
    Verify(VerifyArgs),
}

/// A distribution given by flags, a JSON spec, or a pmf file.
#[derive(Debug, Clone, Default, Args)]
pub struct DistArgs {
    /// binomial, poisson-binomial, hypergeometric, cmp-binomial, empty-urns,
    /// matching, poisson, geometric, soliton or benford
    #[arg(long, conflicts_with_all = ["spec", "pmf_file"])]
    pub dist: Option<String>,
    /// Trials, sample size, urns or pairs
    #[arg(long)]
    pub n: Option<usize>,
    /// Success probability, as `a/b` or a decimal
    #[arg(long)]
    pub p: Option<String>,
    /// Comma-separated success probabilities
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<String>>,
    /// Hypergeometric population size
    #[arg(long, visible_alias = "N")]
    pub population: Option<usize>,
    /// Hypergeometric count of marked items
    #[arg(long, visible_alias = "g")]
    pub successes: Option<usize>,
    /// CMP-binomial dispersion
    #[arg(long)]
    pub nu: Option<String>,
    /// Number of balls for empty-urns
    #[arg(long)]
    pub balls: Option<usize>,
    /// Poisson rate
    #[arg(long)]
    pub lambda: Option<String>,
    /// Soliton size
    #[arg(long)]
    pub r: Option<usize>,
    /// Benford base
    #[arg(long)]
    pub base: Option<usize>,
    /// Distribution as JSON, e.g. '{"dist":"binomial","n":10,"p":"1/2"}'
    #[arg(long, conflicts_with = "pmf_file")]
    pub spec: Option<String>,
    /// JSON pmf: [{"x":0,"prob":"1/2"},...] or {"0":"1/2",...}
    #[arg(long)]
    pub pmf_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Render exact values as decimals
    #[arg(long)]
    pub float: bool,
    /// Significant digits for decimal output
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub digits: u8,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeArgs {
    /// Cap on enumerated subsets
    #[arg(long, env = "BERNSUM_BUDGET")]
    pub budget: Option<u64>,
    /// Truncation tolerance for infinite tail series
    #[arg(long, default_value_t = crate::tail_moments::DEFAULT_EPSILON, value_parser = positive_f64)]
    pub epsilon: f64,
}

impl ComputeArgs {
    fn budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Raw,
    Central,
    Factorial,
    Choose,
    ExpectedFactorial,
}

impl From<KindArg> for MomentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Raw => MomentKind::Raw,
            KindArg::Central => MomentKind::Central,
            KindArg::Factorial => MomentKind::Factorial,
            KindArg::Choose => MomentKind::Choose,
            KindArg::ExpectedFactorial => MomentKind::ExpectedFactorial,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Engine for Bernoulli sums, tail sums otherwise
    Auto,
    ClosedForm,
    Engine,
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Via {
    Direct,
    Frechet,
    Pgf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GfArg {
    Mgf,
    Fmgf,
    Pgf,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 4)]
    pub kmax: usize,
    #[arg(long, value_enum, default_value_t = KindArg::Raw)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    pub compute: ComputeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PmfArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value_t = Via::Direct)]
    pub via: Via,
    /// Largest value listed for unbounded supports
    #[arg(long)]
    pub xmax: Option<u64>,
    #[command(flatten)]
    pub compute: ComputeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GfArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long = "gf", value_enum, default_value_t = GfArg::Mgf)]
    pub gf: GfArg,
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,
    #[command(flatten)]
    pub compute: ComputeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, default_value_t = 4)]
    pub kmax: usize,
    /// Add a soliton column computed with the printed coefficients
    #[arg(long)]
    pub as_printed: bool,
    /// Monte Carlo samples; 0 disables the sampling column
    #[arg(long, default_value_t = 0)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub compute: ComputeArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failure with its exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::SubsetExplosion { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TailError> for CliError {
    fn from(e: TailError) -> Self {
        match e {
            TailError::DivergenceSuspected { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GenfunError> for CliError {
    fn from(e: GenfunError) -> Self {
        match e {
            GenfunError::InvalidInput(_) => CliError::Usage(e.to_string()),
            _ => CliError::Budget(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::SubsetExplosion { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> CliResult<i32> {
    let text = match command {
        Command::Moments(a) => cmd_moments(a)?,
        Command::Pmf(a) => cmd_pmf(a)?,
        Command::Gf(a) => cmd_gf(a)?,
        Command::Verify(a) => {
            let (text, ok) = verify::cmd_verify(a)?;
            write_out(out, &text)?;
            return Ok(if ok { EXIT_OK } else { EXIT_MISMATCH });
        }
    };
    write_out(out, &text)?;
    Ok(EXIT_OK)
}

fn write_out(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Usage(format!("cannot write output: {e}")))
}

fn cmd_moments(a: &MomentsArgs) -> CliResult<String> {
    let source = Source::from_args(&a.dist)?;
    let route = source.route(a.method)?;
    let report = source.report(route, a.kind.into(), a.kmax, &a.compute)?;
    let (float, digits) = (a.output.float, a.output.digits as usize);
    Ok(match a.output.format {
        Format::Json => format!("{}\n", report.to_json(float, digits)),
        format => {
            let mut table = Table::new(["k", "value", "method"]);
            for (k, v) in &report.values {
                table.push([
                    k.to_string(),
                    v.render(float, digits),
                    report.provenance.to_string(),
                ]);
            }
            let mut text = table.render(format);
            if let (Format::Table, Some(b)) = (format, report.truncation_bound) {
                text.push_str(&format!(
                    "truncation bound: {}\n",
                    crate::combinat::format_significant(b, 6)
                ));
            }
            text
        }
    })
}

fn cmd_pmf(a: &PmfArgs) -> CliResult<String> {
    let source = Source::from_args(&a.dist)?;
    let (min, max) = source.pmf_range(a.via, a.xmax)?;
    let values = match a.via {
        Via::Direct => (min..=max).map(|x| source.pmf(x)).collect::<Vec<_>>(),
        Via::Frechet => {
            let f = source.factorials(MethodArg::Auto, max as usize, &a.compute)?;
            (min..=max)
                .map(|x| genfun::pmf_from_factorial_moments(&f, x as usize, max as usize))
                .collect::<Result<Vec<_>, _>>()?
        }
        Via::Pgf => {
            let f = source.factorials(MethodArg::Auto, max as usize, &a.compute)?;
            let h = genfun::fmgf_series(&f, max as usize)?;
            let g = genfun::pgf_from_fmgf(&h, true)?;
            g.coeffs[min as usize..].to_vec()
        }
    };
    let via = match a.via {
        Via::Direct => "direct",
        Via::Frechet => "frechet",
        Via::Pgf => "pgf",
    };
    let (float, digits) = (a.output.float, a.output.digits as usize);
    Ok(match a.output.format {
        Format::Json => {
            let rows: Vec<_> = (min..=max)
                .zip(&values)
                .map(|(x, p)| serde_json::json!({ "x": x, "prob": p.render(float, digits) }))
                .collect();
            format!(
                "{}\n",
                serde_json::json!({ "dist": source.name(), "via": via, "pmf": rows })
            )
        }
        format => {
            let mut table = Table::new(["x", "prob", "via"]);
            for (x, p) in (min..=max).zip(&values) {
                table.push([x.to_string(), p.render(float, digits), via.to_string()]);
            }
            table.render(format)
        }
    })
}

fn cmd_gf(a: &GfArgs) -> CliResult<String> {
    let source = Source::from_args(&a.dist)?;
    let series = match a.gf {
        GfArg::Mgf => {
            let route = source.route(a.method)?;
            let report = source.report(route, MomentKind::Raw, a.order, &a.compute)?;
            let raws: Vec<_> = report.values.into_values().collect();
            genfun::mgf_series(&raws, a.order)?
        }
        GfArg::Fmgf => {
            let f = source.factorials(a.method, a.order, &a.compute)?;
            genfun::fmgf_series(&f, a.order)?
        }
        GfArg::Pgf => {
            let max = source.finite_max().ok_or(GenfunError::TruncationUnsound)?;
            let f = source.factorials(a.method, max as usize, &a.compute)?;
            let mut g = genfun::pgf_from_fmgf(&genfun::fmgf_series(&f, max as usize)?, true)?;
            g.coeffs
                .resize(a.order + 1, crate::combinat::Scalar::zero());
            g
        }
    };
    debug_assert_eq!(
        series.kind,
        match a.gf {
            GfArg::Mgf => SeriesKind::Mgf,
            GfArg::Fmgf => SeriesKind::Fmgf,
            GfArg::Pgf => SeriesKind::Pgf,
        }
    );
    let (float, digits) = (a.output.float, a.output.digits as usize);
    Ok(match a.output.format {
        Format::Json => format!("{}\n", series.to_json(float, digits)),
        format => {
            let mut table = Table::new(["k", "coeff", "kind"]);
            for (k, c) in series.coeffs.iter().enumerate() {
                table.push([
                    k.to_string(),
                    c.render(float, digits),
                    series.kind.to_string(),
                ]);
            }
            table.render(format)
        }
    })
}
