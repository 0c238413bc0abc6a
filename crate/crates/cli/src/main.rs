//! `mallows-lab`: sample Mallows permutations, count patterns and run
//! limit-law experiments from the command line.
//!
//! Exit status: 0 on success, 1 on a runtime failure, 2 on a usage or
//! configuration error, 3 when an experiment fails its thresholds.

mod commands;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mallows_core::Side;

use crate::output::Table;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Run(_) => 1,
            CliError::Config(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "error: {m}"),
        }
    }
}

pub fn config_err(m: impl std::fmt::Display) -> CliError {
    CliError::Config(m.to_string())
}

pub fn run_err(m: impl std::fmt::Display) -> CliError {
    CliError::Run(m.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "mallows-lab", version, about = "Mallows permutation sampling and limit-law experiments")]
#[command(after_help = "Set MALLOWS_LAB_THREADS to cap the number of worker threads. \
Output is identical for any thread count.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw Mallows(n, q) permutations; q > 1 samples at 1/q and reverses.
    #[command(after_help = "CSV columns: replicate,n,q,inv,permutation\n\
The lines format prints one permutation per line, values separated by spaces.")]
    Sample(SampleArgs),
    /// Count occurrences of a pattern in a given or sampled permutation.
    #[command(after_help = "CSV columns: replicate,n,q,pattern,occ\n\
q is empty when --perm is given.")]
    Count(CountArgs),
    /// Split infinite Mallows prefixes into indecomposable blocks.
    #[command(after_help = "CSV columns: replicate,index,kind,start,size,permutation\n\
kind is `block` for a complete block and `remainder` for the trailing partial one; \
start is the first position of the part.")]
    Blocks(BlocksArgs),
    /// Draw coupled Mallows and uniform permutations with their error set.
    #[command(after_help = "CSV columns: replicate,n,q,error_count,errors,tau,u")]
    Coupled(CoupledArgs),
    /// Pattern counts along one path of the continuous-time process.
    #[command(after_help = "CSV columns: t,occ,e_estimate,centered\n\
centered is occ - C(n, d) e_estimate with d the number of blocks of the pattern; \
both are empty when no estimate was made.")]
    Process(ProcessArgs),
    /// Block-moment estimates of the law-of-large-numbers and variance constants.
    #[command(after_help = "CSV columns: name,estimate,se,target,pass")]
    Estimate(EstimateArgs),
    /// Run an experiment described by a TOML config file.
    #[command(after_help = "CSV columns: name,estimate,se,target,pass\n\
Config keys: regime, pattern, n_grid, q_rule {type = fixed, value | type = power, c, x}, \
replicates, seed, block_samples, [thresholds].\n\
Exits with status 3 when any checked statistic fails.")]
    Experiment(ExperimentArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    /// One permutation per line (`sample` only).
    Lines,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: f64,
    /// Inversion-count side used to build the permutation.
    #[arg(long, default_value = "left", value_parser = parse_side)]
    pub side: Side,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CountArgs {
    /// Pattern in one-line notation, e.g. 231 or 2,3,1.
    #[arg(long)]
    pub pattern: String,
    /// Count in this permutation instead of sampling.
    #[arg(long, conflicts_with_all = ["n", "q"])]
    pub perm: Option<String>,
    #[arg(long, required_unless_present = "perm")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "perm")]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BlocksArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CoupledArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ProcessArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub n: usize,
    /// Time grid `a:b:step`, inclusive of both ends, inside [0, 1).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    /// Blocks used for each e estimate; 0 skips the estimates.
    #[arg(long, default_value_t = 100_000)]
    pub block_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub pattern: String,
    #[arg(long)]
    pub q: f64,
    /// Number of sampled blocks.
    #[arg(long, default_value_t = 1_000_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the replicate count in the config file.
    #[arg(long)]
    pub replicates: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_side(s: &str) -> Result<Side, String> {
    s.parse().map_err(|_| format!("expected left or right, got `{s}`"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// Parses `a:b:step` into `a, a + step, ...` up to `b` inclusive.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [a, b, step] = parts[..] else {
        return Err(format!("expected a:b:step, got `{s}`"));
    };
    if !(a.is_finite() && b.is_finite() && step > 0.0 && a <= b) {
        return Err(format!("need finite a <= b and step > 0, got `{s}`"));
    }
    // Tolerance absorbs rounding in (b - a) / step so that `b` is included.
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(format!("grid has {count} points; at most 100000 are allowed"));
    }
    Ok(Grid((0..count).map(|k| a + k as f64 * step).collect()))
}

/// Writes a table in `format` to `out` or standard output.
pub fn emit(table: &Table, format: Format, out: Option<&PathBuf>) -> Result<(), CliError> {
    with_writer(out, |w| match format {
        Format::Csv => table.write_csv(w).map_err(run_err),
        Format::Json => {
            serde_json::to_writer_pretty(&mut *w, &table.to_json()).map_err(run_err)?;
            writeln!(w).map_err(run_err)
        }
        Format::Lines => Err(config_err("the lines format is only available for sample")),
    })
}

pub fn with_writer<F>(out: Option<&PathBuf>, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| run_err(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(run_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            f(&mut w)?;
            w.flush().map_err(run_err)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MALLOWS_LAB_THREADS") else {
        return Ok(());
    };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| config_err(format!("MALLOWS_LAB_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(run_err)
}

/// Outcome of a successful dispatch.
pub enum Status {
    Ok,
    ThresholdsFailed,
}

fn dispatch(cli: Cli) -> Result<Status, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Sample(a) => commands::sample(a),
        Command::Count(a) => commands::count(a),
        Command::Blocks(a) => commands::blocks(a),
        Command::Coupled(a) => commands::coupled(a),
        Command::Process(a) => commands::process(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Experiment(a) => commands::experiment(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::ThresholdsFailed) => {
            eprintln!("experiment failed one or more thresholds");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_include_both_ends() {
        assert_eq!(parse_grid("0:1:0.25").unwrap().0, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap().0.len(), 3);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap().0, vec![0.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
