//! Command-line front end: loss/gradient computation over tensor files,
//! lattice visualization, a randomized self-check against the oracles, and a
//! benchmark harness for comparing the builders.

pub mod bench;
pub mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rnnt_lattice::{Builder, LossKind, Precision, WVariant};
use std::path::PathBuf;

/// Exit codes: 0 ok, 1 numerical failure, 2 usage/format error.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

/// Maps library errors to exit codes: the no-path condition is a numerical
/// failure (1), everything else is a format/usage problem (2).
pub fn from_core(err: rnnt_lattice::Error) -> CliError {
    match err {
        rnnt_lattice::Error::NoPath => CliError::numerical(err.to_string()),
        _ => CliError::usage(err.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rnnt-lattice",
    version,
    about = "Transducer losses over finite-state acceptor lattices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute per-item losses (and optionally gradients) for tensor/target files.
    Loss(LossArgs),
    /// Print a schema or lattice as DOT text.
    Viz(VizArgs),
    /// Randomized self-check: builder equivalence, recursion oracle, finite differences.
    Check(CheckArgs),
    /// Benchmark the builders on synthetic workloads.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum BuilderArg {
    Grid,
    Compose,
    Epsilon,
}

impl std::fmt::Display for BuilderArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(Builder::from(*self).name())
    }
}

impl From<BuilderArg> for Builder {
    fn from(b: BuilderArg) -> Builder {
        match b {
            BuilderArg::Grid => Builder::Grid,
            BuilderArg::Compose => Builder::Compose,
            BuilderArg::Epsilon => Builder::Epsilon,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum LossArg {
    Rnnt,
    WrnntForceFinal,
    WrnntAllowIgnore,
}

impl From<LossArg> for LossKind {
    fn from(l: LossArg) -> LossKind {
        match l {
            LossArg::Rnnt => LossKind::Rnnt,
            LossArg::WrnntForceFinal => LossKind::WForceFinal,
            LossArg::WrnntAllowIgnore => LossKind::WAllowIgnore,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VariantArg {
    ForceFinal,
    AllowIgnore,
}

impl From<VariantArg> for WVariant {
    fn from(v: VariantArg) -> WVariant {
        match v {
            VariantArg::ForceFinal => WVariant::ForceFinal,
            VariantArg::AllowIgnore => WVariant::AllowIgnore,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum PrecisionArg {
    Single,
    Double,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Precision {
        match p {
            PrecisionArg::Single => Precision::Single,
            PrecisionArg::Double => Precision::Double,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
    None,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    /// Tensor file (binary `RNTL` or JSON); repeat for a batch.
    #[arg(long = "tensor", required = true)]
    pub tensors: Vec<PathBuf>,
    /// Targets file (JSON array or whitespace-separated ints); one per tensor.
    #[arg(long = "targets", required = true)]
    pub targets: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = BuilderArg::Grid)]
    pub builder: BuilderArg,
    #[arg(long = "loss", value_enum, default_value_t = LossArg::Rnnt)]
    pub loss: LossArg,
    #[arg(long, value_enum, default_value_t = Reduction::Sum)]
    pub reduction: Reduction,
    /// Write the gradient tensor(s) here (item index is appended for batches).
    #[arg(long = "grad-out")]
    pub grad_out: Option<PathBuf>,
    /// Vocabulary index the input uses for blank; remapped to 0 internally.
    #[arg(long = "blank-index", default_value_t = 0)]
    pub blank_index: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum GraphKind {
    Unit,
    Time,
    WUnit,
    WTime,
    Lattice,
    WLattice,
}

#[derive(Args, Debug)]
pub struct VizArgs {
    #[arg(long, value_enum)]
    pub graph: GraphKind,
    #[arg(long, value_enum, default_value_t = VariantArg::ForceFinal)]
    pub variant: VariantArg,
    /// Frame count T (time schemas and lattices).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Vocabulary size V including blank.
    #[arg(long, default_value_t = 4)]
    pub vocab: usize,
    /// Target unit ids, space-separated, e.g. "1 3" (unit schemas and lattices).
    #[arg(long)]
    pub target: Option<String>,
    /// Comma-separated vocabulary names for arc captions, blank first.
    #[arg(long)]
    pub names: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-t", default_value_t = 4)]
    pub max_t: usize,
    #[arg(long = "max-u", default_value_t = 3)]
    pub max_u: usize,
    #[arg(long = "max-v", default_value_t = 5)]
    pub max_v: usize,
    /// Test hook: corrupt one builder's output to prove the check trips.
    #[arg(long = "inject-fault", hide = true, default_value_t = false)]
    pub inject_fault: bool,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Shape TxU; repeat to mix shapes within a batch.
    #[arg(long = "shape", required = true)]
    pub shapes: Vec<String>,
    #[arg(long, default_value_t = 128)]
    pub vocab: usize,
    #[arg(long, default_value_t = 4)]
    pub batch: usize,
    /// Repetitions per builder; the median is reported (minimum 3).
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Single)]
    pub precision: PrecisionArg,
    /// Builders to time, comma-separated subset of grid,compose,epsilon.
    #[arg(long, value_delimiter = ',', default_values_t = [BuilderArg::Grid, BuilderArg::Compose])]
    pub builders: Vec<BuilderArg>,
    /// Sort batch items by frame count, longest first, before timing.
    #[arg(long, default_value_t = false)]
    pub sorted: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Runs one parsed command, writing the report to `out`.
pub fn run(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Loss(args) => commands::cmd_loss(&args, out),
        Command::Viz(args) => commands::cmd_viz(&args, out),
        Command::Check(args) => commands::cmd_check(&args, out),
        Command::Bench(args) => {
            let config = bench::BenchConfig::from_args(&args)?;
            let report = bench::bench_run(&config)?;
            write!(out, "{report}").map_err(|e| CliError::usage(e.to_string()))
        }
    }
}

/// Thread pool honoring the `RNNT_THREADS` environment variable (0 = all cores).
pub fn thread_pool() -> Result<(rayon::ThreadPool, usize), CliError> {
    let requested = std::env::var("RNNT_THREADS")
        .ok()
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| CliError::usage(format!("RNNT_THREADS must be an integer, got `{s}`")))
        })
        .transpose()?
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(requested)
        .build()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let effective = pool.current_num_threads();
    Ok((pool, effective))
}
