mod commands;
mod manifest;
mod range;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use instanton_core::ChannelKind;

/// Instanton search, certification and error-rate estimation for LDPC codes
/// under min-sum decoding.
#[derive(Debug, Parser)]
#[command(name = "instanton", version)]
pub struct Cli {
    /// Worker threads (0 = one per core). Results do not depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a parity-check matrix in alist format.
    GenCode(GenCodeArgs),
    /// Search for instantons and certify each local minimum found.
    Instanton(InstantonArgs),
    /// Recompute and check the certificate of stored records.
    Certify(CertifyArgs),
    /// Monte Carlo frame error rate.
    Mc(McArgs),
    /// Asymptotic slope lines and the semianalytic error-rate estimate.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct GenCodeArgs {
    /// The (155,64,20) circulant code with 31x31 blocks.
    #[arg(long)]
    pub tanner155: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CodeArg {
    /// Parity-check matrix in alist format [default: built-in (155,64,20) code]
    #[arg(long)]
    pub code: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InstantonArgs {
    #[command(flatten)]
    pub code: CodeArg,
    #[arg(long, default_value = "laplacian")]
    pub channel: ChannelKind,
    /// Regularization of the Laplacian density (0 = plain Laplacian).
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 4)]
    pub iters: usize,
    /// Restarts per target bit.
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    /// Target every bit of the code.
    #[arg(long, conflicts_with = "target")]
    pub sweep_targets: bool,
    #[arg(long)]
    pub target: Option<usize>,
    /// Target one bit per orbit of the code's known symmetries.
    #[arg(long, conflicts_with = "target")]
    pub orbit_reduce: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Bits in the support of each sparse start.
    #[arg(long, default_value_t = 12)]
    pub support: usize,
    /// Dense starts over all bits instead of sparse ones.
    #[arg(long)]
    pub dense: bool,
    /// Sparse supports are drawn within this many check hops of the target.
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, default_value_t = 0.3)]
    pub simplex_scale: f64,
    /// Annealing stages as `temperature:moves,...`.
    #[arg(long, default_value = "0.3:10,0:10")]
    pub anneal: String,
    #[arg(long, default_value_t = 10.0)]
    pub max_ray: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub bisect_tol: f64,
    /// Keep at most this many records in the output, shortest first (0 = all).
    #[arg(long, default_value_t = 0)]
    pub max_records: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub code: CodeArg,
    /// A single record or an `instanton` output file.
    #[arg(long)]
    pub record: PathBuf,
    /// Only certify this entry of a records file.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub code: CodeArg,
    #[arg(long, default_value = "laplacian")]
    pub channel: ChannelKind,
    /// SNR values as `start:step:end`, a comma list or a single value.
    #[arg(long)]
    pub snr: String,
    #[arg(long, default_value_t = 4)]
    pub iters: usize,
    #[arg(long, default_value_t = 100)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Stop decoding a frame as soon as its decisions form a codeword.
    #[arg(long)]
    pub early_exit: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Instanton length (squared length for Gaussian noise).
    #[arg(long)]
    pub l_inst: f64,
    /// Effective distance of the maximum-likelihood decoder, same units.
    #[arg(long)]
    pub l_ml: Option<f64>,
    #[arg(long, default_value = "laplacian")]
    pub channel: ChannelKind,
    #[arg(long)]
    pub snr: String,
    /// Code length used by the semianalytic integral.
    #[arg(long, default_value_t = 155)]
    pub n: usize,
    /// Monte Carlo CSV (from `mc`) to fit the slope offsets against.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// Invalid invocation: exit status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let workers = cli.workers;
    match instanton_core::par::with_workers(workers, move || commands::run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
