//! Command-line surface. Long flags only; numeric flags are decimal.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxent_core::priors::PriorKind;

#[derive(Parser, Debug)]
#[command(
    name = "maxent",
    version,
    about = "Maximum-entropy reconstruction of data from dimension-reduced linear features"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reconstruct x from features z = W^T x under per-element priors
    Invert(InvertArgs),
    /// Spectral estimation from autocorrelation features, compared against
    /// the Levinson AR spectrum
    Spectrum(SpectrumArgs),
    /// Reconstruct images from a retained block of DCT coefficients three
    /// ways (pseudo-inverse, positive, doubly-bounded)
    Autoencode(AutoencodeArgs),
    /// Run the embedded numerical property suite
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Gaussian,
    Tg,
    Exp,
    Chisq1,
    Ted,
}

impl PriorArg {
    pub fn kind(self) -> PriorKind {
        match self {
            PriorArg::Gaussian => PriorKind::Gaussian,
            PriorArg::Tg => PriorKind::TruncGauss,
            PriorArg::Exp => PriorKind::Exponential,
            PriorArg::Chisq1 => PriorKind::ChiSq1,
            PriorArg::Ted => PriorKind::Ted,
        }
    }
}

/// Numeric ids accepted by --prior-per-element files:
/// 0 = gaussian, 1 = tg, 2 = exp, 3 = chisq1, 4 = ted.
pub fn kind_from_id(id: u32) -> Option<PriorKind> {
    match id {
        0 => Some(PriorKind::Gaussian),
        1 => Some(PriorKind::TruncGauss),
        2 => Some(PriorKind::Exponential),
        3 => Some(PriorKind::ChiSq1),
        4 => Some(PriorKind::Ted),
        _ => None,
    }
}

#[derive(Args, Debug)]
pub struct InvertArgs {
    /// CSV file holding the N x M feature map W
    #[arg(long)]
    pub w: PathBuf,
    /// CSV file holding the length-M feature vector z
    #[arg(long)]
    pub z: PathBuf,
    /// Prior applied to every element
    #[arg(long, value_enum, conflicts_with = "prior_per_element")]
    pub prior: Option<PriorArg>,
    /// CSV file of N prior ids (0=gaussian 1=tg 2=exp 3=chisq1 4=ted)
    #[arg(long)]
    pub prior_per_element: Option<PathBuf>,
    /// Residual tolerance, relative to max(1, |z|_inf)
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Output CSV for the reconstruction
    #[arg(long)]
    pub out: PathBuf,
    /// Output JSON report
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, default_value_t = 128)]
    pub nfft: usize,
    /// Autocorrelation order P; features are lags 0..=P
    #[arg(long, default_value_t = 6)]
    pub order: usize,
    /// Noise seed (overridden by the MAXENT_SEED environment variable)
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Length-nfft signal CSV; when absent, seeded filtered Gaussian noise
    /// is generated
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output JSON report
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct AutoencodeArgs {
    /// IDX3 image archive
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub count: usize,
    #[arg(long, default_value_t = 28)]
    pub side: usize,
    /// Retained DCT block is keep x keep; must be < side
    #[arg(long, default_value_t = 7)]
    pub keep: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Output JSON report
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    /// Emit machine-readable JSON instead of the pass/fail table
    #[arg(long)]
    pub json: bool,
}
