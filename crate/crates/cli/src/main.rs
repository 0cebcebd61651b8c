//! `fqdist`: command-line frontend for the fqdist library.
//!
//! Exit codes: 0 success, 1 operational error, 2 assertion failure,
//! 64 usage error.

mod commands;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "fqdist", version, about = "Distance, dot-product and sum-product sets over F_q^d")]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Show the canonical construction of F_{p^k}.
    FieldInfo(FieldArgs),
    /// Generate a point set and write it as .fqset.
    Gen {
        #[command(flatten)]
        set: GenArgs,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Print the distance or dot-product spectrum ν(t) of F × E as CSV.
    Spectrum {
        #[command(flatten)]
        set: SetArgs,
        /// Second set F; defaults to E.
        #[arg(long = "with")]
        with: Option<std::path::PathBuf>,
        #[arg(long, default_value = "distance")]
        metric: fqdist::Metric,
        #[arg(long, default_value = "direct")]
        engine: fqdist::Engine,
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Print Δ(E), or Δ^j_z(E) / the pinned dot set with --pin.
    Delta {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, default_value = "direct")]
        engine: fqdist::Engine,
        /// Pin as j,z (1-based coordinate j).
        #[arg(long)]
        pin: Option<fqdist::PinSpec>,
        #[arg(long, default_value = "distance")]
        metric: fqdist::Metric,
    },
    /// List each coordinate's projection size and valid pin values.
    Pins {
        #[command(flatten)]
        set: SetArgs,
    },
    /// Run one check on a set, or the full verification battery.
    Verify(VerifyArgs),
    /// Run an experiment sweep from a TOML config.
    Sweep {
        #[arg(long)]
        config: std::path::PathBuf,
        /// CSV output; overrides the config's `output`.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Also write rows as JSON lines.
        #[arg(long)]
        jsonl: Option<std::path::PathBuf>,
    },
    /// Hill-climb over product sets for a small distance set.
    Search {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Target |E|; must split into d factor sizes ≤ q.
        #[arg(long)]
        target: u64,
        #[arg(long, default_value_t = 2000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the best set as .fqset.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Write every move as JSON lines.
        #[arg(long)]
        trail: Option<std::path::PathBuf>,
    },
    /// Convert between .fqset and JSON lines (chosen by the input extension).
    FmtConvert {
        #[arg(long = "in")]
        input: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

/// A field given as `--q` or as `--p` with `--k`.
#[derive(Debug, Clone, Args)]
pub struct FieldArgs {
    #[arg(long, conflicts_with = "p")]
    pub q: Option<u64>,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Random,
    Product,
    Line,
    Sphere,
    Full,
    Grid,
}

/// Parameters of a generated set; which ones apply depends on the kind.
#[derive(Debug, Clone, Args)]
pub struct GenParams {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Number of points (random).
    #[arg(long)]
    pub n: Option<u64>,
    /// Factor sizes, comma separated (product).
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    /// Norm value t (sphere).
    #[arg(long)]
    pub t: Option<u32>,
    /// Side length (grid).
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub kind: Kind,
    #[command(flatten)]
    pub params: GenParams,
}

/// A set read from `--in` or generated in place with `--gen KIND`.
#[derive(Debug, Clone, Args)]
pub struct SetArgs {
    #[arg(long = "in", conflicts_with = "gen", required_unless_present = "gen")]
    pub input: Option<std::path::PathBuf>,
    #[arg(long = "gen")]
    pub gen: Option<Kind>,
    #[command(flatten)]
    pub params: GenParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CheckKind {
    CsChain,
    Identity,
    Bound,
    Distpinned,
    Dot,
    Corollary,
    IrThreshold,
    Sumproduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteKind {
    Paper,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    pub check: Option<CheckKind>,
    #[arg(long)]
    pub suite: Option<SuiteKind>,
    #[arg(long = "in")]
    pub input: Option<std::path::PathBuf>,
    #[arg(long)]
    pub pin: Option<fqdist::PinSpec>,
    #[arg(long, default_value = "distance")]
    pub metric: fqdist::Metric,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the suite CSVs.
    #[arg(long, default_value = "suite-results")]
    pub out: std::path::PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
