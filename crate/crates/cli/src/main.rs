//! `scdt`: transforms, distances, interpolation paths and subspace
//! classification of signed 1-D signals from the command line.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scdt_core::ScdtError;

#[derive(Parser, Debug)]
#[command(name = "scdt", version, about = "Signed cumulative distribution transform toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for anything random; echoed in every report.
    #[arg(long, global = true, default_value_t = 0x5CD7)]
    pub seed: u64,
    /// Directory for files written without an explicit path.
    #[arg(long, global = true, env = "SCDT_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Lower end of the uniform reference domain.
    #[arg(long, global = true, default_value_t = 0.0, allow_negative_numbers = true)]
    pub ref_lo: f64,
    /// Upper end of the uniform reference domain.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    pub ref_hi: f64,
    /// Number of reference samples (at least 64).
    #[arg(long, global = true, default_value_t = 1000)]
    pub resolution: usize,
    /// Overlap tolerance of the membership test, relative to the smaller mass.
    #[arg(long, global = true)]
    pub overlap_tol: Option<f64>,
    /// More detail in reports (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Signed transform of a signal CSV, written as JSON.
    Transform {
        input: PathBuf,
        /// Output file; defaults to `<out-dir>/<stem>.scdt.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signal CSV from a transform file.
    Invert {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output samples; defaults to the reference resolution.
        #[arg(long)]
        points: Option<usize>,
        /// Original signal; its relative L1 error is reported.
        #[arg(long)]
        original: Option<PathBuf>,
    },
    /// Distance between two signals with its part-wise breakdown.
    Distance(PairArgs),
    /// Interpolation path between two signals and its segment distances.
    Geodesic {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Nearest-subspace classification.
    Classify {
        #[command(subcommand)]
        action: ClassifyAction,
    },
    /// Midpoint membership test and constant-speed check for a pair.
    Diagnose {
        #[command(flatten)]
        pair: PairArgs,
        /// Path samples used by the speed check.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Option<Vec<f64>>,
    },
    /// Synthetic data: the classification dataset or the worked example pairs.
    Datagen {
        #[command(subcommand)]
        what: DatagenAction,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PairArgs {
    /// First signal CSV.
    #[arg(required_unless_present = "demo")]
    pub a: Option<PathBuf>,
    /// Second signal CSV.
    #[arg(required_unless_present = "demo")]
    pub b: Option<PathBuf>,
    /// Built-in pair instead of files.
    #[arg(long, value_enum, conflicts_with_all = ["a", "b"])]
    pub demo: Option<Demo>,
}

#[derive(Args, Debug, Clone)]
pub struct PathArgs {
    /// Comma-separated α grid, increasing from 0 to 1.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    /// Figure format; `none` writes nothing.
    #[arg(long, value_enum, default_value_t = PlotFormat::Svg)]
    pub plot: PlotFormat,
    /// File name prefix for figures inside the output directory.
    #[arg(long)]
    pub prefix: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Fig2Top,
    Fig2Bottom,
    Fig3Top,
    Fig3Bottom,
    Counterexample,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PlotFormat {
    Svg,
    Csv,
    Both,
    None,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DatasetDemo {
    Experiment1,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Built-in seeded dataset instead of files.
    #[arg(long, value_enum)]
    pub demo: Option<DatasetDemo>,
    /// Keep only these class labels.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<u32>>,
    /// Use at most this many samples per class from each file.
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Shift every UCR series so that its minimum is zero.
    #[arg(long)]
    pub shift_min_zero: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = MethodArg::Ns)]
    pub method: MethodArg,
    /// Neighbours per class for `nls`.
    #[arg(long, default_value_t = scdt_core::classify::DEFAULT_NLS_K)]
    pub k: usize,
    /// Relative singular-value cutoff for the class bases.
    #[arg(long, default_value_t = 1e-8)]
    pub rank_tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Ns,
    Nls,
}

#[derive(Subcommand, Debug)]
pub enum ClassifyAction {
    /// Fit class subspaces and save the model.
    Fit {
        /// Training data: a UCR file or a dataset `index.csv`.
        #[arg(long, required_unless_present = "demo")]
        train: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model_args: ModelArgs,
        /// Model file; defaults to `<out-dir>/model.json`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Label test signals with a saved or freshly fitted model.
    Predict {
        /// Saved model; with `--demo` and no model one is fitted first.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, required_unless_present = "demo")]
        test: Option<PathBuf>,
        /// Training data, to fit instead of loading a model.
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model_args: ModelArgs,
        /// Per-sample predictions as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paths from one test signal to its projection onto every class.
    Paths {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, required_unless_present = "demo")]
        test: Option<PathBuf>,
        #[arg(long)]
        train: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        model_args: ModelArgs,
        /// Index of the test sample.
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[command(flatten)]
        path: PathArgs,
    },
}

#[derive(Subcommand, Debug)]
pub enum DatagenAction {
    /// Seeded train/test split of the three-template affine-warp dataset.
    Experiment1 {
        #[arg(long, default_value_t = 20)]
        train_per_class: usize,
        #[arg(long, default_value_t = 40)]
        test_per_class: usize,
        /// Samples per signal.
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
    /// One of the built-in example pairs as two signal CSVs.
    Pair {
        #[arg(value_enum)]
        which: Demo,
        #[arg(long, default_value_t = 1000)]
        points: usize,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ScdtError>() {
            return if e.is_validation() { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
