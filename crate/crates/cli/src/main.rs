//! `dga`: dissolved gas analysis from the command line.
//!
//! Tabular output is TSV on stdout (or `--out`); reports can be JSON.
//! Exit codes: 0 success, 1 validation error, 2 I/O error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dga_core::conventional::Method;

#[derive(Debug, Parser)]
#[command(
    name = "dga",
    version,
    about = "Transformer fault diagnosis from dissolved gas analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RankSource {
    /// Use the reference parameter order instead of ranking the dataset.
    #[arg(long)]
    canonical: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank the 37 ratio parameters by skewness.
    Rank {
        #[arg(long, required_unless_present = "canonical")]
        data: Option<PathBuf>,
        #[command(flatten)]
        source: RankSource,
    },
    /// Emit PRC feature vectors.
    Features {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        source: RankSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Holdout accuracy for each feature count; writes the (k, accuracy) curve.
    Searchk {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 18)]
        kmin: usize,
        #[arg(long, default_value_t = 37)]
        kmax: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        source: RankSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the classifier on all labeled rows.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 24)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        source: RankSource,
        #[command(flatten)]
        gbt: GbtArgs,
    },
    /// Score a model, or retrain its configuration on a holdout split or CV.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Test fraction of a seeded split; retrains on the remainder.
        #[arg(long, conflicts_with = "cv")]
        holdout: Option<f64>,
        /// Number of stratified folds.
        #[arg(long)]
        cv: Option<usize>,
        /// Oversample training folds with SMOTE (CV only).
        #[arg(long, requires = "cv")]
        smote: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Predict fault labels with a trained model.
    Diagnose {
        #[arg(long, required_unless_present = "h2", conflicts_with = "h2")]
        data: Option<PathBuf>,
        #[command(flatten)]
        gases: GasArgs,
        #[arg(long)]
        model: PathBuf,
        /// Also print Duval, Rogers and IEC outcomes.
        #[arg(long)]
        compare: bool,
    },
    /// Apply the Duval triangle, Rogers ratios or IEC ratios.
    Conventional {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "all")]
        method: MethodChoice,
    },
    /// Single-stage ITD of each sample's ranked parameters (long format).
    Decompose {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        source: RankSource,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic dataset.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-class counts in the order PD,D1,D2,T1,T2,T3.
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<usize>>,
    },
}

#[derive(Debug, Args)]
struct GasArgs {
    #[arg(long, requires_all = ["ch4", "c2h6", "c2h4", "c2h2"])]
    h2: Option<f64>,
    #[arg(long)]
    ch4: Option<f64>,
    #[arg(long)]
    c2h6: Option<f64>,
    #[arg(long)]
    c2h4: Option<f64>,
    #[arg(long)]
    c2h2: Option<f64>,
}

#[derive(Debug, Args)]
struct GbtArgs {
    #[arg(long, default_value_t = 100)]
    rounds: usize,
    #[arg(long, default_value_t = 0.3)]
    learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    max_depth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MethodChoice {
    One(Method),
    All,
}

impl std::str::FromStr for MethodChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(MethodChoice::All)
        } else {
            s.parse()
                .map(MethodChoice::One)
                .map_err(|e: dga_core::Error| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
