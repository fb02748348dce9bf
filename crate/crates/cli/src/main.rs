//! `jpegnoise`: simulation, model validation, step estimation, re-compression
//! detection, calibration and benchmarks over JPEG noise statistics.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 configuration error,
//! 3 parse error, 4 integrity error.

mod cmd;
mod failure;
mod inputs;
mod manifest;

use clap::{Parser, Subcommand};

use failure::CliResult;

#[derive(Debug, Parser)]
#[command(name = "jpegnoise", version, about = "JPEG noise modelling and forensics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an image through a chain of compression cycles and store the trace.
    Simulate(cmd::simulate::Args),
    /// Check the noise model on an image corpus.
    ValidateModel(cmd::validate::Args),
    /// Estimate the first-cycle quantization step of a decompressed image.
    EstimateQstep(cmd::estimate::Args),
    /// Classify coefficient planes as single or identically double compressed.
    DetectRecompress(cmd::detect::Args),
    /// Fit the two estimator thresholds on labelled images.
    CalibrateQstep(cmd::calibrate::QstepArgs),
    /// Fit the detector threshold on single and double compressed examples.
    CalibrateDetector(cmd::calibrate::DetectorArgs),
    /// Accuracy tables over image sizes and steps or quality factors.
    Benchmark(cmd::benchmark::Args),
    /// Write an IJG-style luminance quantization table.
    GenTable(cmd::gen_table::Args),
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate(a) => cmd::simulate::run(a),
        Command::ValidateModel(a) => cmd::validate::run(a),
        Command::EstimateQstep(a) => cmd::estimate::run(a),
        Command::DetectRecompress(a) => cmd::detect::run(a),
        Command::CalibrateQstep(a) => cmd::calibrate::run_qstep(a),
        Command::CalibrateDetector(a) => cmd::calibrate::run_detector(a),
        Command::Benchmark(a) => cmd::benchmark::run(a),
        Command::GenTable(a) => cmd::gen_table::run(a),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}
