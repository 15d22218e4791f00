//! Command-line pipeline: feature extraction, posteriorgram inference and
//! caching, enrollment, verification, calibration, cross-validation,
//! statistics, latency benchmarking and synthetic corpora.

pub mod args;
pub mod commands;
pub mod error;
pub mod scoring;
pub mod source;
pub mod synth;

pub use error::{CliError, Result};

use args::{Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract(a) => commands::extract(a),
        Command::Infer(a) => commands::infer(a),
        Command::Enroll(a) => commands::enroll_cmd(a),
        Command::Verify(a) => commands::verify(a),
        Command::Calibrate(a) => commands::calibrate_cmd(a),
        Command::Cv(a) => commands::cv(a),
        Command::Stats(a) => commands::stats(a),
        Command::Bench(a) => commands::bench(a),
        Command::Synth(a) => synth::run(a),
    }
}
