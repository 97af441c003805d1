//! Command-line front end for the anomaly triage pipeline.
//!
//! The pipeline runs in four stages — detect, render, verify, evaluate —
//! each usable as its own subcommand, plus `run` for the whole sequence.
//! Stages hand artifacts to each other through the output directory, and
//! judge responses go through an on-disk cache, so any stage can be rerun
//! (or resumed after a failure) and produces byte-identical outputs.

use clap::{Parser, Subcommand};

pub mod cache;
pub mod config;
pub mod error;
pub mod files;
pub mod stages;

use config::{GlobalOpts, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "alarmsift",
    version,
    about = "Two-stage anomaly triage: k-NN detection, then a judge sifts the alarms"
)]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score datasets and write one detections file each.
    Detect,
    /// Write a PNG overlay and a text table for every detection.
    Render,
    /// Judge every detection (stub or live endpoint) and write verdicts.
    Verify,
    /// Fold detections and verdicts into the metrics report.
    Evaluate,
    /// All four stages in order.
    Run,
}

/// Parses arguments, runs the chosen command, and returns the process exit
/// code (0 success, 2 configuration, 3 data, 4 network).
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.opts).and_then(|config| match cli.command {
        Command::Detect => stages::cmd_detect(&config),
        Command::Render => stages::cmd_render(&config),
        Command::Verify => stages::cmd_verify(&config),
        Command::Evaluate => stages::cmd_evaluate(&config),
        Command::Run => stages::cmd_run(&config),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
