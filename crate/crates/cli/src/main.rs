use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use pansrr_cli::pipeline::{run_evaluate, run_pipeline, run_reconstruct, run_simulate};
use pansrr_cli::ExperimentConfig;
use pansrr_core::metrics::to_text_table;

#[derive(Parser)]
#[command(
    name = "pansrr",
    version,
    about = "Multiframe super-resolution of pansharpened multispectral imagery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate shifted, blurred, downsampled LR frames from a truth volume.
    Simulate(Common),
    /// Reconstruct from simulated frames or real MS+PAN acquisitions.
    Reconstruct(Common),
    /// Score the reconstructions in the output directory against a truth.
    Evaluate(Common),
    /// Simulate (or pansharpen), register, reconstruct and evaluate.
    FullRun(Common),
}

#[derive(Args)]
struct Common {
    /// key = value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// simulated or real.
    #[arg(long)]
    mode: Option<String>,
    /// Truth bundle directory, PNG, or builtin:<size>.
    #[arg(long)]
    truth: Option<String>,
    /// PNG mixed into a builtin truth.
    #[arg(long)]
    natural: Option<String>,
    /// Comma-separated acquisition directories (real mode).
    #[arg(long)]
    inputs: Option<String>,
    /// Frame directory written by `simulate`.
    #[arg(long)]
    frames: Option<String>,
    /// ibp, lsq or both.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long = "max-iters")]
    max_iters: Option<String>,
    #[arg(long = "blur-sigma")]
    blur_sigma: Option<String>,
    #[arg(long = "noise-sigma")]
    noise_sigma: Option<String>,
    /// Comma-separated subset of linear,bicubic,classic_ibp, or none.
    #[arg(long)]
    baselines: Option<String>,
    /// estimate or recorded.
    #[arg(long)]
    registration: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("mode", &self.mode),
            ("truth", &self.truth),
            ("natural", &self.natural),
            ("inputs", &self.inputs),
            ("frames", &self.frames),
            ("solver", &self.solver),
            ("lambda", &self.lambda),
            ("tau", &self.tau),
            ("max_iters", &self.max_iters),
            ("blur_sigma", &self.blur_sigma),
            ("noise_sigma", &self.noise_sigma),
            ("baselines", &self.baselines),
            ("registration", &self.registration),
            ("seed", &self.seed),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.resolve()?;
            let set = run_simulate(&cfg)?;
            println!(
                "wrote {} frames to {}",
                set.frames.len(),
                cfg.out.join("frames").display()
            );
        }
        Command::Reconstruct(c) => {
            let cfg = c.resolve()?;
            let summary = run_reconstruct(&cfg)?;
            println!(
                "wrote {} to {}",
                summary.methods.join(", "),
                cfg.out.join("methods").display()
            );
        }
        Command::Evaluate(c) => {
            let cfg = c.resolve()?;
            print!("{}", to_text_table(&run_evaluate(&cfg)?));
        }
        Command::FullRun(c) => {
            let cfg = c.resolve()?;
            let summary = run_pipeline(&cfg)?;
            match summary.metrics {
                Some(t) => print!("{}", to_text_table(&t)),
                None => println!(
                    "wrote {} to {}",
                    summary.methods.join(", "),
                    cfg.out.join("methods").display()
                ),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
