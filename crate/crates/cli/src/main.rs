//! `wmt`: multiscale analysis of measure sequences from the command line.
//!
//! Every command writes `report.json` plus plot-ready CSV into `--out-dir`.
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wmt_core::io::Format;
use wmt_core::multiscale::DEFAULT_K_SIGMA;
use wmt_core::Error;

use commands::{Common, CurveArgs, DipoleArgs};

#[derive(Parser)]
#[command(name = "wmt", version, about = "Multiscale transform of measure sequences in Wasserstein space")]
struct Cli {
    /// Cost exponent; Gaussian sequences accept only 2.
    #[arg(long, global = true, default_value_t = 2.0)]
    p: f64,
    /// Sequence file format; guessed from the extension when absent.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a sequence; writes pyramid.json and norms.csv.
    Analyze {
        input: PathBuf,
        #[arg(long)]
        levels: Option<u32>,
        /// Report the shift-averaged optimality number.
        #[arg(long)]
        shift: bool,
    },
    /// Rebuild the sequence from a pyramid file.
    Synthesize {
        pyramid: PathBuf,
        /// Sequence to compare the reconstruction against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Zero details whose norm exceeds the threshold and reconstruct.
    Denoise {
        input: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        levels: Option<u32>,
        /// Ground-truth sequence for distance reporting.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Flag unusually large details; writes anomalies.csv.
    Detect {
        input: PathBuf,
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_K_SIGMA)]
        k_sigma: f64,
        /// Report flags on every level, not just the finest.
        #[arg(long)]
        all_levels: bool,
    },
    /// Print the optimality number.
    Optimality {
        input: PathBuf,
        #[arg(long)]
        levels: Option<u32>,
        #[arg(long)]
        shift: bool,
    },
    /// Advect a particle cloud through the dipole field.
    SimulateDipole {
        /// JSON file with a full simulation spec; flags override it.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        particles: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        timestep: Option<f64>,
        /// Standard deviation of the per-step field noise.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample a synthetic Gaussian curve.
    GenGaussian {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        bump: Option<f64>,
        /// Standard deviation of the noise on the means.
        #[arg(long)]
        noise_mean: Option<f64>,
        /// Standard deviation of the noise on the variances.
        #[arg(long)]
        noise_var: Option<f64>,
        #[arg(long)]
        no_taper: bool,
        /// Variance factor on the middle third.
        #[arg(long)]
        jump: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Blend a Gaussian curve with the geodesic between its endpoints.
    GenFamily {
        input: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        levels: Option<u32>,
    },
}

fn run(cli: Cli) -> wmt_core::Result<()> {
    let c = Common {
        p: cli.p,
        format: cli.format,
        out_dir: cli.out_dir,
    };
    std::fs::create_dir_all(&c.out_dir)?;
    match cli.command {
        Command::Analyze { input, levels, shift } => commands::analyze_cmd(&c, &input, levels, shift),
        Command::Synthesize { pyramid, reference } => {
            commands::synthesize_cmd(&c, &pyramid, reference.as_deref())
        }
        Command::Denoise {
            input,
            threshold,
            levels,
            truth,
        } => commands::denoise_cmd(&c, &input, threshold, levels, truth.as_deref()),
        Command::Detect {
            input,
            levels,
            k_sigma,
            all_levels,
        } => commands::detect_cmd(&c, &input, levels, k_sigma, all_levels),
        Command::Optimality { input, levels, shift } => {
            commands::optimality_cmd(&c, &input, levels, shift)
        }
        Command::SimulateDipole {
            spec,
            particles,
            steps,
            timestep,
            noise,
            seed,
        } => commands::simulate_dipole_cmd(
            &c,
            &DipoleArgs {
                spec,
                particles,
                steps,
                timestep,
                noise,
                seed,
            },
        ),
        Command::GenGaussian {
            spec,
            samples,
            bump,
            noise_mean,
            noise_var,
            no_taper,
            jump,
            seed,
        } => commands::gen_gaussian_cmd(
            &c,
            &CurveArgs {
                spec,
                samples,
                bump,
                noise_mean,
                noise_var,
                no_taper,
                jump,
                seed,
            },
        ),
        Command::GenFamily { input, k, levels } => commands::gen_family_cmd(&c, &input, k, levels),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("WMT_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
