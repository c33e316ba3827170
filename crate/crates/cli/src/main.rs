//! `labelassist` command-line entry points.
//!
//! Exit codes: 0 success, 2 invalid input (config, arguments, data, or a
//! `--strict` inspection with warnings), 3 the server could not bind.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "labelassist", version, about = "Assisted image-segmentation annotation workbench")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Serve a project to the browser UI until interrupted.
    Serve {
        /// Project config file (TOML).
        #[arg(long, value_name = "FILE")]
        project: PathBuf,
        /// Port to listen on; 0 picks a free one.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory with the built UI, served at `/`.
        #[arg(long, value_name = "DIR")]
        ui_dir: Option<PathBuf>,
    },
    /// Score a pre-label function against ground-truth masks (mean DSC).
    EvalPrelabel {
        #[arg(long, value_name = "FILE")]
        project: PathBuf,
        #[arg(long, value_enum)]
        strategy: PrelabelChoice,
        /// Ground-truth masks named `<stem>.png` or `<stem>_label.png`.
        #[arg(long, value_name = "DIR")]
        labels: PathBuf,
        /// Mask directory for `external`; defaults to the project's
        /// `prelabel.external_dir`.
        #[arg(long, value_name = "DIR")]
        external_dir: Option<PathBuf>,
        /// CSV on stdout (`sample_id,dsc`, then `mean,<value>`).
        #[arg(long)]
        csv: bool,
    },
    /// Replay selections of one strategy and report cluster coverage.
    SimulateSampling {
        #[arg(long, value_name = "FILE")]
        project: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyChoice,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        budget: u64,
        /// Overrides `selector.seed` of the project.
        #[arg(long)]
        seed: Option<u64>,
        /// CSV `sample_id,group` for coverage of known groups (e.g. scenes).
        #[arg(long, value_name = "FILE")]
        scenes: Option<PathBuf>,
        /// CSV on stdout (`rank,sample_id,score,cluster,group`).
        #[arg(long)]
        csv: bool,
    },
    /// Inspect every mask in a directory and list warnings.
    InspectBatch {
        #[arg(long, value_name = "DIR")]
        masks: PathBuf,
        #[arg(long, default_value_t = 1)]
        target_segments: u32,
        #[arg(long, default_value_t = 0)]
        target_holes: u32,
        #[arg(long, default_value_t = 1.0)]
        weight_segments: f64,
        #[arg(long, default_value_t = 1.0)]
        weight_holes: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma0: f64,
        /// Exit 2 when any mask is flagged or unreadable.
        #[arg(long)]
        strict: bool,
    },
    /// Copy labeled pairs and a manifest into a training-job bundle.
    Export {
        #[arg(long, value_name = "FILE")]
        project: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Write a seeded synthetic scene dataset with ground truth.
    #[command(hide = true)]
    GenSynthetic {
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        scenes: usize,
        #[arg(long, default_value_t = 10)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        width: u32,
        #[arg(long, default_value_t = 64)]
        height: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        intensity_step: u8,
        #[arg(long, default_value_t = 5)]
        noise: u8,
        /// Dark disk on bright background; ground truth unchanged.
        #[arg(long)]
        invert: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrelabelChoice {
    Otsu,
    #[value(name = "previous_label")]
    PreviousLabel,
    External,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyChoice {
    Sequential,
    Random,
    #[value(name = "sequence_aware")]
    SequenceAware,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Serve {
            project,
            port,
            host,
            ui_dir,
        } => commands::serve::run(&project, &host, port, ui_dir),
        Command::EvalPrelabel {
            project,
            strategy,
            labels,
            external_dir,
            csv,
        } => commands::eval::run(&project, strategy.into(), &labels, external_dir, csv),
        Command::SimulateSampling {
            project,
            strategy,
            budget,
            seed,
            scenes,
            csv,
        } => commands::simulate::run(&project, strategy.into(), budget as usize, seed, scenes.as_deref(), csv),
        Command::InspectBatch {
            masks,
            target_segments,
            target_holes,
            weight_segments,
            weight_holes,
            gamma0,
            strict,
        } => commands::inspect::run(
            &masks,
            commands::inspect::Targets {
                segments: target_segments,
                holes: target_holes,
                weight_segments,
                weight_holes,
                gamma0,
            },
            strict,
        ),
        Command::Export { project, out } => commands::export(&project, &out),
        Command::GenSynthetic {
            out,
            scenes,
            frames,
            width,
            height,
            seed,
            intensity_step,
            noise,
            invert,
        } => commands::gen_synthetic(
            &out,
            labelassist::synthetic::SyntheticParams {
                scenes,
                frames,
                width,
                height,
                scene_intensity_step: intensity_step,
                noise,
                invert,
                seed,
                ..Default::default()
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {:#}", e.code, e.source);
            ExitCode::from(e.exit)
        }
    }
}

impl From<PrelabelChoice> for commands::eval::Choice {
    fn from(c: PrelabelChoice) -> Self {
        match c {
            PrelabelChoice::Otsu => Self::Otsu,
            PrelabelChoice::PreviousLabel => Self::PreviousLabel,
            PrelabelChoice::External => Self::External,
        }
    }
}

impl From<StrategyChoice> for labelassist::selector::QueryStrategyId {
    fn from(c: StrategyChoice) -> Self {
        match c {
            StrategyChoice::Sequential => Self::Sequential,
            StrategyChoice::Random => Self::Random,
            StrategyChoice::SequenceAware => Self::SequenceAware,
        }
    }
}
