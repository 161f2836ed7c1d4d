//! `cp3`: train, run, evaluate and synthesize background subtraction
//! experiments. Exit status: 0 success, 1 usage, 2 data error, 3 numeric
//! failure.

mod config;
mod error;
mod eval;
mod run;
mod scene;
mod sequence;
mod synth;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::config::{Precision, RunConfig};
use crate::error::CliResult;
use crate::scene::SceneConfig;

#[derive(Parser, Debug)]
#[command(name = "cp3", version, about = "Pixel-pair background subtraction")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CP3_THREADS")]
    threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Less log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    quiet: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on the first frames of a video directory.
    Train {
        /// Video directory containing `input/`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Where to write the model.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        model_args: ModelArgs,
    },
    /// Detect foreground, writing one mask per frame.
    Run {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Start from this model instead of training on the first frames.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Mask directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write the final, updated model here.
        #[arg(long)]
        save_model: Option<PathBuf>,
        #[command(flatten)]
        model_args: ModelArgs,
    },
    /// Score masks against ground truth.
    Eval {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Video directory with `groundtruth/`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        masks: Option<PathBuf>,
        /// File of `video_dir masks_dir` lines.
        #[arg(long)]
        list: Option<PathBuf>,
        /// Key=value report file.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        first: Option<usize>,
        #[arg(long)]
        last: Option<usize>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Write a synthetic video directory with ground truth.
    Synth {
        /// Scene file (see README).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        frames: Option<usize>,
        /// Scored interval, `first:last` (1-based).
        #[arg(long)]
        temporal_roi: Option<String>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

/// Configuration and parameter overrides shared by `train` and `run`.
#[derive(Args, Debug)]
struct ModelArgs {
    /// Key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Candidate lattice step during training.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    no_range_check: bool,
    #[arg(long)]
    k_supports: Option<usize>,
    #[arg(long)]
    pf_threshold: Option<f64>,
    #[arg(long)]
    gauss_c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    candidate_multiplier: Option<usize>,
    #[arg(long)]
    gamma_scale: Option<f64>,
    #[arg(long)]
    gamma_floor: Option<f64>,
    #[arg(long)]
    range_margin_lo: Option<f64>,
    #[arg(long)]
    range_margin_hi: Option<f64>,
    #[arg(long)]
    cov_epsilon: Option<f64>,
    #[arg(long)]
    training_frames: Option<usize>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    /// First and last input frame indices to use.
    #[arg(long)]
    first: Option<usize>,
    #[arg(long)]
    last: Option<usize>,
    /// Manifest path (default: next to the primary output).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

fn base_config(command: &str, file: &Option<PathBuf>) -> CliResult<RunConfig> {
    match file {
        Some(path) => RunConfig::load(command, path),
        None => Ok(RunConfig::new(command)),
    }
}

impl ModelArgs {
    fn into_config(self, command: &str) -> CliResult<RunConfig> {
        let mut cfg = base_config(command, &self.config)?;
        cfg.set_opt("seed", self.seed)?;
        cfg.set_opt("stride", self.stride)?;
        if self.no_range_check {
            cfg.set("range_check", "false")?;
        }
        cfg.set_opt("k_supports", self.k_supports)?;
        cfg.set_opt("pf_threshold", self.pf_threshold)?;
        cfg.set_opt("gauss_c", self.gauss_c)?;
        cfg.set_opt("alpha", self.alpha)?;
        cfg.set_opt("candidate_multiplier", self.candidate_multiplier)?;
        cfg.set_opt("gamma_scale", self.gamma_scale)?;
        cfg.set_opt("gamma_floor", self.gamma_floor)?;
        cfg.set_opt("range_margin_lo", self.range_margin_lo)?;
        cfg.set_opt("range_margin_hi", self.range_margin_hi)?;
        cfg.set_opt("cov_epsilon", self.cov_epsilon)?;
        cfg.set_opt("training_frames", self.training_frames)?;
        cfg.set_opt("precision", self.precision.map(Precision::as_str))?;
        cfg.set_opt("first", self.first)?;
        cfg.set_opt("last", self.last)?;
        if self.manifest.is_some() {
            cfg.manifest = self.manifest;
        }
        Ok(cfg)
    }
}

fn set_path(slot: &mut Option<PathBuf>, flag: Option<PathBuf>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Train { input, model, model_args } => {
            let mut cfg = model_args.into_config("train")?;
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.model, model);
            train::execute(&cfg)
        }
        Command::Run { input, model, output, save_model, model_args } => {
            let mut cfg = model_args.into_config("run")?;
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.model, model);
            set_path(&mut cfg.output, output);
            set_path(&mut cfg.save_model, save_model);
            run::execute(&cfg)
        }
        Command::Eval { config, input, masks, list, report, first, last, manifest } => {
            let mut cfg = base_config("eval", &config)?;
            set_path(&mut cfg.input, input);
            set_path(&mut cfg.masks, masks);
            set_path(&mut cfg.list, list);
            set_path(&mut cfg.report, report);
            set_path(&mut cfg.manifest, manifest);
            cfg.set_opt("first", first)?;
            cfg.set_opt("last", last)?;
            eval::execute(&cfg)
        }
        Command::Synth { config, output, seed, frames, temporal_roi, manifest } => {
            let mut scene = match &config {
                Some(path) => SceneConfig::load(path)?,
                None => SceneConfig::default(),
            };
            let here = std::path::Path::new("");
            if let Some(o) = output {
                scene.output = Some(o);
            }
            if let Some(s) = seed {
                scene.set("seed", &s.to_string(), here)?;
            }
            if let Some(f) = frames {
                scene.set("frames", &f.to_string(), here)?;
            }
            if let Some(r) = temporal_roi {
                scene.set("temporal_roi", &r, here)?;
            }
            synth::execute(&scene, manifest)
        }
    }
}

fn init_logging(verbose: u8, quiet: u8) {
    let level = match i16::from(verbose) - i16::from(quiet) {
        i16::MIN..=-2 => log::LevelFilter::Error,
        -1 => log::LevelFilter::Warn,
        0 => log::LevelFilter::Info,
        1 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("CP3_LOG")
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose, cli.quiet);
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
