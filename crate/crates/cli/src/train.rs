use std::path::Path;
use std::time::{Duration, Instant};

use cp3::io::{save_model_file, SequenceSpec};
use cp3::{train_with, ModelParams, Real, TrainOptions, Training};

use crate::config::{sibling, Manifest, Precision, RunConfig};
use crate::error::{CliError, CliResult};
use crate::sequence::{load_frames, open};

pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    let input = cfg.require(&cfg.input, "input")?;
    let out = cfg.require(&cfg.model, "model")?;
    let params = cfg.resolve_params(ModelParams::default())?;
    let precision = cfg.precision.unwrap_or(Precision::F64);
    let seq = open(cfg, input)?;

    let mut manifest = Manifest::new("train");
    manifest
        .path("input", input)
        .push("first", seq.first)
        .push("last", seq.last)
        .push("precision", precision.as_str())
        .push("stride", cfg.stride())
        .params(&params);
    manifest.write(&cfg.manifest.clone().unwrap_or_else(|| sibling(out, ".manifest")))?;

    let report = match precision {
        Precision::F64 => fit::<f64>(&seq, &params, cfg.stride())?.save(out)?,
        Precision::F32 => fit::<f32>(&seq, &params, cfg.stride())?.save(out)?,
    };
    print!("{report}");
    Ok(())
}

pub struct Fitted<T> {
    pub training: Training<T>,
    pub load: Duration,
    pub window: (usize, usize),
}

/// Loads the first `training_frames` frames of `seq` and trains on them.
pub fn fit<T: Real>(seq: &SequenceSpec, params: &ModelParams, stride: usize) -> CliResult<Fitted<T>> {
    let n = params.training_frames;
    if seq.len() < n {
        return Err(CliError::data(format!(
            "training needs {n} frames, the sequence has {} ({}..={})",
            seq.len(),
            seq.first,
            seq.last
        )));
    }
    let window = seq.clone().with_range(seq.first, seq.first + n - 1);
    let t0 = Instant::now();
    let frames = load_frames::<T>(&window)?;
    let load = t0.elapsed();
    log::info!("training on frames {}..={}", window.first, window.last);
    let progress = |done: usize, rows: usize| {
        if done % 16 == 0 || done == rows {
            log::debug!("correlation rows {done}/{rows}");
        }
    };
    let opts = TrainOptions { stride, progress: Some(&progress) };
    let training = train_with(&frames, params, opts)?;
    Ok(Fitted { training, load, window: (window.first, window.last) })
}

impl<T: Real> Fitted<T> {
    /// Timing table for the stages so far.
    pub fn report(&self) -> String {
        let t = &self.training.timings;
        let row = |name: &str, d: Duration| format!("{name:<12} {:>10.3} s\n", d.as_secs_f64());
        let mut s = format!("frames       {}..={}\n", self.window.0, self.window.1);
        s += &row("load", self.load);
        s += &row("statistics", t.statistics);
        s += &row("correlation", t.correlation);
        s += &row("sampling", t.sampling);
        s
    }

    pub fn fallback_line(&self) -> String {
        let fallback = self.training.selections.iter().filter(|s| s.fallback).count();
        format!("fallback     {fallback}/{} pixels\n", self.training.selections.len())
    }

    fn save(self, path: &Path) -> CliResult<String> {
        let t0 = Instant::now();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| crate::error::io_error(dir, e))?;
        }
        save_model_file(&self.training.model, path)?;
        let save = t0.elapsed();
        let t = &self.training.timings;
        let total = self.load + t.statistics + t.correlation + t.sampling + save;
        let fallback = self.fallback_line();
        log::info!("model written to {}", path.display());
        Ok(format!(
            "{}save         {:>10.3} s\ntotal        {:>10.3} s\n{fallback}",
            self.report(),
            save.as_secs_f64(),
            total.as_secs_f64()
        ))
    }
}
