use std::fs;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use cp3::io::{load_model_file, load_sequence, model_scalar_bytes, save_model_file, write_mask, SequenceSpec};
use cp3::{BackgroundModel, ModelParams, Real};

use crate::config::{Manifest, Precision, RunConfig};
use crate::error::{io_error, CliError, CliResult, Context};
use crate::sequence::{mask_pattern, open};
use crate::train::fit;

pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    let input = cfg.require(&cfg.input, "input")?;
    let output = cfg.require(&cfg.output, "output")?;
    let seq = open(cfg, input)?;
    let precision = match (cfg.precision, &cfg.model) {
        (Some(p), _) => p,
        (None, Some(path)) => {
            let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
            match model_scalar_bytes(&bytes).context(path.display())? {
                4 => Precision::F32,
                _ => Precision::F64,
            }
        }
        (None, None) => Precision::F64,
    };
    fs::create_dir_all(output).map_err(|e| io_error(output, e))?;
    match precision {
        Precision::F64 => detect::<f64>(cfg, &seq, precision, output),
        Precision::F32 => detect::<f32>(cfg, &seq, precision, output),
    }
}

fn detect<T: Real>(cfg: &RunConfig, seq: &SequenceSpec, precision: Precision, output: &Path) -> CliResult<()> {
    let input = cfg.input.as_deref().unwrap_or(Path::new(""));
    let mut manifest = Manifest::new("run");
    manifest.path("input", input).push("first", seq.first).push("last", seq.last);

    let (mut model, start): (BackgroundModel<T>, usize) = match &cfg.model {
        Some(path) => {
            let mut model = load_model_file::<T>(path).context(path.display())?;
            let params = cfg.resolve_params(model.params().clone())?;
            model.set_params(params).map_err(|e| CliError::usage(e.to_string()))?;
            manifest.path("model", path);
            (model, seq.first)
        }
        None => {
            let params = cfg.resolve_params(ModelParams::default())?;
            manifest.push("stride", cfg.stride());
            let fitted = fit::<T>(seq, &params, cfg.stride())?;
            for line in (fitted.report() + &fitted.fallback_line()).lines() {
                log::info!("{line}");
            }
            (fitted.training.model, fitted.window.1 + 1)
        }
    };
    manifest.push("precision", precision.as_str()).params(model.params());
    manifest.write(&cfg.manifest.clone().unwrap_or_else(|| output.join("manifest.txt")))?;

    let names = mask_pattern(seq);
    let frames = if start <= seq.last {
        let range = seq.clone().with_range(start, seq.last);
        Some(load_sequence::<T>(&range)?)
    } else {
        log::warn!("no frames after the training window");
        None
    };

    let t0 = Instant::now();
    let mut processed = 0usize;
    if let Some(frames) = frames {
        // Decode frame t+1 while frame t is being stepped; order is kept by
        // the channel.
        let (tx, rx) = mpsc::sync_channel(2);
        thread::scope(|s| -> CliResult<()> {
            s.spawn(move || {
                for item in frames {
                    let stop = item.is_err();
                    if tx.send(item).is_err() || stop {
                        break;
                    }
                }
            });
            for (offset, item) in rx.into_iter().enumerate() {
                let index = start + offset;
                let item = item.context(format_args!("frame {index}"))?;
                let mask = model.step(&item.frame).context(format_args!("frame {index}"))?;
                write_mask(&mask, output.join(names.format(item.index)))?;
                processed += 1;
            }
            Ok(())
        })?;
    }
    let secs = t0.elapsed().as_secs_f64();
    let fps = if secs > 0.0 { processed as f64 / secs } else { 0.0 };
    log::info!("processed {processed} frames in {secs:.3} s ({fps:.1} fps)");
    println!("masks        {processed}");

    if let Some(path) = &cfg.save_model {
        save_model_file(&model, path)?;
        log::info!("final model written to {}", path.display());
    }
    Ok(())
}
