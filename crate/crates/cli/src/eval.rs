use std::fs;
use std::path::{Path, PathBuf};

use cp3::eval::{format_key_values, format_table};
use cp3::io::{decode_groundtruth, read_frame, read_mask, FramePattern, SequenceSpec};
use cp3::{aggregate, metrics, ConfusionCounts, Frame, MetricsReport};
use rayon::prelude::*;

use crate::config::{read_text, sibling, Manifest, RunConfig};
use crate::error::{io_error, CliError, CliResult, Context};
use crate::sequence::format_indices;

/// One video to score: its directory and the directory holding its masks.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub name: String,
    pub video: PathBuf,
    pub masks: PathBuf,
}

/// Reads a list file: one `video_dir masks_dir` pair per line, `#`
/// comments allowed, relative paths taken from the list's directory.
pub fn read_list(path: &Path) -> CliResult<Vec<Job>> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut jobs = Vec::new();
    for (n, line) in read_text(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(CliError::usage(format!(
                "{}:{}: expected 'video_dir masks_dir'",
                path.display(),
                n + 1
            )));
        }
        jobs.push(job(&base.join(fields[0]), &base.join(fields[1])));
    }
    if jobs.is_empty() {
        return Err(CliError::usage(format!("{} lists no videos", path.display())));
    }
    Ok(jobs)
}

fn job(video: &Path, masks: &Path) -> Job {
    let name = video
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| video.display().to_string());
    Job { name, video: video.to_path_buf(), masks: masks.to_path_buf() }
}

pub fn execute(cfg: &RunConfig) -> CliResult<()> {
    let report = cfg.require(&cfg.report, "report")?;
    let jobs = match (&cfg.list, &cfg.input, &cfg.masks) {
        (Some(list), None, None) => read_list(list)?,
        (None, Some(video), Some(masks)) => vec![job(video, masks)],
        _ => return Err(CliError::usage("eval takes either --list or both --input and --masks")),
    };

    let mut manifest = Manifest::new("eval");
    match &cfg.list {
        Some(list) => manifest.path("list", list),
        None => manifest.path("input", &jobs[0].video).path("masks", &jobs[0].masks),
    };
    if let Some(f) = cfg.first {
        manifest.push("first", f);
    }
    if let Some(l) = cfg.last {
        manifest.push("last", l);
    }
    manifest.write(&cfg.manifest.clone().unwrap_or_else(|| sibling(report, ".manifest")))?;

    let mut rows = Vec::new();
    for j in &jobs {
        let (range, counts) = score(j, cfg.first, cfg.last).context(&j.name)?;
        log::info!(
            "{}: frames {}..={}, tp={} fp={} tn={} fn={}",
            j.name,
            range.0,
            range.1,
            counts.tp,
            counts.fp,
            counts.tn,
            counts.fn_
        );
        rows.push((j.name.clone(), metrics(&counts).context(&j.name)?));
    }
    let reports: Vec<MetricsReport> = rows.iter().map(|(_, r)| r.clone()).collect();
    rows.push(("aggregate".to_string(), aggregate(&reports)?));

    print!("{}", format_table(&rows));
    if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(report, format_key_values(&rows)).map_err(|e| io_error(report, e))?;
    log::info!("report written to {}", report.display());
    Ok(())
}

/// Tallies one video over its scored interval: explicit bounds, else the
/// temporal ROI, else every ground-truth frame.
pub fn score(job: &Job, first: Option<usize>, last: Option<usize>) -> CliResult<((usize, usize), ConfusionCounts)> {
    let seq = SequenceSpec::cdw(&job.video)?;
    let gt_dir = seq
        .groundtruth_dir
        .clone()
        .ok_or_else(|| CliError::data(format!("{} has no groundtruth directory", job.video.display())))?;
    let roi = SequenceSpec::temporal_roi(&job.video)?.unwrap_or((seq.first, seq.last));
    let range = (first.unwrap_or(roi.0), last.unwrap_or(roi.1));
    if range.0 > range.1 {
        return Err(CliError::usage(format!("evaluation range {}..={} is empty", range.0, range.1)));
    }

    let indices: Vec<usize> = (range.0..=range.1).collect();
    let gt_path = |i: usize| gt_dir.join(seq.groundtruth_pattern.format(i));
    let missing: Vec<usize> = indices.iter().copied().filter(|&i| !gt_path(i).is_file()).collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!(
            "missing ground truth for {} frame(s): {}",
            missing.len(),
            format_indices(&missing)
        )));
    }
    let digits = seq.input_pattern.digits;
    let mask_path = |i: usize| -> Option<PathBuf> {
        ["png", "pgm"]
            .iter()
            .map(|ext| job.masks.join(FramePattern::new("bin", digits, &format!(".{ext}")).format(i)))
            .find(|p| p.is_file())
    };
    let missing: Vec<usize> = indices.iter().copied().filter(|&i| mask_path(i).is_none()).collect();
    if !missing.is_empty() {
        return Err(CliError::data(format!(
            "missing masks in {} for {} frame(s): {}",
            job.masks.display(),
            missing.len(),
            format_indices(&missing)
        )));
    }
    let roi_mask: Option<Frame<f32>> = seq.roi_path.as_ref().map(read_frame).transpose()?;

    let counts = indices
        .par_iter()
        .map(|&i| -> CliResult<ConfusionCounts> {
            let mut gt = decode_groundtruth(&read_frame::<f32>(gt_path(i))?)?;
            if let Some(roi) = &roi_mask {
                gt.apply_roi(roi)?;
            }
            let mask = read_mask(mask_path(i).expect("checked above"))?;
            let mut c = ConfusionCounts::default();
            c.accumulate(&mask, &gt).context(format_args!("frame {i}"))?;
            Ok(c)
        })
        .collect::<CliResult<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok((range, counts))
}
