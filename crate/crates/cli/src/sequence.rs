use std::path::Path;

use cp3::io::{load_sequence, FramePattern, SequenceSpec};
use cp3::{Frame, Real};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};

/// Input frames of a video directory, restricted to `first`/`last` when
/// set. Ground truth is not attached: detection never reads it.
pub fn open(cfg: &RunConfig, video: &Path) -> CliResult<SequenceSpec> {
    let mut seq = SequenceSpec::cdw(video).context(video.display())?;
    seq.groundtruth_dir = None;
    seq.roi_path = None;
    if let Some(f) = cfg.first {
        seq.first = f;
    }
    if let Some(l) = cfg.last {
        seq.last = l;
    }
    if seq.first > seq.last {
        return Err(CliError::usage(format!("frame range {}..={} is empty", seq.first, seq.last)));
    }
    Ok(seq)
}

/// Masks share the input's index width: `in000123.jpg` -> `bin000123.png`.
pub fn mask_pattern(seq: &SequenceSpec) -> FramePattern {
    FramePattern::new("bin", seq.input_pattern.digits, ".png")
}

pub fn load_frames<T: Real>(seq: &SequenceSpec) -> CliResult<Vec<Frame<T>>> {
    let mut frames = Vec::with_capacity(seq.len());
    for (i, item) in load_sequence::<T>(seq)?.enumerate() {
        frames.push(item.context(format_args!("frame {}", seq.first + i))?.frame);
    }
    Ok(frames)
}

/// `3, 7-9, 12` style listing of sorted indices.
pub fn format_indices(indices: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < indices.len() {
        let start = indices[i];
        let mut end = start;
        while i + 1 < indices.len() && indices[i + 1] == end + 1 {
            i += 1;
            end = indices[i];
        }
        parts.push(if start == end { start.to_string() } else { format!("{start}-{end}") });
        i += 1;
    }
    parts.join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_ranges_collapse() {
        assert_eq!(format_indices(&[3, 7, 8, 9, 12]), "3, 7-9, 12");
        assert_eq!(format_indices(&[1]), "1");
        assert_eq!(format_indices(&[]), "");
    }
}
