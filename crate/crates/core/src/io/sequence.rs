//! Frame sequences laid out like changedetection.net videos:
//!
//! ```text
//! <video>/input/in000001.jpg ...
//! <video>/groundtruth/gt000001.png ...
//! <video>/ROI.bmp
//! <video>/temporalROI.txt      "first last"
//! ```

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::groundtruth::{decode_groundtruth, GroundTruthFrame};
use super::image_file::read_frame;
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::scalar::Real;

/// `printf`-style file name with one zero-padded index, e.g. `in%06d.jpg`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FramePattern {
    pub prefix: String,
    pub digits: usize,
    pub suffix: String,
}

impl FramePattern {
    pub fn new(prefix: &str, digits: usize, suffix: &str) -> Self {
        FramePattern {
            prefix: prefix.into(),
            digits,
            suffix: suffix.into(),
        }
    }

    pub fn format(&self, index: usize) -> String {
        format!("{}{:0width$}{}", self.prefix, index, self.suffix, width = self.digits)
    }

    /// Index encoded in `name`, if it matches.
    pub fn parse_index(&self, name: &str) -> Option<usize> {
        let mid = name.strip_prefix(&self.prefix)?.strip_suffix(&self.suffix)?;
        if mid.is_empty() || !mid.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        mid.parse().ok()
    }

    pub fn with_extension(&self, ext: &str) -> Self {
        FramePattern {
            suffix: format!(".{ext}"),
            ..self.clone()
        }
    }
}

impl Default for FramePattern {
    fn default() -> Self {
        FramePattern::new("in", 6, ".jpg")
    }
}

impl FromStr for FramePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("frame pattern '{s}' needs exactly one %0Nd or %d"));
        let start = s.find('%').ok_or_else(bad)?;
        let rest = &s[start + 1..];
        let end = rest.find('d').ok_or_else(bad)?;
        let spec = &rest[..end];
        let digits = if spec.is_empty() {
            0
        } else {
            spec.trim_start_matches('0').parse().map_err(|_| bad())?
        };
        let suffix = &rest[end + 1..];
        if suffix.contains('%') {
            return Err(bad());
        }
        Ok(FramePattern::new(&s[..start], digits, suffix))
    }
}

impl fmt::Display for FramePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits == 0 {
            write!(f, "{}%d{}", self.prefix, self.suffix)
        } else {
            write!(f, "{}%0{}d{}", self.prefix, self.digits, self.suffix)
        }
    }
}

/// Which files make up a sequence and which indices to iterate (1-based,
/// inclusive).
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceSpec {
    pub input_dir: PathBuf,
    pub input_pattern: FramePattern,
    pub groundtruth_dir: Option<PathBuf>,
    pub groundtruth_pattern: FramePattern,
    pub roi_path: Option<PathBuf>,
    pub first: usize,
    pub last: usize,
}

impl SequenceSpec {
    pub fn new(input_dir: impl Into<PathBuf>, input_pattern: FramePattern, first: usize, last: usize) -> Self {
        SequenceSpec {
            input_dir: input_dir.into(),
            input_pattern,
            groundtruth_dir: None,
            groundtruth_pattern: FramePattern::new("gt", 6, ".png"),
            roi_path: None,
            first,
            last,
        }
    }

    /// Describes a changedetection.net-style video directory. Iterates every
    /// input frame present; see [`SequenceSpec::temporal_roi`] for the scored
    /// interval.
    pub fn cdw(video_dir: impl AsRef<Path>) -> Result<Self> {
        let video_dir = video_dir.as_ref();
        let input_dir = video_dir.join("input");
        let (input_pattern, first, last) = detect_pattern(&input_dir, "in")?;
        let mut spec = SequenceSpec::new(&input_dir, input_pattern, first, last);
        let gt_dir = video_dir.join("groundtruth");
        if gt_dir.is_dir() {
            if let Ok((pattern, _, _)) = detect_pattern(&gt_dir, "gt") {
                spec.groundtruth_pattern = pattern;
            }
            spec.groundtruth_dir = Some(gt_dir);
        }
        spec.roi_path = ["ROI.bmp", "ROI.png", "ROI.pgm"]
            .iter()
            .map(|n| video_dir.join(n))
            .find(|p| p.is_file());
        Ok(spec)
    }

    /// Reads `temporalROI.txt` next to the input directory, if present.
    pub fn temporal_roi(video_dir: impl AsRef<Path>) -> Result<Option<(usize, usize)>> {
        let path = video_dir.as_ref().join("temporalROI.txt");
        if path.is_file() {
            read_temporal_roi(&path).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn with_range(mut self, first: usize, last: usize) -> Self {
        self.first = first;
        self.last = last;
        self
    }

    pub fn frame_path(&self, index: usize) -> PathBuf {
        self.input_dir.join(self.input_pattern.format(index))
    }

    pub fn groundtruth_path(&self, index: usize) -> Option<PathBuf> {
        self.groundtruth_dir
            .as_ref()
            .map(|d| d.join(self.groundtruth_pattern.format(index)))
    }

    pub fn len(&self) -> usize {
        (self.last + 1).saturating_sub(self.first)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.first > self.last {
            return Err(Error::InvalidInput(format!(
                "sequence range {}..={} is empty",
                self.first, self.last
            )));
        }
        if !self.input_dir.is_dir() {
            return Err(Error::InvalidInput(format!(
                "input directory {} does not exist",
                self.input_dir.display()
            )));
        }
        if let Some(d) = &self.groundtruth_dir {
            if !d.is_dir() {
                return Err(Error::InvalidInput(format!(
                    "ground-truth directory {} does not exist",
                    d.display()
                )));
            }
        }
        Ok(())
    }
}

/// Finds the dominant `<prefix><digits>.<ext>` naming in `dir` and the
/// index range it covers.
fn detect_pattern(dir: &Path, prefix: &str) -> Result<(FramePattern, usize, usize)> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut seen: HashMap<(usize, String), (usize, usize, usize)> = HashMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(rest) = name.strip_prefix(prefix) else { continue };
        let digits = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
        let suffix = &rest[digits..];
        if digits == 0 || !suffix.starts_with('.') {
            continue;
        }
        let Ok(index) = rest[..digits].parse::<usize>() else { continue };
        let e = seen
            .entry((digits, suffix.to_string()))
            .or_insert((0, usize::MAX, 0));
        e.0 += 1;
        e.1 = e.1.min(index);
        e.2 = e.2.max(index);
    }
    let ((digits, suffix), (_, first, last)) = seen
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then_with(|| b.0.cmp(&a.0)))
        .ok_or_else(|| Error::InvalidInput(format!("no '{prefix}NNN.ext' frames in {}", dir.display())))?;
    Ok((FramePattern::new(prefix, digits, &suffix), first, last))
}

pub fn read_temporal_roi(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let nums: Vec<usize> = text
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::decode(path, e.to_string()))?;
    match nums.as_slice() {
        &[first, last] if first <= last => Ok((first, last)),
        _ => Err(Error::decode(path, "expected two ascending integers")),
    }
}

pub fn write_temporal_roi(path: impl AsRef<Path>, first: usize, last: usize) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format!("{first} {last}\n")).map_err(|e| Error::io(path, e))
}

/// One decoded frame with its index and optional ground truth.
#[derive(Clone, Debug)]
pub struct SequenceItem<T> {
    pub index: usize,
    pub frame: Frame<T>,
    pub groundtruth: Option<GroundTruthFrame>,
}

/// Lazily decodes frames in ascending index order.
pub struct Sequence<T> {
    spec: SequenceSpec,
    roi: Option<Frame<f32>>,
    next: usize,
    failed: bool,
    _scalar: PhantomData<T>,
}

impl<T: Real> Sequence<T> {
    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    fn load(&self, index: usize) -> Result<SequenceItem<T>> {
        let path = self.spec.frame_path(index);
        if !path.is_file() {
            return Err(Error::SequenceGap { index, path });
        }
        let frame = read_frame(&path)?;
        let groundtruth = match self.spec.groundtruth_path(index) {
            Some(gt_path) => {
                if !gt_path.is_file() {
                    return Err(Error::SequenceGap { index, path: gt_path });
                }
                let mut gt = decode_groundtruth(&read_frame::<f32>(&gt_path)?)?;
                if let Some(roi) = &self.roi {
                    gt.apply_roi(roi)?;
                }
                Some(gt)
            }
            None => None,
        };
        Ok(SequenceItem {
            index,
            frame,
            groundtruth,
        })
    }
}

impl<T: Real> Iterator for Sequence<T> {
    type Item = Result<SequenceItem<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next > self.spec.last {
            return None;
        }
        let index = self.next;
        self.next += 1;
        let item = self.load(index);
        self.failed = item.is_err();
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.spec.last + 1).saturating_sub(self.next);
        (0, Some(n))
    }
}

pub fn load_sequence<T: Real>(spec: &SequenceSpec) -> Result<Sequence<T>> {
    spec.validate()?;
    let roi = match &spec.roi_path {
        Some(p) => Some(read_frame::<f32>(p)?),
        None => None,
    };
    Ok(Sequence {
        spec: spec.clone(),
        roi,
        next: spec.first,
        failed: false,
        _scalar: PhantomData,
    })
}
